"""Time-dependent potentials V(x, t) with optional analytic x-derivatives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .grid import PeriodicGrid, fd_derivative, spectral_derivative


@dataclass(frozen=True)
class PotentialModel:
    """A real potential sampled on a grid.

    ``derivatives`` maps an order ``a`` to a callable ``(x, t) -> d^a V/dx^a``.
    Orders without an entry fall back to differentiating the sampled ``V``,
    spectrally by default or with finite differences of order ``fd_order``.
    """

    name: str
    value: Callable
    derivatives: Mapping[int, Callable] = field(default_factory=dict)
    time_independent: bool = False
    fd_order: int | None = None

    def __call__(self, x, t):
        return np.broadcast_to(np.asarray(self.value(x, t), dtype=float), np.shape(x))

    def derivative(self, grid: PeriodicGrid, t, a: int) -> np.ndarray:
        x = grid.nodes
        if a == 0:
            return np.array(self(x, t))
        fn = self.derivatives.get(a)
        if fn is not None:
            return np.broadcast_to(np.asarray(fn(x, t), dtype=float), x.shape).copy()
        v = self(x, t)
        if self.fd_order is not None and a <= 4:
            return fd_derivative(grid, v, a, self.fd_order)
        return spectral_derivative(grid, v, a).real

    def sample(self, grid: PeriodicGrid, times, orders) -> dict[int, np.ndarray]:
        """``{a: array of shape (len(times), M)}`` holding ``d^a V(x, t)``."""
        return {a: np.array([self.derivative(grid, t, a) for t in times]) for a in orders}

    def with_fd(self, order: int) -> "PotentialModel":
        """Copy that ignores analytic derivatives and uses finite differences."""
        return PotentialModel(self.name, self.value, {}, self.time_independent, order)


def static(name, fn, derivatives=None):
    """Time-independent potential from ``fn(x)`` and optional ``{a: dfn(x)}``."""
    derivatives = {a: (lambda x, t, d=d: d(x)) for a, d in (derivatives or {}).items()}
    return PotentialModel(name, lambda x, t: fn(x), derivatives, time_independent=True)


def time_reversed(pot: PotentialModel, t_end: float) -> PotentialModel:
    """``W(x, s) = V(x, t_end - s)``, used to run a step backwards in time."""
    derivs = {a: (lambda x, s, f=f: f(x, t_end - s)) for a, f in pot.derivatives.items()}
    return PotentialModel(
        f"{pot.name}-reversed",
        lambda x, s: pot.value(x, t_end - s),
        derivs,
        pot.time_independent,
        pot.fd_order,
    )
