"""Magnus-type generators for u_t = i u_xx - i V(x, t) u.

The simplified-commutator expansions are returned as
:class:`~magnus_lanczos.opalg.AntiCommutatorSum` objects:

* ``theta2``: order four, ``i h d2 - i mu00 - 2 <d mu11>_1``
* ``theta3``: ``theta2 + i L_psi^{1,1} + 2i <d2 mu21>_2``
* ``theta4``: order six, degrees 0..3

``mu_jk`` is the moment ``int_0^h Bt_j(h, z)^k V(t0 + z) dz`` of the step and
``L_f^{a,b}`` the triangle functional of ``d^a V`` and ``d^b V``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .grid import GridError, PeriodicGrid, differentiation_matrix, fft, ifft, spectral_derivative
from .opalg import AntiCommutatorSum, dense_matrix
from .potential import PotentialModel
from .quad import (
    PHI1,
    PHI2,
    PSI,
    VARPHI1,
    VARPHI2,
    GaussLegendreRule,
    gl_rule,
    rescaled_bernoulli,
    triangle_weights,
)

VARIANTS = ("midpoint", "m4", "theta2", "theta3", "theta4")

DEFAULT_KNOTS = {"midpoint": 1, "m4": 2, "theta2": 2, "theta3": 3, "theta4": 3}


@dataclass
class _StepTables:
    """Per-(h, rule) data reused by every step."""

    rule: GaussLegendreRule
    bernoulli: dict
    psi: np.ndarray | None = None
    odd_12: np.ndarray | None = None
    odd_21: np.ndarray | None = None


def step_tables(h: float, rule: GaussLegendreRule | None = None, n_knots: int = 3, triangle=True) -> _StepTables:
    rule = rule or gl_rule(n_knots, h)
    if not np.isclose(rule.h, h, rtol=1e-14, atol=0):
        raise ValueError(f"quadrature rule built for h={rule.h}, step is h={h}")
    bern = {j: rule.weights * rescaled_bernoulli(j, h, rule.knots) for j in range(4)}
    tables = _StepTables(rule, bern)
    if triangle:
        tables.psi = triangle_weights(PSI, rule).w
        tables.odd_12 = triangle_weights(VARPHI1 + PHI1, rule).w
        tables.odd_21 = triangle_weights(VARPHI2 + PHI2, rule).w
    return tables


def _lam(w, A, B):
    return np.einsum("jk,jx,kx->x", w, A, B)


def build_theta2(pot: PotentialModel, grid: PeriodicGrid, h: float, t0: float = 0.0, rule=None, tables=None):
    """Order-four generator ``theta0 + <theta1>_1 + i h d2``."""
    if h <= 0:
        raise ValueError("step must be positive")
    tables = tables or step_tables(h, rule, n_knots=2, triangle=False)
    D = pot.sample(grid, t0 + tables.rule.knots, (0, 1))
    b = tables.bernoulli
    theta0 = -1j * (b[0] @ D[0])
    theta1 = -2 * (b[1] @ D[1])
    return AntiCommutatorSum(grid, {0: theta0, 1: theta1, 2: 1j * h})


def build_theta3(pot: PotentialModel, grid: PeriodicGrid, h: float, t0: float = 0.0, rule=None, tables=None):
    """``theta2`` plus the ``psi`` triangle term and ``2i <d2 mu21>_2``."""
    if h <= 0:
        raise ValueError("step must be positive")
    tables = tables or step_tables(h, rule, n_knots=3)
    D = pot.sample(grid, t0 + tables.rule.knots, (0, 1, 2))
    b = tables.bernoulli
    theta0 = -1j * (b[0] @ D[0]) + 1j * _lam(tables.psi, D[1], D[1])
    theta1 = -2 * (b[1] @ D[1])
    theta2 = 1j * h + 2j * (b[2] @ D[2])
    return AntiCommutatorSum(grid, {0: theta0, 1: theta1, 2: theta2})


def build_theta4(
    pot: PotentialModel,
    grid: PeriodicGrid,
    h: float,
    t0: float = 0.0,
    rule=None,
    tables=None,
    literal: bool = False,
):
    """Order-six generator ``theta0 + <theta1>_1 + <theta2>_2 + <theta3>_3``.

    The linear-in-V part follows ``sum_n (-1)^n/n! ad_B^n int Bt_n V`` with
    ``B = i d2``, which puts ``-i/2 d4 mu21`` into ``theta0`` and
    ``-d5 mu31`` into ``theta1``. ``literal=True`` instead uses ``+i/4 d4 mu21``
    and drops the ``d5`` term; both forms agree whenever ``d2 V`` is constant
    in time and ``d3 V`` vanishes, but only the default is sixth order in
    general.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    tables = tables or step_tables(h, rule, n_knots=3)
    if tables.rule.n_knots < 3:
        raise ValueError("the order-six expansion needs at least three knots")
    orders = (0, 1, 2, 3, 4) if literal else (0, 1, 2, 3, 4, 5)
    D = pot.sample(grid, t0 + tables.rule.knots, orders)
    b = tables.bernoulli
    mu21_d2 = b[2] @ D[2]
    mu21_d4 = b[2] @ D[4]
    theta0 = -1j * (b[0] @ D[0]) + 1j * _lam(tables.psi, D[1], D[1])
    theta1 = -2 * (b[1] @ D[1]) + (_lam(tables.odd_12, D[1], D[2]) + _lam(tables.odd_21, D[2], D[1])) / 6
    if literal:
        theta0 = theta0 + 0.25j * mu21_d4
    else:
        theta0 = theta0 - 0.5j * mu21_d4
        theta1 = theta1 - b[3] @ D[5]
    theta2 = 1j * h + 2j * mu21_d2
    theta3 = 4 / 3 * (b[3] @ D[3])
    return AntiCommutatorSum(grid, {0: theta0, 1: theta1, 2: theta2, 3: theta3})


BUILDERS = {"theta2": build_theta2, "theta3": build_theta3, "theta4": build_theta4}


class StandardM4:
    """Two-node fourth-order Magnus ``h/2 (A1 + A2) - sqrt(3) h^2/12 [A1, A2]``.

    ``A(t) = i K2 - i D_V(t)``. The matrix-free apply evaluates the commutator
    as nested products ``A1 A2 v - A2 A1 v``: ten FFTs per call.
    """

    def __init__(self, pot: PotentialModel, grid: PeriodicGrid, h: float, t0: float = 0.0):
        self.grid = grid
        self.h = h
        tau = gl_rule(2, h).knots
        self.v1 = np.asarray(pot(grid.nodes, t0 + tau[0]), dtype=float)
        self.v2 = np.asarray(pot(grid.nodes, t0 + tau[1]), dtype=float)
        self.c = np.sqrt(3) * h**2 / 12

    def _A(self, V, v):
        return 1j * ifft(self.grid.symbol(2) * fft(v)) - 1j * V * v

    def __call__(self, v):
        h = self.h
        mean = 1j * h * ifft(self.grid.symbol(2) * fft(v)) - 0.5j * h * (self.v1 + self.v2) * v
        comm = self._A(self.v1, self._A(self.v2, v)) - self._A(self.v2, self._A(self.v1, v))
        return mean - self.c * comm

    def dense(self) -> np.ndarray:
        K2 = differentiation_matrix(self.grid, 2)
        A1 = 1j * K2 - 1j * np.diag(self.v1)
        A2 = 1j * K2 - 1j * np.diag(self.v2)
        return 0.5 * self.h * (A1 + A2) - self.c * (A1 @ A2 - A2 @ A1)


def build_standard_m4(pot: PotentialModel, grid: PeriodicGrid, h: float, t0: float = 0.0) -> StandardM4:
    return StandardM4(pot, grid, h, t0)


def midpoint_step(pot: PotentialModel, grid: PeriodicGrid, h: float, t0: float, u) -> np.ndarray:
    """Exponential midpoint rule with Strang splitting.

    ``exp(i h/2 K2) exp(-i h D_V(t0 + h/2)) exp(i h/2 K2) u``
    """
    half = np.exp(0.5j * h * grid.symbol(2))
    w = ifft(half * fft(u))
    w = np.exp(-1j * h * pot(grid.nodes, t0 + 0.5 * h)) * w
    return ifft(half * fft(w))


def generator_dense(variant: str, pot, grid, h, t0=0.0, n_knots=None, literal=False):
    """Dense matrix of a Magnus generator (for oracles and small grids)."""
    if variant == "m4":
        return build_standard_m4(pot, grid, h, t0).dense()
    if variant not in BUILDERS:
        raise ValueError(f"no generator for variant {variant!r}")
    n = n_knots or DEFAULT_KNOTS[variant]
    kwargs = {"literal": literal} if variant == "theta4" else {}
    return dense_matrix(BUILDERS[variant](pot, grid, h, t0, rule=gl_rule(n, h), **kwargs))


@dataclass
class MagnusScheme:
    """A propagator recipe with its per-step quadrature tables cached.

    ``generator(t0)`` returns a callable operator (``AntiCommutatorSum`` or
    :class:`StandardM4`) for the step ``[t0, t0 + h]``.
    """

    variant: str
    h: float
    n_knots: int | None = None
    literal: bool = False
    _tables: _StepTables | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown scheme {self.variant!r}; choose from {VARIANTS}")
        if self.n_knots is None:
            self.n_knots = DEFAULT_KNOTS[self.variant]
        minimum = {"theta2": 1, "theta3": 2, "theta4": 3}.get(self.variant, 1)
        if self.n_knots < minimum:
            raise ValueError(f"{self.variant} needs at least {minimum} knots")
        if self.variant in BUILDERS:
            self._tables = step_tables(self.h, n_knots=self.n_knots, triangle=self.variant != "theta2")

    @property
    def order(self) -> int:
        return {"midpoint": 2, "m4": 4, "theta2": 4, "theta3": 4, "theta4": 6}[self.variant]

    def generator(self, pot, grid, t0):
        if self.variant == "m4":
            return StandardM4(pot, grid, self.h, t0)
        if self.variant == "midpoint":
            raise ValueError("the midpoint rule is applied as a splitting, not through a generator")
        if self.variant == "theta4":
            return build_theta4(pot, grid, self.h, t0, tables=self._tables, literal=self.literal)
        return BUILDERS[self.variant](pot, grid, self.h, t0, tables=self._tables)


# --- loss of skew-symmetry under naive discretisation -------------------------


@dataclass
class StabilityRow:
    t: float
    norm_commutator: float
    norm_naive: float


def stability_matrices(grid: PeriodicGrid, V):
    """``[K2, D_V]`` and the naive ``D_V'' + 2 D_V' K1`` of the same operator."""
    if grid.n_points > 256:
        raise GridError("stability demo is limited to 256 grid points")
    V = np.asarray(V, dtype=float)
    K1 = differentiation_matrix(grid, 1)
    K2 = differentiation_matrix(grid, 2)
    D = np.diag(V)
    V1 = spectral_derivative(grid, V, 1).real
    V2 = spectral_derivative(grid, V, 2).real
    A = K2 @ D - D @ K2
    B = np.diag(V2) + 2 * V1[:, None] * K1
    return A, B


def stability_demo(grid: PeriodicGrid, V, t_list) -> list[StabilityRow]:
    """2-norms of ``exp(tA)`` and ``exp(tB)`` for the two discretisations."""
    A, B = stability_matrices(grid, V)
    return [
        StabilityRow(float(t), np.linalg.norm(expm(t * A), 2), np.linalg.norm(expm(t * B), 2))
        for t in t_list
    ]
