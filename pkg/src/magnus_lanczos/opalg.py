"""Anti-commutator operators <f>_k = (f d^k + d^k f) / 2 on a periodic grid.

A sum ``theta_0 + sum_k <theta_k>_k`` is stored as one coefficient per degree.
A coefficient is either a grid function or a scalar; scalar coefficients
reduce to ``c K_k`` and are applied purely in Fourier space, which is what
lets them share the final inverse transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number
from typing import Callable, Mapping

import numpy as np

from .grid import GridError, PeriodicGrid, differentiation_matrix, fft, ifft, spectral_derivative

DENSE_LIMIT = 512


@dataclass(frozen=True)
class AntiCommutatorSum:
    """``theta_0 + <theta_1>_1 + <theta_2>_2 + ...`` with at most one term per degree."""

    grid: PeriodicGrid
    terms: Mapping[int, object]

    def __post_init__(self):
        clean = {}
        for k, c in self.terms.items():
            if k < 0:
                raise ValueError(f"negative degree {k}")
            if isinstance(c, Number):
                clean[int(k)] = complex(c)
            else:
                c = np.asarray(c, dtype=complex)
                self.grid.check(c)
                c.flags.writeable = False
                clean[int(k)] = c
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    @property
    def degrees(self):
        return tuple(self.terms)

    def coefficient(self, k):
        """Coefficient of degree ``k`` as a full grid function (zero if absent)."""
        c = self.terms.get(k, 0.0)
        return np.broadcast_to(np.asarray(c, dtype=complex), (self.grid.n_points,)).copy()

    def is_skew_hermitian(self, tol=1e-12) -> bool:
        """Even degrees must carry imaginary coefficients, odd degrees real ones."""
        scale = max((np.max(np.abs(c)) for c in self.terms.values()), default=0.0)
        for k, c in self.terms.items():
            part = np.real(c) if k % 2 == 0 else np.imag(c)
            if np.max(np.abs(part), initial=0.0) > tol * max(scale, 1.0):
                return False
        return True

    def scaled(self, alpha) -> "AntiCommutatorSum":
        return AntiCommutatorSum(self.grid, {k: alpha * c for k, c in self.terms.items()})

    def __call__(self, v):
        return apply_sum(self, v)


def apply_term(grid: PeriodicGrid, f, k: int, v) -> np.ndarray:
    """Apply ``<f>_k`` to ``v`` the straightforward way."""
    grid.check(v)
    if isinstance(f, Number):
        return f * spectral_derivative(grid, v, k) if k else f * np.asarray(v, dtype=complex)
    grid.check(f)
    f = np.asarray(f)
    if k == 0:
        return f * v
    return 0.5 * (f * spectral_derivative(grid, v, k) + spectral_derivative(grid, f * v, k))


def apply_sum(s: AntiCommutatorSum, v) -> np.ndarray:
    """Apply the sum with the fused transform layout.

    ``v`` is transformed once. Every grid coefficient of degree k >= 1 costs
    one inverse transform (``D_theta F^-1 D_c F v``) and one forward transform
    (``F D_theta v``); all Fourier-side contributions then share a single
    inverse. Degrees {0,1,2,3} with grid coefficients therefore cost 8 FFTs.
    """
    grid = s.grid
    grid.check(v)
    v = np.asarray(v, dtype=complex)
    c0, scalar_symbol, grid_terms = _plan(s)
    out = c0 * v if c0 is not None else np.zeros(grid.n_points, dtype=complex)
    if scalar_symbol is None and not grid_terms:
        return out
    vhat = fft(v)
    spectral = scalar_symbol * vhat if scalar_symbol is not None else np.zeros(grid.n_points, dtype=complex)
    for half_c, ck in grid_terms:
        out += half_c * ifft(ck * vhat)
        spectral += ck * fft(half_c * v)
    out += ifft(spectral)
    return out


def _plan(s: AntiCommutatorSum):
    """Cached ``(theta0, combined scalar symbol, [(c/2, c_k), ...])``."""
    plan = s.__dict__.get("_plan")
    if plan is None:
        grid = s.grid
        c0 = s.terms.get(0)
        scalar_symbol = None
        grid_terms = []
        for k, c in s.terms.items():
            if k == 0:
                continue
            ck = grid.symbol(k)
            if isinstance(c, complex):
                scalar_symbol = c * ck if scalar_symbol is None else scalar_symbol + c * ck
            else:
                grid_terms.append((0.5 * c, ck))
        plan = (c0, scalar_symbol, grid_terms)
        object.__setattr__(s, "_plan", plan)
    return plan


def fft_cost(s: AntiCommutatorSum) -> int:
    """Transforms used by one :func:`apply_sum` call."""
    higher = [c for k, c in s.terms.items() if k > 0]
    if not higher:
        return 0
    return 2 + 2 * sum(1 for c in higher if not isinstance(c, complex))


def dense_matrix(s: AntiCommutatorSum) -> np.ndarray:
    """Explicit ``D_theta0 + sum_k (D_thetak K_k + K_k D_thetak)/2``."""
    grid = s.grid
    if grid.n_points > DENSE_LIMIT:
        raise GridError(f"dense matrix limited to {DENSE_LIMIT} points, grid has {grid.n_points}")
    m = grid.n_points
    out = np.zeros((m, m), dtype=complex)
    for k, c in s.terms.items():
        c = s.coefficient(k)
        if k == 0:
            out[np.diag_indices(m)] += c
        else:
            K = differentiation_matrix(grid, k)
            out += 0.5 * (c[:, None] * K + K * c[None, :])
    return out


def bracket(grid: PeriodicGrid, f, k: int) -> np.ndarray:
    """Dense ``<f>_k``."""
    return dense_matrix(AntiCommutatorSum(grid, {k: f}))


# --- commutator simplification rules -------------------------------------
#
# Each rule maps (f, g) to the left-hand commutator's degrees and a list of
# (degree, coefficient function) pairs for the simplified right-hand side.
# ``d`` is a dict of spectral derivatives: d["f", j] = d^j f.

def _rhs_10(d):
    return [(0, d["f", 0] * d["g", 1])]


def _rhs_11(d):
    return [(1, d["f", 0] * d["g", 1] - d["f", 1] * d["g", 0])]


def _rhs_20(d):
    return [(1, 2 * d["f", 0] * d["g", 1])]


def _rhs_21(d):
    return [
        (2, 2 * d["f", 0] * d["g", 1] - d["f", 1] * d["g", 0]),
        (0, -0.5 * (2 * d["f", 1] * d["g", 2] + d["f", 0] * d["g", 3])),
    ]


def _rhs_22(d):
    return [
        (3, 2 * (d["f", 0] * d["g", 1] - d["f", 1] * d["g", 0])),
        (1, 2 * d["f", 2] * d["g", 1] - 2 * d["f", 1] * d["g", 2] + d["f", 3] * d["g", 0] - d["f", 0] * d["g", 3]),
    ]


def _rhs_30(d):
    return [
        (2, 3 * d["f", 0] * d["g", 1]),
        (0, -0.5 * (3 * d["f", 1] * d["g", 2] + d["f", 0] * d["g", 3])),
    ]


def _rhs_40(d):
    return [
        (3, 4 * d["f", 0] * d["g", 1]),
        (1, -2 * (3 * d["f", 1] * d["g", 2] + d["f", 0] * d["g", 3])),
    ]


COMMUTATOR_RULES: dict[str, tuple[int, int, Callable]] = {
    "[1,0]": (1, 0, _rhs_10),
    "[1,1]": (1, 1, _rhs_11),
    "[2,0]": (2, 0, _rhs_20),
    "[2,1]": (2, 1, _rhs_21),
    "[2,2]": (2, 2, _rhs_22),
    "[3,0]": (3, 0, _rhs_30),
    "[4,0]": (4, 0, _rhs_40),
}


def _derivs(grid, name, f, n=4):
    return {(name, j): spectral_derivative(grid, f, j).real for j in range(n + 1)}


def bandwidth(grid: PeriodicGrid, f, tol=1e-12) -> int:
    """Largest |mode index| carrying more than ``tol`` of the peak Fourier amplitude."""
    fhat = np.abs(np.fft.fft(f))
    if fhat.max() == 0:
        return 0
    idx = np.fft.fftfreq(grid.n_points, d=1.0 / grid.n_points)
    return int(np.max(np.abs(idx[fhat > tol * fhat.max()])))


def band_projector(grid: PeriodicGrid, band: int) -> np.ndarray:
    """Dense projector onto Fourier modes with |index| <= ``band``."""
    m = grid.n_points
    idx = np.fft.fftfreq(m, d=1.0 / m)
    mask = (np.abs(idx) <= band).astype(float)
    return np.fft.ifft(mask[:, None] * np.fft.fft(np.eye(m), axis=0), axis=0)


def _residual(grid, lhs, rhs, band):
    # The identities are exact on inputs whose products with the coefficient
    # functions stay below the Nyquist mode; compare on that subspace.
    keep = grid.n_points // 2 - 1 - band
    if keep < 0:
        raise ValueError("coefficient functions are not resolved on this grid")
    P = band_projector(grid, keep)
    lhs = lhs @ P
    rhs = rhs @ P
    scale = np.max(np.abs(lhs))
    err = np.max(np.abs(lhs - rhs))
    return err / scale if scale > 1e-300 else err


def commutator_rule_residual(rule_id: str, grid: PeriodicGrid, f, g) -> float:
    """Relative max-norm gap between ``[<f>_p, <g>_q]`` and its simplified form.

    Both sides are dense matrices; derivatives of ``f`` and ``g`` are spectral.
    When the left side vanishes identically the absolute gap is returned.
    """
    try:
        p, q, rhs_fn = COMMUTATOR_RULES[rule_id]
    except KeyError:
        raise ValueError(f"unknown commutator rule {rule_id!r}; known: {sorted(COMMUTATOR_RULES)}") from None
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    F = bracket(grid, f, p)
    G = bracket(grid, g, q)
    lhs = F @ G - G @ F
    d = _derivs(grid, "f", f) | _derivs(grid, "g", g)
    rhs = sum(bracket(grid, c, k) for k, c in rhs_fn(d))
    return _residual(grid, lhs, rhs, 2 * max(bandwidth(grid, f), bandwidth(grid, g)))


def simplified_commutator_examples(grid: PeriodicGrid, V) -> dict[str, float]:
    """Check the three nested-commutator simplifications for a sample potential.

    ``[i d2, iV] = -2<V'>_1``, ``[iV, [i d2, iV]] = 2i (V')^2`` and
    ``[i d2, [i d2, iV]] = i V'''' - 4i <V''>_2``.
    """
    V = np.asarray(V, dtype=float)
    K2 = 1j * differentiation_matrix(grid, 2)
    iV = np.diag(1j * V.astype(complex))
    d = _derivs(grid, "V", V)
    c1 = K2 @ iV - iV @ K2
    c2 = iV @ c1 - c1 @ iV
    c3 = K2 @ c1 - c1 @ K2
    band = 2 * bandwidth(grid, V)
    return {
        "[i d2, iV]": _residual(grid, c1, -2 * bracket(grid, d["V", 1], 1), band),
        "[iV, [i d2, iV]]": _residual(grid, c2, 2j * bracket(grid, d["V", 1] ** 2, 0), band),
        "[i d2, [i d2, iV]]": _residual(
            grid, c3, 1j * bracket(grid, d["V", 4], 0) - 4j * bracket(grid, d["V", 2], 2), band
        ),
    }
