"""Time quadrature: Gauss-Legendre rules on [0, h], Bernoulli moments and
triangle weights for the double integrals of the potential.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

SQRT35 = np.sqrt(3 / 5)


@dataclass(frozen=True)
class GaussLegendreRule:
    h: float
    knots: np.ndarray
    weights: np.ndarray

    @property
    def n_knots(self) -> int:
        return len(self.knots)

    def integrate(self, values):
        """``sum_k w_k values[k]`` along the first axis."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


@lru_cache(maxsize=256)
def gl_rule(n: int, h: float) -> GaussLegendreRule:
    """n-point Gauss-Legendre rule mapped to ``[0, h]``."""
    if not 1 <= n <= 64:
        raise ValueError(f"number of knots must be in 1..64, got {n}")
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    x, w = leggauss(n)
    knots = 0.5 * h * (1 + x)
    weights = 0.5 * h * w
    knots.flags.writeable = False
    weights.flags.writeable = False
    return GaussLegendreRule(float(h), knots, weights)


_BERNOULLI = (
    lambda x: np.ones_like(x),
    lambda x: x - 0.5,
    lambda x: x * x - x + 1 / 6,
    lambda x: x**3 - 1.5 * x**2 + 0.5 * x,
    lambda x: x**4 - 2 * x**3 + x**2 - 1 / 30,
)


def rescaled_bernoulli(j: int, h: float, zeta):
    """``h^j B_j(zeta / h)``."""
    if not 0 <= j < len(_BERNOULLI):
        raise ValueError(f"Bernoulli polynomial B_{j} not supported")
    zeta = np.asarray(zeta, dtype=float)
    return h**j * _BERNOULLI[j](zeta / h)


# --- bivariate polynomials f(h, zeta, xi) ------------------------------------


@dataclass(frozen=True)
class BivariatePolynomial:
    """Sum of ``c * h^p zeta^q xi^r`` stored as ``{(p, q, r): c}``."""

    name: str
    coeffs: tuple

    def __call__(self, h, zeta, xi):
        zeta = np.asarray(zeta, dtype=float)
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(np.broadcast(zeta, xi).shape)
        for (p, q, r), c in self.coeffs:
            out = out + c * h**p * zeta**q * xi**r
        return out

    @property
    def degree(self) -> int:
        return max(p + q + r for (p, q, r), _ in self.coeffs)

    def __add__(self, other):
        merged = dict(self.coeffs)
        for key, c in other.coeffs:
            merged[key] = merged.get(key, 0.0) + c
        return BivariatePolynomial(f"{self.name}+{other.name}", tuple(sorted(merged.items())))


def _poly(name, **terms):
    # keys like h2, h1z1, z1x1 ...
    coeffs = []
    for key, c in terms.items():
        p = q = r = 0
        for var, power in zip(key[::2], key[1::2]):
            if var == "h":
                p = int(power)
            elif var == "z":
                q = int(power)
            elif var == "x":
                r = int(power)
        coeffs.append(((p, q, r), float(c)))
    return BivariatePolynomial(name, tuple(sorted(coeffs)))


ONE = _poly("one", h0=1)
PSI = _poly("psi", z1=1, x1=-1, h1=-1 / 3)
VARPHI1 = _poly("varphi1", h2=1, h1x1=-4, z1x1=2)
VARPHI2 = _poly("varphi2", h2=1, h1z1=-4, z2=4, z1x1=-2)
PHI1 = _poly("phi1", h2=1, h1z1=-6, h1x1=6, z1x1=6, z2=3, x2=-12)
PHI2 = _poly("phi2", h2=1, h1z1=-6, h1x1=6, z1x1=-6, z2=5)

POLYNOMIALS = {p.name: p for p in (ONE, PSI, VARPHI1, VARPHI2, PHI1, PHI2)}


def _lagrange_basis(knots, t):
    """Matrix L[j, i] = l_j(t_i) for the cardinal functions on ``knots``."""
    t = np.asarray(t, dtype=float)
    L = np.ones((len(knots), len(t)))
    for j, tj in enumerate(knots):
        for m, tm in enumerate(knots):
            if m != j:
                L[j] *= (t - tm) / (tj - tm)
    return L


@dataclass(frozen=True)
class TriangleWeights:
    f: BivariatePolynomial
    rule: GaussLegendreRule
    w: np.ndarray


def triangle_weights(f: BivariatePolynomial, rule: GaussLegendreRule) -> TriangleWeights:
    """``w[j, k] = int_0^h int_0^zeta f(h, zeta, xi) l_j(zeta) l_k(xi) dxi dzeta``.

    ``j`` indexes the outer variable ``zeta``, ``k`` the inner ``xi``. The
    integrand is polynomial, so nested Gauss rules of high enough order give
    the weights to roundoff.
    """
    h = rule.h
    n = rule.n_knots
    q = n + f.degree + 2
    zeta, wz = gl_rule(q, h).knots, gl_rule(q, h).weights
    s, ws = leggauss(q)
    s = 0.5 * (1 + s)
    ws = 0.5 * ws
    Lz = _lagrange_basis(rule.knots, zeta)  # (n, q)
    w = np.zeros((n, n))
    for a in range(q):
        xi = zeta[a] * s
        inner = (ws * zeta[a] * f(h, zeta[a], xi)) @ _lagrange_basis(rule.knots, xi).T  # (n,)
        w += wz[a] * np.outer(Lz[:, a], inner)
    return TriangleWeights(f, rule, w)


def appendix_weights(name: str, h: float) -> np.ndarray:
    """Closed-form three-knot weight matrices (golden values)."""
    r = SQRT35
    if name == "psi":
        base = np.array([[-139, 26, 239], [26, -304, 26], [239, 26, -139]]) / 63
        skew = 5 * r * np.array([[0, 0, -1], [0, 0, 0], [1, 0, 0]])
        return (h / 6) ** 3 * (base + skew)
    s4 = (h / 6) ** 4
    if name == "varphi1":
        return 2 / 7 * s4 * (
            np.array([[-11, -62, 136], [190, -128, 190], [136, -62, -11]])
            + r * np.array([[175, 58, -170], [222, 0, -222], [170, -58, -175]])
        )
    if name == "varphi2":
        return 2 * s4 * (
            np.array([[-5, -14, 10], [-2, -32, -2], [10, -14, -5]])
            + r / 7 * np.array([[145, 134, -90], [-46, 0, 46], [90, -134, -145]])
        )
    if name == "phi1":
        # entry [2, 1] of the irrational part is +34; with -34 the table
        # would not sum to zero and matches no quadratic f
        return 2 / 7 * s4 * (
            np.array([[-17, 160, -143], [-92, 184, -92], [-143, 160, -17]])
            + 6 * r * np.array([[25, -34, 30], [-16, 0, 16], [-30, 34, -25]])
        )
    if name == "phi2":
        return s4 * (
            6 * np.array([[3, 0, -3], [-4, 8, -4], [-3, 0, 3]])
            + 4 / 7 * r * np.array([[25, -2, 40], [-48, 0, 48], [-40, 2, -25]])
        )
    raise KeyError(name)


# --- functionals of the potential ---------------------------------------------

MOMENTS = frozenset({(0, 0), (0, 1), (1, 1), (2, 1), (3, 1), (1, 3)})


def line_moment(pot, grid, j: int, k: int, a: int, rule: GaussLegendreRule, t0: float = 0.0, samples=None):
    """Quadrature for ``d^a/dx^a int_0^h Bt_j(h, z)^k V(x, t0 + z) dz``.

    ``samples`` may carry precomputed ``{a: d^a V at the knots}``.
    """
    if (j, k) not in MOMENTS:
        raise ValueError(f"moment mu_({j},{k}) is not used by any expansion; supported: {sorted(MOMENTS)}")
    if samples is None:
        samples = pot.sample(grid, t0 + rule.knots, [a])
    weights = rule.weights * rescaled_bernoulli(j, rule.h, rule.knots) ** k
    return weights @ samples[a]


def triangle_functional(pot, grid, tw: TriangleWeights, a: int, b: int, t0: float = 0.0, samples=None):
    """``sum_jk w[j, k] d^a V(t0 + tau_j) d^b V(t0 + tau_k)``."""
    if samples is None:
        samples = pot.sample(grid, t0 + tw.rule.knots, sorted({a, b}))
    A, B = samples[a], samples[b]
    if len(A) != tw.rule.n_knots:
        raise ValueError("potential samples do not match the weight table's rule")
    return np.einsum("jk,jx,kx->x", tw.w, A, B)


def _nested_gauss(n=48):
    x, w = leggauss(n)
    return 0.5 * (1 + x), 0.5 * w


def _cumulative(f, upper, lower=0.0, n=48):
    """``int_lower^upper f`` for arrays of limits, by an n-point Gauss rule."""
    s, ws = _nested_gauss(n)
    upper = np.asarray(upper, dtype=float)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), upper.shape)
    span = upper - lower
    pts = lower[..., None] + span[..., None] * s
    return span * (f(pts) @ ws)


def identity_residuals(f1, f2, f3, h: float, n: int = 48) -> tuple[float, float]:
    """Absolute gaps in the two integration-by-parts reductions on ``[0, h]``.

    ``int f1(s) F2(s) ds`` against ``int f2(s) int_s^h f1`` (one fold), and
    ``int f1 F2 F3`` against ``int (int_s^h f1)(f2 F3 + f3 F2)`` (two folds),
    with ``Fi(s) = int_0^s fi``.
    """
    s, ws = _nested_gauss(n)
    t = h * s
    wt = h * ws
    F2 = _cumulative(f2, t, n=n)
    F3 = _cumulative(f3, t, n=n)
    tail1 = _cumulative(f1, np.full_like(t, h), lower=t, n=n)
    lhs1 = wt @ (f1(t) * F2)
    rhs1 = wt @ (f2(t) * tail1)
    lhs2 = wt @ (f1(t) * F2 * F3)
    rhs2 = wt @ (tail1 * (f2(t) * F3 + f3(t) * F2))
    return abs(lhs1 - rhs1), abs(lhs2 - rhs2)
