"""Embedded oracle checks behind ``validate``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import grid as _grid
from .grid import make_grid
from .krylov import lanczos_expm, skew_hermitian_expm
from .magnus import MagnusScheme, stability_demo
from .opalg import COMMUTATOR_RULES, commutator_rule_residual, dense_matrix, simplified_commutator_examples
from .quad import POLYNOMIALS, appendix_weights, gl_rule, identity_residuals, rescaled_bernoulli, triangle_weights
from .sim import initial_wavepacket, potential_catalogue

TABLES = ("psi", "varphi1", "varphi2", "phi1", "phi2")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.value = float(self.value)


def band_limited(rng, grid, band):
    """Random real trigonometric polynomial with modes ``|k| <= band``."""
    x = grid.nodes
    k = np.arange(1, band + 1)[:, None]
    c = rng.standard_normal((2, band)) / k.T
    return rng.standard_normal() + c[0] @ np.cos(k * x) + c[1] @ np.sin(k * x)


def check_weights(corrupt: str | None = None) -> Check:
    worst = 0.0
    h = 0.7
    for name in TABLES:
        gold = appendix_weights(name, h)
        if name == corrupt:
            gold = gold.copy()
            gold[0, 0] *= 1.001
        w = triangle_weights(POLYNOMIALS[name], gl_rule(3, h)).w
        worst = max(worst, np.max(np.abs(w - gold)) / np.max(np.abs(gold)))
    return Check("appendix_weights", worst <= 1e-13, worst, 1e-13)


def check_commutators(pairs=8, seed=0) -> Check:
    rng = np.random.default_rng(seed)
    g = make_grid(0, 2 * np.pi, 64)
    worst = 0.0
    for _ in range(pairs):
        f, q = band_limited(rng, g, 5), band_limited(rng, g, 5)
        for rule in COMMUTATOR_RULES:
            worst = max(worst, commutator_rule_residual(rule, g, f, q))
        worst = max(worst, *simplified_commutator_examples(g, f).values())
    return Check("commutator_rules", worst <= 1e-9, worst, 1e-9)


def check_integration_identities(seed=1) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        a = rng.standard_normal((3, 3))
        fs = [lambda s, c=c: c[0] + c[1] * np.sin(2 * s + c[2]) for c in a]
        worst = max(worst, *identity_residuals(*fs, h=float(rng.uniform(0.1, 2.0))))
    return Check("integration_identities", worst <= 1e-12, worst, 1e-12)


def check_vanishing_integrals() -> Check:
    worst = 0.0
    for h in (0.1, 1.0, 2.5):
        rule = gl_rule(6, h)
        for j in (1, 2, 3, 4):
            worst = max(worst, abs(rule.integrate(rescaled_bernoulli(j, h, rule.knots))) / h ** (j + 1))
        for name in ("psi", "phi1", "phi2"):
            total = triangle_weights(POLYNOMIALS[name], rule).w.sum()
            worst = max(worst, abs(total) / h ** (POLYNOMIALS[name].degree + 2))
    return Check("vanishing_integrals", worst <= 1e-13, worst, 1e-13)


def check_unitarity() -> Check:
    g = make_grid(-10, 10, 64)
    pot = potential_catalogue("S")
    u = initial_wavepacket(g)
    worst = 0.0
    for variant in ("theta2", "theta3", "theta4"):
        gen = MagnusScheme(variant, 0.05).generator(pot, g, 1.3)
        A = dense_matrix(gen)
        worst = max(worst, np.max(np.abs(A + A.conj().T)) / np.max(np.abs(A)))
        w = skew_hermitian_expm(A) @ u
        worst = max(worst, abs(np.linalg.norm(w) - np.linalg.norm(u)))
        w = lanczos_expm(gen, u, 20)
        worst = max(worst, abs(np.linalg.norm(w) - np.linalg.norm(u)) / np.linalg.norm(u))
    rows = stability_demo(make_grid(0, 2 * np.pi, 32), np.sin(make_grid(0, 2 * np.pi, 32).nodes), [0.1, 1.0])
    worst = max(worst, *(abs(r.norm_commutator - 1) for r in rows))
    return Check("unitarity", worst <= 1e-10, worst, 1e-10)


def check_fft_budget() -> Check:
    g = make_grid(-10, 10, 180)
    pot = potential_catalogue("S")
    u = initial_wavepacket(g)
    gap = 0
    for variant, expected in (("theta2", 4), ("theta3", 6), ("theta4", 8)):
        gen = MagnusScheme(variant, 0.01).generator(pot, g, 0.5)
        before = _grid.fft_counter()
        gen(u)
        gap = max(gap, abs(_grid.fft_counter() - before - expected))
    return Check("fft_budget", gap == 0, float(gap), 0.0)


SUITE = (
    check_weights,
    check_commutators,
    check_integration_identities,
    check_vanishing_integrals,
    check_unitarity,
    check_fft_budget,
)


def run_all(corrupt: str | None = None) -> tuple[list[Check], float]:
    start = time.perf_counter()
    checks = []
    for fn in SUITE:
        checks.append(fn(corrupt) if fn is check_weights else fn())
    return checks, time.perf_counter() - start
