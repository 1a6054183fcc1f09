"""Propagation driver, the double-well experiment catalogue and error studies."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad as scipy_quad

from . import grid as _grid
from .grid import PeriodicGrid, make_grid
from .krylov import dense_expm, lanczos_expm, skew_hermitian_expm
from .magnus import MagnusScheme, StandardM4, midpoint_step
from .opalg import AntiCommutatorSum, dense_matrix, fft_cost
from .potential import PotentialModel

EXPONENTIATORS = ("dense", "expm", "lanczos")


class SimulationAborted(RuntimeError):
    """Non-finite values appeared in the state."""

    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state at step {step} (t = {t:.6g})")
        self.step = step
        self.t = t


# --- potentials -----------------------------------------------------------


def envelope_pulse(t, omega=10.0, T=5.0, envelope="literal"):
    """``S(t) = sin((pi t/T)^2) sin(omega t)``; ``envelope="sin2"`` uses ``sin(pi t/T)^2``."""
    s = np.pi * np.asarray(t) / T
    env = np.sin(s * s) if envelope == "literal" else np.sin(s) ** 2
    return env * np.sin(omega * np.asarray(t))


def exp_pulse(t, omega=100.0):
    """``E(t) = exp(2 sin(omega t)) - 1``."""
    return np.exp(2 * np.sin(omega * np.asarray(t))) - 1


def mean_field_integral(omega=100.0, T=5.0) -> float:
    """``int_0^T E(t) dt`` by adaptive quadrature."""
    val, _ = scipy_quad(lambda t: exp_pulse(t, omega), 0.0, T, limit=2000, epsabs=1e-12, epsrel=1e-12)
    return float(val)


def _double_well(extra_value, extra_slope):
    """``x^4 - 20x^2`` plus a field ``g(t) x`` given as ``extra_slope(t)``."""
    derivs = {
        1: lambda x, t: 4 * x**3 - 40 * x + extra_slope(t),
        2: lambda x, t: 12 * x**2 - 40 + 0 * x,
        3: lambda x, t: 24 * x,
        4: lambda x, t: 24.0 + 0 * x,
    }
    for a in range(5, 9):
        derivs[a] = lambda x, t: 0 * x
    return (lambda x, t: x**4 - 20 * x**2 + extra_value(x, t)), derivs


POTENTIAL_IDS = ("D", "S", "E", "M", "custom")


def potential_catalogue(pid: str, params: dict | None = None) -> PotentialModel:
    """Potentials of the double-well experiments.

    * ``D``: ``x^4 - 20 x^2``
    * ``S``: ``D + amplitude * S(t) x`` (amplitude 10, omega 10)
    * ``E``: ``D - amplitude * E(t) x`` (amplitude 25, omega 100)
    * ``M``: ``D - slope x`` with the time-averaged field (slope 32.25415)
    * ``custom``: ``expr`` in ``x`` and ``t`` using numpy names
    """
    p = dict(params or {})
    if pid == "D":
        value, derivs = _double_well(lambda x, t: 0 * x, lambda t: 0.0)
        return PotentialModel("D", value, derivs, time_independent=True)
    if pid == "S":
        amp = float(p.get("amplitude", 10.0))
        om = float(p.get("omega", 10.0))
        T = float(p.get("pulse_T", p.get("t_final", 5.0)))
        env = p.get("envelope", "literal")
        if env not in ("literal", "sin2"):
            raise ValueError(f"unknown envelope {env!r}")
        f = lambda t: amp * envelope_pulse(t, om, T, env)
        value, derivs = _double_well(lambda x, t: f(t) * x, f)
        return PotentialModel("S", value, derivs)
    if pid == "E":
        amp = float(p.get("amplitude", 25.0))
        om = float(p.get("omega", 100.0))
        f = lambda t: -amp * exp_pulse(t, om)
        value, derivs = _double_well(lambda x, t: f(t) * x, f)
        return PotentialModel("E", value, derivs)
    if pid == "M":
        slope = float(p.get("slope", 32.25415))
        value, derivs = _double_well(lambda x, t: -slope * x, lambda t: -slope)
        return PotentialModel("M", value, derivs, time_independent=True)
    if pid == "custom":
        expr = p.get("expr")
        if not expr:
            raise ValueError("custom potential needs an 'expr' parameter")
        code = compile(expr, "<potential>", "eval")
        names = {k: getattr(np, k) for k in ("sin", "cos", "exp", "tanh", "pi", "sqrt", "abs", "cosh", "sinh")}
        return PotentialModel("custom", lambda x, t: eval(code, {"__builtins__": {}}, {**names, "x": x, "t": t}))
    raise ValueError(f"unknown potential {pid!r}; choose from {POTENTIAL_IDS}")


# --- states and observables --------------------------------------------------


def initial_wavepacket(grid: PeriodicGrid, x0=-2.5, delta=0.2) -> np.ndarray:
    """Gaussian ``(delta pi)^(-1/4) exp(-(x-x0)^2/(2 delta))``, renormalised on the grid."""
    x = grid.nodes
    u = (delta * np.pi) ** -0.25 * np.exp(-((x - x0) ** 2) / (2 * delta))
    return (u / (math.sqrt(grid.dx) * np.linalg.norm(u))).astype(complex)


def plane_wave(grid: PeriodicGrid, k=1) -> np.ndarray:
    u = np.exp(1j * k * 2 * np.pi / grid.length * (grid.nodes - grid.a))
    return u / (math.sqrt(grid.dx) * np.linalg.norm(u))


def l2_norm(grid: PeriodicGrid, u) -> float:
    return math.sqrt(grid.dx) * float(np.linalg.norm(u))


def l2_error(grid: PeriodicGrid, u, ref) -> float:
    """Discrete ``L^2`` distance ``sqrt(dx) ||u - ref||``."""
    grid.check(u, ref)
    return math.sqrt(grid.dx) * float(np.linalg.norm(np.asarray(u) - np.asarray(ref)))


def energies(grid: PeriodicGrid, u, pot: PotentialModel, t: float) -> tuple[float, float, float]:
    """Kinetic, potential and total energy for ``H = -d2 + V``.

    Transforms here are not added to the FFT counter.
    """
    u = np.asarray(u)
    uhat = np.fft.fft(u, norm="ortho")
    kinetic = grid.dx * float(np.sum(grid.frequencies**2 * np.abs(uhat) ** 2))
    potential = grid.dx * float(np.sum(pot(grid.nodes, t) * np.abs(u) ** 2))
    return kinetic, potential, kinetic + potential


# --- propagation -------------------------------------------------------------


@dataclass
class SimulationConfig:
    a: float = -10.0
    b: float = 10.0
    m: int = 180
    t_final: float = 5.0
    n_steps: int = 256
    scheme: str = "theta4"
    n_knots: int | None = None
    literal: bool = False
    exponentiator: str = "dense"
    lanczos_m: int = 50
    potential: str = "S"
    potential_params: dict = field(default_factory=dict)
    initial: str = "gaussian"
    initial_k: int = 1
    energy_stride: int = 100
    fd_order: int | None = None

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps <= 0:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.exponentiator not in EXPONENTIATORS:
            raise ValueError(f"unknown exponentiator {self.exponentiator!r}; choose from {EXPONENTIATORS}")
        if self.initial not in ("gaussian", "plane"):
            raise ValueError(f"unknown initial state {self.initial!r}")
        if self.energy_stride <= 0:
            raise ValueError("energy_stride must be positive")

    @property
    def h(self) -> float:
        return self.t_final / self.n_steps

    def make_grid(self) -> PeriodicGrid:
        return make_grid(self.a, self.b, self.m)

    def make_potential(self) -> PotentialModel:
        params = {"t_final": self.t_final, **self.potential_params}
        pot = potential_catalogue(self.potential, params)
        return pot.with_fd(self.fd_order) if self.fd_order else pot

    def initial_state(self, grid) -> np.ndarray:
        if self.initial == "plane":
            return plane_wave(grid, self.initial_k)
        return initial_wavepacket(grid)


@dataclass
class RunReport:
    config: SimulationConfig
    final: np.ndarray
    norms: np.ndarray
    trace: np.ndarray  # rows (step, t, kinetic, potential, total)
    wall_time: float
    fft_count: int
    fft_per_apply: int
    error: float | None = None

    @property
    def h(self) -> float:
        return self.config.h

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.norms[0])))


def _dense_generator(gen) -> np.ndarray:
    if isinstance(gen, StandardM4):
        return gen.dense()
    return dense_matrix(gen)


def step(scheme: MagnusScheme, pot, grid, t0, u, exponentiator="dense", lanczos_m=50):
    """Advance ``u`` from ``t0`` to ``t0 + h``."""
    if scheme.variant == "midpoint":
        return midpoint_step(pot, grid, scheme.h, t0, u)
    gen = scheme.generator(pot, grid, t0)
    if exponentiator == "lanczos":
        return lanczos_expm(gen, u, lanczos_m)
    A = _dense_generator(gen)
    E = skew_hermitian_expm(A) if exponentiator == "dense" else dense_expm(A)
    return E @ u


def propagate(cfg: SimulationConfig, reference=None) -> RunReport:
    """Run ``cfg.n_steps`` steps, recording norms, energies and transform counts."""
    grid = cfg.make_grid()
    pot = cfg.make_potential()
    scheme = MagnusScheme(cfg.scheme, cfg.h, cfg.n_knots, cfg.literal)
    u = cfg.initial_state(grid)
    h = cfg.h
    norms = np.empty(cfg.n_steps + 1)
    norms[0] = l2_norm(grid, u)
    trace = [(0, 0.0, *energies(grid, u, pot, 0.0))]
    if scheme.variant == "midpoint":
        per_apply = 4
    else:
        g0 = scheme.generator(pot, grid, 0.0)
        per_apply = 10 if isinstance(g0, StandardM4) else fft_cost(g0)
    start_fft = _grid.fft_counter()
    t_start = time.perf_counter()
    for n in range(cfg.n_steps):
        t0 = n * h
        u = step(scheme, pot, grid, t0, u, cfg.exponentiator, cfg.lanczos_m)
        if not np.all(np.isfinite(u)):
            raise SimulationAborted(n + 1, t0 + h)
        norms[n + 1] = l2_norm(grid, u)
        if (n + 1) % cfg.energy_stride == 0 or n + 1 == cfg.n_steps:
            trace.append((n + 1, t0 + h, *energies(grid, u, pot, t0 + h)))
    wall = time.perf_counter() - t_start
    report = RunReport(cfg, u, norms, np.array(trace), wall, _grid.fft_counter() - start_fft, per_apply)
    if reference is not None:
        report.error = l2_error(grid, u, reference)
    return report


def reference_solution(cfg: SimulationConfig, n_steps: int, scheme="theta4", n_knots=None) -> np.ndarray:
    """Final state of a fine dense-exponential run sharing ``cfg``'s problem."""
    ref_cfg = replace(cfg, n_steps=n_steps, scheme=scheme, n_knots=n_knots, exponentiator="dense", literal=False)
    return propagate(ref_cfg).final


# --- studies -----------------------------------------------------------------


@dataclass
class StudyRow:
    n_steps: int
    h: float
    error: float
    wall_time: float
    fft_total: int
    slope_running: float | None = None


@dataclass
class ConvergenceTable:
    rows: list
    slope: float | None

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


def fit_slope(hs, errors, lo=0.0, hi=np.inf) -> float | None:
    """Least-squares slope of ``log(error)`` against ``log(h)`` for errors in ``[lo, hi]``."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = (errors >= lo) & (errors <= hi) & (errors > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(hs[keep]), np.log(errors[keep]), 1)[0])


def convergence_study(
    base_cfg: SimulationConfig,
    step_list,
    reference=None,
    reference_steps: int | None = None,
    jobs: int = 1,
    fit_range=(0.0, np.inf),
) -> ConvergenceTable:
    """Errors of ``base_cfg`` at each step count against one shared reference.

    Without an explicit ``reference`` array the reference is a dense
    ``theta4`` run with ``reference_steps`` (default 16x the finest count).
    """
    step_list = sorted(int(n) for n in step_list)
    if not step_list:
        raise ValueError("empty step list")
    if reference is None:
        reference_steps = reference_steps or 16 * step_list[-1]
        if reference_steps <= step_list[-1]:
            raise ValueError("reference must be finer than every study point")
        reference = reference_solution(base_cfg, reference_steps)

    def one(n):
        rep = propagate(replace(base_cfg, n_steps=n), reference)
        return StudyRow(n, rep.h, rep.error, rep.wall_time, rep.fft_count)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, step_list))
    else:
        rows = [one(n) for n in step_list]
    rows.sort(key=lambda r: -r.h)
    for prev, cur in zip(rows, rows[1:]):
        if prev.error > 0 and cur.error > 0:
            cur.slope_running = math.log(prev.error / cur.error) / math.log(prev.h / cur.h)
    slope = fit_slope([r.h for r in rows], [r.error for r in rows], *fit_range)
    return ConvergenceTable(rows, slope)


def time_per_step(cfg: SimulationConfig, n_steps: int = 20, repeats: int = 3) -> float:
    """Best-of-``repeats`` wall time per step for ``n_steps`` steps of ``cfg``."""
    best = np.inf
    for _ in range(repeats):
        params = {"pulse_T": cfg.t_final, **cfg.potential_params}
        short = replace(cfg, n_steps=n_steps, t_final=cfg.h * n_steps, energy_stride=10**9, potential_params=params)
        rep = propagate(short)
        best = min(best, rep.wall_time / n_steps)
    return best
