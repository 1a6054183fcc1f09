import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from magnus_lanczos.krylov import (
    dense_expm,
    lanczos,
    lanczos_expm,
    lanczos_expm_adaptive,
    skew_hermitian_expm,
)


def random_skew(rng, m, scale=1.0):
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return scale * 0.5 * (X - X.conj().T)


def test_zero_operator_returns_input(rng):
    u = rng.standard_normal(16) + 0j
    assert np.allclose(lanczos_expm(lambda v: 0 * v, u, 5), u)


def test_scalar_operator_single_iteration(rng):
    u = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    c = 0.7
    w = lanczos_expm(lambda v: 1j * c * v, u, 1)
    assert np.max(np.abs(w - np.exp(1j * c) * u)) < 1e-14


def test_full_dimension_matches_dense(rng):
    A = random_skew(rng, 32)
    u = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    w = lanczos_expm(lambda v: A @ v, u, 32, reorthogonalize=True)
    ref = expm(A) @ u
    assert np.linalg.norm(w - ref) <= 1e-10 * np.linalg.norm(ref)


@pytest.mark.parametrize("m", [1, 2, 5, 10, 20, 40, 50, 64])
def test_norm_preserved_for_every_m_with_reorthogonalization(rng, m):
    A = random_skew(rng, 64, scale=3.0)
    u = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    w = lanczos_expm(lambda v: A @ v, u, m, reorthogonalize=True)
    assert abs(np.linalg.norm(w) - np.linalg.norm(u)) <= 1e-12 * np.linalg.norm(u)


@pytest.mark.parametrize("m", [1, 2, 5, 10, 20, 30])
def test_norm_preserved_by_plain_recurrence_while_orthogonal(rng, m):
    A = random_skew(rng, 64, scale=3.0)
    u = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    ws, _ = lanczos(lambda v: A @ v, u, m)
    assert ws.orthogonality_loss() < 1e-10
    w = lanczos_expm(lambda v: A @ v, u, m)
    assert abs(np.linalg.norm(w) - np.linalg.norm(u)) <= 1e-12 * np.linalg.norm(u)


def test_plain_recurrence_norm_error_tracks_orthogonality_loss(rng):
    # unconverged and no longer orthogonal: the norm drifts, and the
    # workspace reports why
    A = random_skew(rng, 64, scale=3.0)
    u = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    ws, _ = lanczos(lambda v: A @ v, u, 40)
    drift = abs(np.linalg.norm(lanczos_expm(lambda v: A @ v, u, 40)) / np.linalg.norm(u) - 1)
    assert ws.orthogonality_loss() > 1e-10
    assert drift < 1e3 * ws.orthogonality_loss()


def test_tridiagonal_is_real_and_monitored(rng):
    A = random_skew(rng, 40)
    ws, _ = lanczos(lambda v: A @ v, rng.standard_normal(40) + 0j, 8)
    assert all(isinstance(a, float) for a in ws.alpha)
    assert ws.orthogonality_loss() < 1e-8


def test_breakdown_on_invariant_subspace():
    D = np.diag(1j * np.arange(10.0))
    u = np.zeros(10, dtype=complex)
    u[[2, 5]] = 1
    ws, _ = lanczos(lambda v: D @ v, u, 8)
    assert ws.breakdown and len(ws.alpha) == 2
    assert np.allclose(lanczos_expm(lambda v: D @ v, u, 8), expm(D) @ u)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        lanczos_expm(lambda v: v, np.ones(4), 0)
    with pytest.raises(ValueError):
        lanczos_expm(lambda v: v, np.zeros(4), 3)


def test_adaptive_stops_early(rng):
    A = random_skew(rng, 64, scale=0.05)
    u = rng.standard_normal(64) + 0j
    w, m = lanczos_expm_adaptive(lambda v: A @ v, u, m_max=60, tol=1e-12)
    assert m < 30
    assert np.linalg.norm(w - expm(A) @ u) <= 1e-10 * np.linalg.norm(u)


def test_dense_expm_examples(rng):
    assert np.allclose(dense_expm(np.zeros((3, 3))), np.eye(3))
    E = dense_expm(np.diag([1j * np.pi, -1j * np.pi]))
    assert np.max(np.abs(E - np.diag([-1, -1]))) <= 1e-13
    U = dense_expm(random_skew(rng, 64), check=True)
    assert np.max(np.abs(U.conj().T @ U - np.eye(64))) <= 1e-11


def test_dense_expm_guards():
    with pytest.raises(ValueError):
        dense_expm(np.zeros((600, 600)))
    with pytest.raises(ValueError):
        dense_expm(np.zeros((3, 4)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 5.0))
def test_eigen_exponential_matches_pade(seed, scale):
    rng = np.random.default_rng(seed)
    A = random_skew(rng, 24, scale)
    U = skew_hermitian_expm(A)
    assert np.max(np.abs(U - expm(A))) < 1e-11 * max(1.0, scale * 24)
    assert np.max(np.abs(U.conj().T @ U - np.eye(24))) < 1e-12


@pytest.fixture(scope="module")
def well_step():
    from magnus_lanczos.grid import make_grid
    from magnus_lanczos.magnus import MagnusScheme
    from magnus_lanczos.opalg import dense_matrix
    from magnus_lanczos.sim import initial_wavepacket, potential_catalogue

    g = make_grid(-10, 10, 180)
    pot = potential_catalogue("S")
    u = initial_wavepacket(g)

    def make(h, t0=0.5):
        gen = MagnusScheme("theta4", h).generator(pot, g, t0)
        return gen, skew_hermitian_expm(dense_matrix(gen)) @ u

    return u, make


def test_error_decreases_with_iterations(well_step):
    u, make = well_step
    gen, exact = make(0.01)
    errs = [np.linalg.norm(lanczos_expm(gen, u, m) - exact) for m in (10, 20, 50)]
    assert errs[2] < errs[1] < errs[0]


def test_fifty_iterations_match_dense_for_small_steps(well_step):
    u, make = well_step
    for h in (0.005, 0.0025):
        gen, exact = make(h)
        assert np.linalg.norm(lanczos_expm(gen, u, 50) - exact) <= 1e-9 * np.linalg.norm(u)
