import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from magnus_lanczos.quad import (
    ONE,
    PHI1,
    PHI2,
    POLYNOMIALS,
    PSI,
    VARPHI1,
    VARPHI2,
    appendix_weights,
    gl_rule,
    identity_residuals,
    line_moment,
    rescaled_bernoulli,
    triangle_functional,
    triangle_weights,
)
from conftest import sin_times_t


@pytest.mark.parametrize("n", [1, 2, 3, 5, 11])
def test_gauss_rule_exact_to_degree(n):
    h = 0.37
    rule = gl_rule(n, h)
    for p in range(2 * n):
        assert rule.integrate(rule.knots**p) == pytest.approx(h ** (p + 1) / (p + 1), rel=1e-13)
    assert np.all((rule.knots > 0) & (rule.knots < h))


@pytest.mark.parametrize("n, h", [(0, 1.0), (65, 1.0), (3, 0.0), (3, -1.0)])
def test_gauss_rule_rejects(n, h):
    with pytest.raises(ValueError):
        gl_rule(n, h)


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_bernoulli_integrals_vanish(j):
    h = 0.8
    rule = gl_rule(6, h)
    assert abs(rule.integrate(rescaled_bernoulli(j, h, rule.knots))) < 1e-15 * h ** (j + 1) * 10


def test_bernoulli_values():
    assert rescaled_bernoulli(2, 2.0, 0.0) == pytest.approx(4 / 6)
    assert rescaled_bernoulli(1, 2.0, 2.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rescaled_bernoulli(7, 1.0, 0.5)


@pytest.mark.parametrize("name", ["psi", "phi1", "phi2"])
def test_triangle_integrals_vanish(name):
    h = 1.3
    w = triangle_weights(POLYNOMIALS[name], gl_rule(3, h)).w
    assert abs(w.sum()) < 1e-14 * h**4


def test_varphi_integrals():
    h = 0.9
    rule = gl_rule(3, h)
    assert triangle_weights(VARPHI1, rule).w.sum() == pytest.approx(h**4 / 12, rel=1e-13)
    assert triangle_weights(VARPHI2, rule).w.sum() == pytest.approx(-(h**4) / 12, rel=1e-13)


@pytest.mark.parametrize("f", [ONE, PSI, VARPHI1, PHI2])
def test_triangle_weights_against_dblquad(f):
    h = 0.6
    rule = gl_rule(3, h)
    w = triangle_weights(f, rule).w
    from magnus_lanczos.quad import _lagrange_basis

    def ell(j, t):
        return _lagrange_basis(rule.knots, [t])[j, 0]

    for j in range(3):
        for k in range(3):
            val, _ = dblquad(lambda xi, z: f(h, z, xi) * ell(j, z) * ell(k, xi), 0, h, 0, lambda z: z,
                             epsabs=1e-15, epsrel=1e-13)
            assert w[j, k] == pytest.approx(val, abs=1e-14 * h**3)


@pytest.mark.parametrize("name", ["psi", "varphi1", "varphi2", "phi1", "phi2"])
@pytest.mark.parametrize("h", [0.05, 1.0, 3.0])
def test_closed_form_tables(name, h):
    w = triangle_weights(POLYNOMIALS[name], gl_rule(3, h)).w
    gold = appendix_weights(name, h)
    assert np.max(np.abs(w - gold)) <= 1e-13 * np.max(np.abs(gold))


def test_closed_form_tables_sum_like_polynomials():
    for name in ("psi", "phi1", "phi2"):
        assert abs(appendix_weights(name, 1.0).sum()) < 1e-15


def test_unknown_table():
    with pytest.raises(KeyError):
        appendix_weights("chi", 1.0)


def test_polynomial_sum_adds_coefficients():
    s = VARPHI1 + PHI1
    z, x, h = 0.3, 0.1, 0.7
    assert s(h, z, x) == pytest.approx(VARPHI1(h, z, x) + PHI1(h, z, x))
    assert s.degree == 2


def test_moment_of_linear_in_time(circle32):
    # V = sin(x) t: d_x mu_11 = cos(x) int (z - h/2) z dz = cos(x) h^3 / 12
    pot = sin_times_t()
    h = 0.1
    m = line_moment(pot, circle32, 1, 1, 1, gl_rule(2, h))
    assert np.max(np.abs(m - np.cos(circle32.nodes) * h**3 / 12)) < 1e-16


def test_unused_moment_rejected(circle32):
    with pytest.raises(ValueError, match="not used"):
        line_moment(sin_times_t(), circle32, 2, 2, 0, gl_rule(3, 0.1))


def test_triangle_functional_constant_in_time(circle32):
    # for time-independent V the psi functional vanishes
    from magnus_lanczos.potential import static

    pot = static("c", np.cos, {1: lambda x: -np.sin(x)})
    tw = triangle_weights(PSI, gl_rule(3, 0.2))
    assert np.max(np.abs(triangle_functional(pot, circle32, tw, 1, 1))) < 1e-17


def test_identity_residuals_examples():
    for fs in [(np.sin, np.cos, np.exp), (lambda s: s, lambda s: s * s, np.ones_like)]:
        a, b = identity_residuals(*fs, h=0.9)
        assert a < 1e-13 and b < 1e-13


@settings(max_examples=20, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=9, max_size=9),
    st.floats(0.05, 2.0),
)
def test_identity_residuals_random(c, h):
    fs = [lambda s, a=c[3 * i : 3 * i + 3]: a[0] + a[1] * np.sin(2 * s + a[2]) for i in range(3)]
    scale = max(1.0, max(abs(v) for v in c)) ** 3 * max(h, 1) ** 3
    assert max(identity_residuals(*fs, h=h)) <= 1e-12 * scale
