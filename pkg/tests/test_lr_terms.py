import math

import mpmath as mp
import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lrsaddle import (
    CapabilityError,
    DegenerateThresholdError,
    UnsupportedOrderError,
    gamma_sum_cgf,
    gaussian_cgf,
    gh_derivs,
    heston_cgf,
    normal_pdf,
    normal_sf,
    psi0_closed,
    psi1_closed,
    psi_m,
    solve_saddlepoint,
    tail_lr,
    theta_hat_derivs,
    tilt_cgf,
)
from lrsaddle.lr_terms import (
    TAYLOR_TERMS,
    _eval_h,
    _g_backward,
    _stable_taylor,
    _theta_derivs_from_cumulants,
    double_factorial,
    h_table,
    theta_taylor,
)

from .conftest import SV_CALL, SV_TAIL
from .oracles import expansion, gamma_cgf, sv_cgf, theta_fd


def _chain(model, x, order=7, stable=True):
    s = solve_saddlepoint(model, x)
    t = theta_hat_derivs(model, s, order)
    return s, t, gh_derivs(s, t, _stable_taylor(model, s) if stable else None)


# -- normal helpers ---------------------------------------------------------


def test_normal_helpers():
    assert normal_sf(0.0) == 0.5
    assert normal_pdf(0.0) == pytest.approx(0.3989422804, abs=1e-10)
    assert normal_sf(1.0) == pytest.approx(0.1586552539, abs=1e-10)
    assert normal_sf(30.0) == pytest.approx(4.906713927148187e-198, rel=1e-12)


def test_double_factorial():
    assert [double_factorial(n) for n in (0, 2, 4, 6)] == [1, 2, 8, 48]


# -- theta derivatives ------------------------------------------------------


def test_theta_derivs_gaussian(std_normal):
    s = solve_saddlepoint(std_normal, 1.0)
    d = theta_hat_derivs(std_normal, s).d
    np.testing.assert_allclose(d[1:], [1, 0, 0, 0, 0, 0, 0], atol=1e-15)


def test_theta_derivs_gamma_vs_finite_differences(gamma5):
    s = solve_saddlepoint(gamma5, 10.0)
    d = theta_hat_derivs(gamma5, s, 3).d
    fd = theta_fd(gamma_cgf(5), 10, 3)
    assert d[1] == pytest.approx(float(fd[0]), rel=1e-8)
    assert d[2] == pytest.approx(float(fd[1]), rel=1e-5)
    assert d[3] == pytest.approx(float(fd[2]), rel=1e-4)


def test_theta_derivs_heston_vs_finite_differences():
    m = heston_cgf(SV_TAIL.replace(eps=0.6))
    s = solve_saddlepoint(m, 1.0)
    d = theta_hat_derivs(m, s, 4).d
    fd = theta_fd(sv_cgf(1, 1, "0.3", 1, 0, 1, "0.6"), 1, 4, step="1e-5")
    np.testing.assert_allclose(d[1:], [float(v) for v in fd], rtol=1e-6)


def _reversion_derivs(kvals, order=7):
    """theta^(n)(w_hat) from an exact rational series reversion with sympy."""
    t, s = sp.symbols("t s")
    inner = sum(kvals[r] * t ** (r - 2) / sp.factorial(r) for r in range(2, order + 2))
    w_of_t = sp.series(t * sp.sqrt(2 * inner), t, 0, order + 1).removeO()
    coeffs = sp.symbols(f"a1:{order + 1}")
    t_of_s = sum(c * s ** (i + 1) for i, c in enumerate(coeffs))
    composed = sp.expand(sp.series(w_of_t.subs(t, t_of_s), s, 0, order + 1).removeO())
    sol = {}
    for n in range(1, order + 1):
        eq = composed.coeff(s, n).subs(sol) - (1 if n == 1 else 0)
        sol[coeffs[n - 1]] = [r for r in sp.solve(eq, coeffs[n - 1]) if r.is_positive or n > 1][0]
    return [float(sp.factorial(n) * sol[coeffs[n - 1]]) for n in range(1, order + 1)]


@pytest.mark.parametrize(
    "kvals",
    [
        (0, 0, 2, sp.Rational(1, 3), sp.Rational(-1, 2), sp.Rational(3, 4), 1, sp.Rational(-2, 5), sp.Rational(1, 7)),
        (0, 0, sp.Rational(1, 2), sp.Rational(5, 4), 3, sp.Rational(-7, 3), 2, 5, -1),
    ],
)
def test_theta_closed_forms_match_symbolic_reversion(kvals):
    ours = _theta_derivs_from_cumulants(np.array([float(v) for v in kvals]), 7)
    ref = _reversion_derivs(kvals)
    np.testing.assert_allclose(ours, ref, rtol=1e-12)


def test_theta_closed_forms_match_numeric_reversion(sv):
    s = solve_saddlepoint(sv, 1.0)
    d = theta_hat_derivs(sv, s).d
    a = theta_taylor(sv.taylor_coefficients(s.theta_hat, 9), 8)
    np.testing.assert_allclose(d[1:], [a[n] * math.factorial(n) for n in range(1, 8)], rtol=1e-8)


def test_theta_derivs_errors(std_normal):
    s = solve_saddlepoint(std_normal, 1.0)
    with pytest.raises(UnsupportedOrderError):
        theta_hat_derivs(std_normal, s, 8)
    with pytest.raises(CapabilityError):
        theta_taylor([0, 0, 1.0], 3)


# -- h table ----------------------------------------------------------------


@pytest.mark.parametrize("n", range(1, 8))
def test_h_table_matches_symbolic_log_derivative(n):
    w = sp.symbols("w")
    g = sp.Function("g")(w)
    vals = [sp.Rational(3, 2), sp.Rational(-1, 3), sp.Rational(2, 5), sp.Rational(-5, 7),
            sp.Rational(1, 9), sp.Rational(4, 3), sp.Rational(-2, 11), sp.Rational(6, 5)]
    expr = sp.diff(sp.log(g), w, n)
    for k in range(n, 0, -1):
        expr = expr.subs(sp.Derivative(g, (w, k)), vals[k])
    expr = expr.subs(g, vals[0])
    assert _eval_h(n, [float(v) for v in vals]) == pytest.approx(float(expr), rel=1e-13)


def test_h_table_term_counts():
    # the number of integer partitions of n
    assert [len(h_table(n)) for n in range(1, 8)] == [1, 2, 3, 5, 7, 11, 15]


# -- g and h chains ---------------------------------------------------------


def test_gh_gaussian_vanishes(std_normal):
    s, t, gh = _chain(std_normal, 1.0, stable=False)
    assert gh.g[0] == pytest.approx(1.0)
    expected = [1.0]
    for n in range(1, 8):
        expected.append((0.0 if n > 1 else 1.0) - n * expected[-1])
    assert gh.g[1] == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(gh.h[1:], 0.0, atol=1e-12)


@pytest.mark.parametrize("x", [0.3, 1.0, 2.5])
def test_lemma_identity_first_order(sv, x):
    s, t, gh = _chain(sv, x)
    assert s.w_hat * gh.g[1] + gh.g[0] == pytest.approx(t.d[1], abs=1e-12)


def test_forward_and_backward_g_agree():
    m = gamma_sum_cgf(50.0)
    s, t, fwd = _chain(m, 55.0, stable=False)
    a = _stable_taylor(m, s)
    bwd = _g_backward(s.w_hat, a, 7)
    assert bwd is not None
    # the forward recurrence sheds digits with every order; compare the low ones
    np.testing.assert_allclose(bwd[:5], fwd.g[:5], rtol=1e-8)


def test_backward_chain_beats_forward_against_oracle():
    m = gamma_sum_cgf(50.0)
    ref = [float(v) for v in expansion(gamma_cgf(50), 55, M=3, dps=40)["psi"]]
    s, t, stable = _chain(m, 55.0)
    _, _, fwd = _chain(m, 55.0, stable=False)
    err_stable = abs(psi_m(s, stable, 3) / ref[3] - 1)
    err_fwd = abs(psi_m(s, fwd, 3) / ref[3] - 1)
    assert err_stable < 1e-9
    assert err_stable < err_fwd


def test_gamma_h3_matches_series_representation(gamma5):
    s, t, fwd = _chain(gamma5, 10.0, stable=False)
    with mp.workdps(40):
        K = gamma_cgf(5)
        th = mp.mpf("0.5")
        c = [mp.diff(K, th, r) / mp.factorial(r) for r in range(32)]
    a = theta_taylor([float(v) for v in c], 30)
    a[0] = s.theta_hat
    g = [math.fsum(a[n + 1 + j] * (-s.w_hat) ** j for j in range(30 - n)) * math.factorial(n)
         for n in range(4)]
    assert fwd.h[3] == pytest.approx(_eval_h(3, g), rel=1e-8)


def test_backward_sum_declines_when_divergent():
    a = np.ones(40)
    assert _g_backward(1.5, a, 3) is None


# -- correction terms -------------------------------------------------------


def test_psi_gaussian_zero(std_normal):
    s, t, gh = _chain(std_normal, 1.0)
    assert psi0_closed(s) == pytest.approx(0.0, abs=1e-15)
    assert psi1_closed(s) == pytest.approx(0.0, abs=1e-15)
    assert psi_m(s, gh, 3) == pytest.approx(0.0, abs=1e-12)


def test_psi0_gamma_example(gamma5):
    s = solve_saddlepoint(gamma5, 10.0)
    assert psi0_closed(s) == pytest.approx(-0.01064, abs=5e-5)


@pytest.mark.parametrize("model,x", [("gamma", 10.0), ("sv", 1.0), ("sv", -1.0)])
def test_dual_path_low_orders(model, x):
    m = gamma_sum_cgf(5.0) if model == "gamma" else heston_cgf(SV_TAIL.replace(eps=0.8))
    s, t, gh = _chain(m, x)
    assert psi_m(s, gh, 0) == pytest.approx(psi0_closed(s), rel=1e-12)
    assert psi_m(s, gh, 1) == pytest.approx(psi1_closed(s), rel=1e-9)
    assert -normal_pdf(s.w_hat) * gh.h[3] / 2 == pytest.approx(psi1_closed(s), rel=1e-9)


@pytest.mark.parametrize(
    "K,x,model",
    [
        (gamma_cgf(5), 10, gamma_sum_cgf(5.0)),
        (gamma_cgf(3), 1, gamma_sum_cgf(3.0)),
        (sv_cgf(1, 1, "0.3", 1, 0, 1, "0.2"), 1, heston_cgf(SV_TAIL)),
        (sv_cgf(1, 1, "0.3", 1, 0, 1, "1"), 1, heston_cgf(SV_TAIL.replace(eps=1.0))),
    ],
)
def test_psi_terms_match_contour_oracle(K, x, model):
    ref = expansion(K, x, M=3)
    r = tail_lr(model, x, 3)
    assert r.base == pytest.approx(float(ref["base"]), rel=1e-12)
    for ours, theirs in zip(r.psi, ref["psi"]):
        assert ours == pytest.approx(float(theirs), rel=1e-7)


def test_psi_terms_small_w_hat_share_measure():
    # the call-pricing share measure sits very close to its mean (w_hat ~ 0.03)
    base = sv_cgf(6, "0.09", "0.3", "0.04", mp.log(100), 1, "0.2")
    k1 = base(mp.mpf(1))
    K = lambda th: base(th + 1) - k1
    level = math.log(105.0)
    ref = expansion(K, level, M=3, dps=40, start=0.1)
    r = tail_lr(tilt_cgf(heston_cgf(SV_CALL)), level, 3)
    assert abs(r.saddle.w_hat) < 0.05
    for ours, theirs in zip(r.psi, ref["psi"]):
        assert ours == pytest.approx(float(theirs), rel=1e-6)


def test_psi_order_errors(std_normal):
    s, t, gh = _chain(std_normal, 1.0, order=3)
    with pytest.raises(UnsupportedOrderError):
        psi_m(s, gh, 4)
    with pytest.raises(CapabilityError):
        psi_m(s, gh, 2)


# -- tail_lr ----------------------------------------------------------------


def test_tail_lr_gaussian(std_normal):
    r = tail_lr(std_normal, 1.0, 3)
    assert r.total == pytest.approx(0.1586552539, abs=1e-10)
    assert max(abs(p) for p in r.psi) < 1e-12
    assert len(r.partial_sums) == 5


@pytest.mark.parametrize(
    "eps,M,expected",
    [(0.2, 0, 0.06622), (0.2, 1, 0.06622), (0.2, 2, 0.06622), (1.0, 0, 0.06063), (0.4, 1, 0.06521)],
)
def test_tail_lr_reference_values(eps, M, expected):
    r = tail_lr(heston_cgf(SV_TAIL.replace(eps=eps)), 1.0, M)
    assert round(r.total, 5) == expected


def test_tail_lr_normal_column():
    r = tail_lr(heston_cgf(SV_TAIL), 1.0, 0)
    assert round(r.base, 5) == 0.06788


def test_tail_lr_errors(std_normal, gamma5):
    with pytest.raises(UnsupportedOrderError):
        tail_lr(std_normal, 1.0, 4)
    with pytest.raises(DegenerateThresholdError):
        tail_lr(gamma5, 5.0, 1)


def test_tail_lr_left_tail_sign(gamma5):
    r = tail_lr(gamma5, 2.0, 2)
    assert r.saddle.w_hat < 0
    assert 0.5 < r.total < 1.0


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 10), st.floats(-6, 6))
def test_gaussian_annihilation_property(mean, sigma, z):
    if abs(z) < 0.1:
        return
    m = gaussian_cgf(mean, sigma)
    r = tail_lr(m, mean + z * sigma, 3)
    assert r.total == pytest.approx(normal_sf(z), abs=1e-12)
    assert max(abs(p) for p in r.psi) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 50.0), st.floats(-0.8, 2.0))
def test_dual_path_property_gamma(alpha, rel):
    if abs(rel) < 0.05:
        return
    m = gamma_sum_cgf(alpha)
    s, t, gh = _chain(m, alpha * (1 + rel), order=3)
    assume(abs(s.w_hat) >= 0.1)
    assert psi_m(s, gh, 0) == pytest.approx(psi0_closed(s), rel=1e-9)
    # the printed first-order form sums terms far larger than the result;
    # allow round-off on the size of those terms
    u, w = s.u_hat, s.w_hat
    l3, l4 = s.lambda3, s.lambda4
    size = normal_pdf(w) * (abs(l4 / 8) / u + abs(5 * l3 * l3 / 24) / u
                            + abs(l3) / (2 * u * u) + 1 / abs(u) ** 3 + 1 / abs(w) ** 3)
    tol = 1e-9 * abs(psi1_closed(s)) + 1e3 * np.finfo(float).eps * size
    assert abs(psi_m(s, gh, 1) - psi1_closed(s)) <= tol


def test_taylor_terms_constant():
    assert TAYLOR_TERMS >= 30
