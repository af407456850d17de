"""Unit tests for the closed-form kernel algebra."""

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from scorecert import DomainError, Params, Precision
from scorecert import kernel

DIGITS = 50

hyp = settings(derandomize=True, max_examples=30, deadline=None)

# strategies kept well inside the representable range
m_vals = st.floats(min_value=1.01, max_value=50)
p_mid = st.floats(min_value=2.05, max_value=5.95)
x_vals = st.floats(min_value=1.001, max_value=200)


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), mpf("1e-300"))


# ---------------------------------------------------------------- containers


def test_precision_rejects_low_digit_counts():
    with pytest.raises(DomainError):
        Precision(14)
    assert Precision(15).digits == 15
    assert Precision().digits == 50


def test_params_strict_window():
    Params(3, "3.5", 2)
    with pytest.raises(DomainError):
        Params(1, "1.5", 2)
    with pytest.raises(DomainError):
        Params(3, 3, 2)  # p == d
    with pytest.raises(DomainError):
        Params(3, 4, 2)  # p == d + 1
    with pytest.raises(DomainError):
        Params(3, "3.5", 1)
    with pytest.raises(DomainError):
        Params(True, "1.5", 2)
    with pytest.raises(DomainError):
        Params("3", "3.5", 2)


def test_params_unchecked_relaxes_only_the_p_window():
    q = Params.unchecked(3, "5.2", 2)
    assert q.p == mpf("5.2")
    with pytest.raises(DomainError):
        Params.unchecked(3, 1, 2)  # p must stay > 1
    with pytest.raises(DomainError):
        Params.unchecked(3, "3.5", "0.9")  # M must stay > 1


# ---------------------------------------------------------------- x0 and phi


def test_x0_known_values():
    assert kernel.x0(3, DIGITS) == 2
    assert kernel.x0(2, DIGITS) == 3
    with pytest.raises(DomainError):
        kernel.x0(1, DIGITS)


def test_phi_vanishes_at_left_endpoint():
    for ms in ("1.5", "2", "5.75", "20"):
        left = kernel.x0(ms, DIGITS)
        assert kernel.phi(left, ms, DIGITS) == 0


@hyp
@given(x=x_vals, M=m_vals)
def test_phi_matches_expanded_form(x, M):
    with mp.workdps(DIGITS):
        xv, m = mpf(x), mpf(M)
        expanded = (m * m - 1) * (xv * xv + 1) - 2 * (m * m + 1) * xv
        assert rel_err(kernel.phi(xv, m, DIGITS), expanded) < mpf("1e-45")


def test_phi_sign_structure():
    m = mpf("2")
    left = kernel.x0(m, DIGITS)  # = 3
    assert kernel.phi(left + 1, m, DIGITS) > 0
    assert kernel.phi(left - mpf("0.5"), m, DIGITS) < 0


def test_phi_keeps_digits_near_the_endpoint():
    # factored evaluation: a 1e-30 offset from x0 must survive intact
    # (naive expansion would cancel all 30 leading digits)
    with mp.workdps(DIGITS):
        m = mpf("5.75")
        left = kernel.x0(m, DIGITS)
        eps = mpf("1e-30")
        val = kernel.phi(left + eps, m, DIGITS)
        slope = (m - 1) * ((m + 1) * left - (m - 1))  # d(phi)/dx at x0
        assert rel_err(val, slope * eps) < mpf("1e-18")


@hyp
@given(x=x_vals, M=m_vals)
def test_sigma2_equals_m2_minus_y2(x, M):
    with mp.workdps(DIGITS):
        xv, m = mpf(x), mpf(M)
        y = (xv + 1) / (xv - 1)
        assert rel_err(kernel.sigma2(xv, m, DIGITS), m * m - y * y) < mpf("1e-44")


# ---------------------------------------------------------------- n_a and d_fn


def test_n_a_triple_root_at_one():
    # the value cancels exactly; the derivative sums only up to the
    # rounding of the (p-1)p style coefficient products (~1e-48 at 50dps)
    for ps in ("2.1", "2.5", "3.5", "4.95", "5.9"):
        v, d1, d2 = kernel.n_a_derivs_at_1(ps, DIGITS)
        assert v == 0
        assert abs(d1) < mpf("1e-45")
        assert abs(d2) < mpf("1e-45")


def test_n_a_cubic_leading_behaviour():
    # n_a(1+h) ~ C3 h^3: the h^3-scaled value stabilizes as h shrinks
    with mp.workdps(DIGITS):
        p = mpf("4.5")
        c_a = kernel.n_a(1 + mpf("1e-8"), p, DIGITS) / mpf("1e-8") ** 3
        c_b = kernel.n_a(1 + mpf("1e-9"), p, DIGITS) / mpf("1e-9") ** 3
        assert c_a != 0
        assert rel_err(c_a, c_b) < mpf("1e-6")


@hyp
@given(x=st.floats(min_value=1.01, max_value=50), p=p_mid)
def test_n_a_positive_right_of_one(x, p):
    assert kernel.n_a(x, p, 30) > 0


def test_d_fn_value_at_one_is_4p():
    for ps in ("2.5", "3.5", "4.95"):
        with mp.workdps(DIGITS):
            assert kernel.d_fn(1, ps, DIGITS) == 4 * mpf(ps)


@hyp
@given(x=x_vals, p=p_mid)
def test_d_fn_positive(x, p):
    assert kernel.d_fn(x, p, 30) > 0


def test_domain_guards_reject_nonpositive_x():
    with pytest.raises(DomainError):
        kernel.n_a(0, "2.5", DIGITS)
    with pytest.raises(DomainError):
        kernel.d_fn(-1, "2.5", DIGITS)


# ---------------------------------------------------------------- weights


def test_w_fn_requires_x_beyond_x0():
    params = Params(3, "3.5", 2)
    left = kernel.x0(2, DIGITS)  # = 3
    with pytest.raises(DomainError):
        kernel.w_fn(left, params, DIGITS)
    assert kernel.w_fn(left + 1, params, DIGITS) > 0


@hyp
@given(y=st.floats(min_value=1.001, max_value=100))
def test_x_of_y_is_an_involution(y):
    with mp.workdps(DIGITS):
        yv = mpf(y)
        assert rel_err(kernel.x_of_y(kernel.x_of_y(yv, DIGITS), DIGITS), yv) < mpf(
            "1e-40"
        )


def test_x_of_y_domain():
    with pytest.raises(DomainError):
        kernel.x_of_y(1, DIGITS)


def test_f_weight_matches_naive_formula_away_from_one():
    # direct transcription is safe at moderate y; the offset form must agree
    with mp.workdps(DIGITS):
        p = mpf("4.95")
        for ys in ("1.5", "2", "5", "40"):
            y = mpf(ys)
            x = kernel.x_of_y(y, DIGITS)
            na = kernel.n_a(x, p, DIGITS)
            naive = 2 * na * na * (y - 1) ** (p - 2) / (2 ** p * (x ** p - 1) ** 3)
            assert rel_err(kernel.f_weight(y, p, DIGITS), naive) < mpf("1e-40")


def test_g_r_weight_matches_naive_formula_away_from_one():
    with mp.workdps(DIGITS):
        p = mpf("3.5")
        for ys in ("1.5", "3", "12"):
            y = mpf(ys)
            x = kernel.x_of_y(y, DIGITS)
            dd = kernel.d_fn(x, p, DIGITS)
            naive = 2 * dd * (y - 1) ** (p - 2) / (2 ** p * (x ** p - 1) ** 2)
            assert rel_err(kernel.g_r_weight(y, p, DIGITS), naive) < mpf("1e-40")


@hyp
@given(y=st.floats(min_value=1.0001, max_value=1000), p=p_mid)
def test_weights_are_positive(y, p):
    assert kernel.f_weight(y, p, 30) > 0
    assert kernel.g_r_weight(y, p, 30) > 0


def test_f_weight_survives_extreme_offsets():
    # s = y - 1 = 1e-30 sends x to 2e30; factored form must stay finite
    with mp.workdps(DIGITS):
        y = 1 + mpf("1e-30")
        val = kernel.f_weight(y, "4.95", DIGITS)
        assert val > 0 and mp.isfinite(val)


def test_weight_domain_guards():
    with pytest.raises(DomainError):
        kernel.f_weight(1, "2.5", DIGITS)
    with pytest.raises(DomainError):
        kernel.g_r_weight("0.5", "2.5", DIGITS)


# ---------------------------------------------------------------- logf_derivs


def test_logf_derivs_match_central_differences():
    # reference derivatives from central differences of log F at 80
    # digits; step sizes keep truncation ~1e-40 (first) / ~1e-32 (second)
    with mp.workdps(80):
        for ps, ys in (("2.5", "1.7"), ("3.5", "4.0"), ("4.95", "9.3")):
            p, y = mpf(ps), mpf(ys)
            d1, d2 = kernel.logf_derivs(y, p, 60)
            f = lambda t: mp.log(kernel.f_weight(t, p, 80))
            h1, h2 = mpf("1e-20"), mpf("1e-16")
            nd1 = (f(y + h1) - f(y - h1)) / (2 * h1)
            nd2 = (f(y + h2) - 2 * f(y) + f(y - h2)) / h2 ** 2
            assert rel_err(d1, nd1) < mpf("1e-30")
            assert rel_err(d2, nd2) < mpf("1e-24")


def test_logf_derivs_domain():
    with pytest.raises(DomainError):
        kernel.logf_derivs(1, "3.5", DIGITS)
