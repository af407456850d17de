"""Certified assembly of the gain/cost integrals and derived quantities.

Two independent coordinate forms are implemented for the main integrals:

* the y-form over the finite interval (1, M), with the density kernels
  from :mod:`.kernel` and the weight (M^2 - y^2)^alpha, and
* the x-form over the ray (x0, inf), compactified through t/(1 - t).

They are mutual oracles: the test suite demands relative agreement to
1e-25.  The y-form is the default everywhere it applies; the x-form is
authoritative for the weighted-average moments and the gain-loss
cross-check, which are only defined in x.

One deliberate departure from the obvious transcription: the y-form
cost kernel divides by (x^p - 1) to the FIRST power.  Transcribing the
cost density with the same squared denominator as the gain density
makes the y-form disagree with the defining x-form by orders of
magnitude; the first power is what the change of variables actually
produces.  The squared variant is kept in kernel.g_r_weight because the
two-dimensional ratio diagnostic (ir_d2_ratio) is defined against it
and is self-consistent that way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from mpmath import mp, mpf

from . import kernel
from .kernel import DomainError, Params, _digits, _f_of_s, _g2_of_s, d_fn, n_a
from .quadrature import (
    Ball,
    SingularityHints,
    ball_from_quad,
    integrate_offsets,
    richardson_deriv,
)


class CertificateError(RuntimeError):
    """A certified quantity failed a structural sanity requirement."""


@dataclass(frozen=True)
class MomentSet:
    """Weight-moment integrals I_alpha at alpha = d/2, d/2-1, d/2-2.

    u and v are the ratios the log-curvature formula consumes.  For
    d = 2 the lowest moment diverges, so I_half_lo and v are None.
    """

    I_half_lo: Optional[Ball]
    I_mid: Ball
    I_top: Ball
    u: Ball
    v: Optional[Ball]


@dataclass(frozen=True)
class AbcSet:
    """x-space weighted averages under the cost-integral measure.

    With rho = N_A^2 / ((x^p - 1)^2 D) and the probability measure
    D w dx / I_R:  a = E[rho], b = E[rho sigma^2], c = E[rho / sigma^2].
    Then a/b and c/b reproduce the y-form moment ratios u and v
    exactly.  c diverges for d = 2 and is None there.
    """

    a: Ball
    b: Ball
    c: Optional[Ball]


def _norm_form(form) -> str:
    key = str(form).lower().replace("-form", "")
    if key not in ("x", "y"):
        raise DomainError(f"form must be x-form or y-form, got {form!r}")
    return key


def _kr_of_s(s, p):
    # y-form cost kernel; note the first-power (x^p - 1), see module docstring
    x = (s + 2) / s
    return 2 * d_fn(x, p, mp.dps) * s ** (p - 2) / (2 ** p * (x ** p - 1))


def _y_moment(ker, M, alpha, p, digits, maxdegree=8):
    """integral over (1, M) of ker(y - 1) * (M^2 - y^2)^alpha dy.

    Both factors are evaluated from exact endpoint offsets: s = y - 1
    on the lower half, u = M - y on the upper, with M^2 - y^2 always
    formed as a product of distances.  This is what lets alpha = -1/2
    and tanh-sinh nodes within 1e-170 of the endpoints coexist.
    """

    def g_lo(s):
        return ker(s) * ((M - 1 - s) * (M + 1 + s)) ** alpha

    def g_hi(u):
        return ker(M - 1 - u) * (u * (2 * M - u)) ** alpha

    hints = SingularityHints(a_exponent=p - 2, b_exponent=alpha)
    return integrate_offsets(g_lo, g_hi, 1, M, digits, hints, maxdegree)


def _x_quad(params: Params, digits, num, sigma_powers=0, maxdegree=8):
    """integral over (x0, inf) of num(x) * sigma^(2k) * w(x) dx.

    The discriminant phi is kept in its factored form
    (M-1) * delta * ((M+1) x - (M-1)) with delta = x - x0, so the
    endpoint power delta^((d-2)/2 + k) never passes through the
    catastrophic cancellation of the expanded quadratic.
    """
    p, d, M = params.p, params.d, params.M
    x0v = (M + 1) / (M - 1)
    c1 = x0v - 1  # = 2/(M-1), exact in the working precision
    phi_pow = (mpf(d) - 2) / 2 + sigma_powers
    xm1_pow = p + d - 2 + 2 * sigma_powers

    def g_lo(delta):
        x = x0v + delta
        ph = (M - 1) * delta * ((M + 1) * x - (M - 1))
        return num(x) * ph ** phi_pow / ((x ** p - 1) * (c1 + delta) ** xm1_pow)

    hints = SingularityHints(a_exponent=phi_pow)
    return integrate_offsets(g_lo, None, x0v, mp.inf, digits, hints, maxdegree)


def i_alpha(params: Params, alpha, prec=50, maxdegree=8) -> Ball:
    """Moment integral of the gain density against (M^2 - y^2)^alpha.

    alpha = -1/2 (needed by the d=3 moment set) is the integrable
    borderline and is accepted; anything below is a domain error.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        a = mpf(alpha)
        if a < mpf(-1) / 2:
            raise DomainError(f"alpha must be >= -1/2, got {alpha}")
        q = _y_moment(
            lambda s: _f_of_s(s, params.p), params.M, a, params.p, digits, maxdegree
        )
        ball = ball_from_quad(q)
        if not ball.strictly_positive():
            raise CertificateError(f"i_alpha ball not positive at {params}")
        return ball


def i_l(params: Params, prec=50, form="y") -> Ball:
    """Gain integral, y-form (default) or x-form cross-check."""
    digits = _digits(prec)
    with mp.workdps(digits):
        if _norm_form(form) == "y":
            return i_alpha(params, mpf(params.d) / 2, digits)
        p = params.p
        num = lambda x: n_a(x, p, mp.dps) ** 2 / (x ** p - 1) ** 2
        ball = ball_from_quad(_x_quad(params, digits, num, sigma_powers=1))
        if not ball.strictly_positive():
            raise CertificateError(f"i_l ball not positive at {params}")
        return ball


def i_r(params: Params, prec=50, form="y") -> Ball:
    """Cost integral, y-form (default) or x-form cross-check."""
    digits = _digits(prec)
    with mp.workdps(digits):
        if _norm_form(form) == "y":
            q = _y_moment(
                lambda s: _kr_of_s(s, params.p),
                params.M,
                (mpf(params.d) - 2) / 2,
                params.p,
                digits,
            )
        else:
            p = params.p
            q = _x_quad(params, digits, lambda x: d_fn(x, p, mp.dps))
        ball = ball_from_quad(q)
        if not ball.strictly_positive():
            raise CertificateError(f"i_r ball not positive at {params}")
        return ball


def ratio_r(params: Params, prec=50) -> Ball:
    """Incentive ratio p/(d-1) * I_L / I_R as a ball.

    The upper endpoint follows the certificate convention
    R_upper = p/(d-1) * (I_L + eps_L) / max(I_R - eps_R, 0.9999 I_R),
    which guards against an error estimate larger than a thousandth of
    the cost integral ever widening the bound past all meaning.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        il = i_l(params, digits)
        ir = i_r(params, digits)
        if not ir.strictly_positive():
            raise CertificateError(f"cost integral touches zero at {params}")
        coeff = params.p / (mpf(params.d) - 1)
        hi = coeff * il.upper() / max(ir.lower(), mpf("0.9999") * ir.mid)
        lo = coeff * il.lower() / ir.upper()
        mid = (hi + lo) / 2
        return Ball(mid, (hi - lo) / 2 + 4 * mp.eps * abs(mid))


def moment_set(params: Params, prec=50) -> MomentSet:
    """The three stacked moments plus the ratios u, v."""
    digits = _digits(prec)
    with mp.workdps(digits):
        half_d = mpf(params.d) / 2
        top = i_alpha(params, half_d, digits)
        mid = i_alpha(params, half_d - 1, digits)
        u = mid / top
        if params.d == 2:
            return MomentSet(None, mid, top, u, None)
        lo = i_alpha(params, half_d - 2, digits)
        return MomentSet(lo, mid, top, u, lo / top)


def abc_moments(params: Params, prec=50) -> AbcSet:
    """x-space weighted averages; fully independent of the y-form path."""
    digits = _digits(prec)
    with mp.workdps(digits):
        p = params.p
        num = lambda x: n_a(x, p, mp.dps) ** 2 / (x ** p - 1) ** 2
        ir = ball_from_quad(_x_quad(params, digits, lambda x: d_fn(x, p, mp.dps)))
        a = ball_from_quad(_x_quad(params, digits, num, sigma_powers=0)) / ir
        b = ball_from_quad(_x_quad(params, digits, num, sigma_powers=1)) / ir
        if params.d == 2:
            return AbcSet(a, b, None)
        c = ball_from_quad(_x_quad(params, digits, num, sigma_powers=-1)) / ir
        return AbcSet(a, b, c)


def h_dlog2(params: Params, prec=50, route="moments") -> Ball:
    """Second M-derivative of log I_L, via either independent route.

    moments: h = d [ u + (d-2) M^2 v - d M^2 u^2 ]   (y-form ratios)
    abc:     same formula with u = a/b, v = c/b      (x-form averages)
    d = 2 collapses to h = 2 u (1 - 2 M^2 u) on both routes.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        m2 = mpf(params.M) ** 2
        d = params.d
        if route == "moments":
            ms = moment_set(params, digits)
            u, v = ms.u, ms.v
        elif route == "abc":
            ab = abc_moments(params, digits)
            u = ab.a / ab.b
            v = ab.c / ab.b if ab.c is not None else None
        else:
            raise DomainError(f"route must be moments or abc, got {route!r}")
        if d == 2:
            return 2 * u * (1 - 2 * m2 * u)
        return d * (u + (d - 2) * m2 * v - d * m2 * (u * u))


def _j_gain(params: Params, prec=50) -> Ball:
    """Gain-side integral of the exchange identity: (x-1) D / x against w."""
    digits = _digits(prec)
    p = params.p
    num = lambda x: (x - 1) * d_fn(x, p, mp.dps) / x
    with mp.workdps(digits):
        return ball_from_quad(_x_quad(params, digits, num))


def gain_loss_residual(params: Params, prec=50) -> Ball:
    """Residual J - p/(d-1) * I_L of the gain-loss exchange identity.

    Both sides are evaluated in the x coordinate, where the identity is
    stated.  Callers normalise by J for a relative test.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        j = _j_gain(params, digits)
        k = (params.p / (mpf(params.d) - 1)) * i_l(params, digits, form="x")
        return j - k


def ir_d2_ratio(p, M, prec=50) -> Ball:
    """Two-dimensional log-concavity ratio G'(M) * int_1^M G dy / G(M)^2.

    Defined against the squared-denominator cost density (d = 2 drops
    the (M^2 - y^2) weight entirely, so the integral's M-derivative is
    the density at the endpoint).  Expected < 1; tends to p/(p+1) as
    M -> 1+.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        pv, mv = mpf(p), mpf(M)
        if not (2 < pv < 3):
            raise DomainError(f"ir_d2_ratio requires 2 < p < 3, got {p}")
        if not mv > 1:
            raise DomainError(f"ir_d2_ratio requires M > 1, got {M}")
        g_at_m = Ball(kernel.g_r_weight(mv, pv, digits))
        integral = ball_from_quad(
            integrate_offsets(
                lambda s: _g2_of_s(s, pv),
                lambda u: _g2_of_s(mv - 1 - u, pv),
                1,
                mv,
                digits,
                SingularityHints(a_exponent=pv - 2),
            )
        )
        # keep the difference stencil inside (1, M)
        h0 = min(mpf(10) ** (-2) * max(mpf(1), mv), (mv - 1) / 4)
        gprime = richardson_deriv(
            lambda y: kernel.g_r_weight(y, pv, digits), mv, order=1, prec=digits, h0=h0
        )
        return gprime * integral / (g_at_m * g_at_m)
