"""Closed-form kernel algebra for the incentive-ratio integrands.

Everything in this module is a pure function of its arguments plus an
explicit working precision.  No quadrature, no caching, no global state
beyond mpmath's context (which each call scopes with ``mp.workdps``).

Conventions used throughout the package:

* ``x`` is the likelihood-ratio variable on ``(x0, inf)`` with
  ``x0 = (M + 1)/(M - 1)``.
* ``y = (x + 1)/(x - 1)`` maps that ray onto ``(1, M)``; the map is an
  involution, so ``x_of_y`` inverts itself.
* ``p`` is the score exponent, ``d`` the dimension, ``M`` the likelihood
  ratio bound.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class Precision:
    """Working precision in decimal digits.

    Certificates default to 50 digits; scan-style searches usually run
    at 30.  Anything below 15 digits defeats the error tracking, so the
    constructor rejects it.
    """

    digits: int = 50

    def __post_init__(self):
        if self.digits < 15:
            raise DomainError(f"precision must be >= 15 digits, got {self.digits}")


def _digits(prec) -> int:
    """Accept an int digit count or a Precision; return the digit count."""
    if isinstance(prec, Precision):
        return prec.digits
    digits = int(prec)
    if digits < 15:
        raise DomainError(f"precision must be >= 15 digits, got {digits}")
    return digits


@dataclass(frozen=True)
class Params:
    """Problem parameters (dimension, exponent, ratio bound).

    The strict constructor enforces the window ``d < p < d + 1`` in
    which the downstream certificates are meaningful.  Exploratory code
    (threshold searches sweep p across the whole unit window and beyond)
    can opt out via :meth:`unchecked`.
    """

    d: int
    p: object
    M: object
    checked: bool = True

    def __post_init__(self):
        if not isinstance(self.d, int) or isinstance(self.d, bool):
            raise DomainError(f"d must be an integer, got {self.d!r}")
        if self.d < 2:
            raise DomainError(f"d must be >= 2, got {self.d}")
        p = mpf(self.p)
        m = mpf(self.M)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "M", m)
        if not m > 1:
            raise DomainError(f"M must be > 1, got {self.M}")
        if self.checked:
            if not (self.d < p < self.d + 1):
                raise DomainError(
                    f"p must lie in ({self.d}, {self.d + 1}) exclusive, got {p}"
                )
        else:
            if not p > 1:
                raise DomainError(f"p must be > 1, got {p}")

    @classmethod
    def unchecked(cls, d, p, M) -> "Params":
        """Relax the p-window to ``p > 1`` for exploratory evaluation."""
        return cls(d=d, p=p, M=M, checked=False)


def x0(M, prec=50):
    """Left endpoint of the x-ray: (M + 1)/(M - 1)."""
    with mp.workdps(_digits(prec)):
        m = mpf(M)
        if not m > 1:
            raise DomainError(f"M must be > 1, got {M}")
        return (m + 1) / (m - 1)


def phi(x, M, prec=50):
    """Discriminant M^2 (x-1)^2 - (x+1)^2, positive exactly for x > x0.

    Evaluated in factored form (M-1)*(x - x0)*((M+1) x - (M-1)) so that
    values just above x0 do not lose all their digits to cancellation.
    """
    with mp.workdps(_digits(prec)):
        xv, m = mpf(x), mpf(M)
        if not m > 1:
            raise DomainError(f"M must be > 1, got {M}")
        delta = xv - (m + 1) / (m - 1)
        return (m - 1) * delta * ((m + 1) * xv - (m - 1))


def sigma2(x, M, prec=50):
    """Variance factor phi/(x-1)^2, equal to M^2 - y^2 on the y side."""
    with mp.workdps(_digits(prec)):
        xv = mpf(x)
        if xv == 1:
            raise DomainError("sigma2 undefined at x = 1")
        return phi(xv, M, prec) / (xv - 1) ** 2


def n_a(x, p, prec=50):
    """Numerator polynomial x^(2p-2) - (p-1) x^p + (p-1) x^(p-2) - 1.

    Has a triple root at x = 1 for every p; the evaluation order below
    keeps that root exact in floating point (all four terms are exact
    at x = 1).
    """
    with mp.workdps(_digits(prec)):
        xv, pv = mpf(x), mpf(p)
        if not xv > 0:
            raise DomainError(f"n_a requires x > 0, got {x}")
        return (
            xv ** (2 * pv - 2)
            - (pv - 1) * xv ** pv
            + (pv - 1) * xv ** (pv - 2)
            - 1
        )


def _n_a_d1(x, p):
    # first derivative in x, same term order as n_a
    return (
        (2 * p - 2) * x ** (2 * p - 3)
        - p * (p - 1) * x ** (p - 1)
        + (p - 1) * (p - 2) * x ** (p - 3)
    )


def _n_a_d2(x, p):
    return (
        (2 * p - 2) * (2 * p - 3) * x ** (2 * p - 4)
        - p * (p - 1) ** 2 * x ** (p - 2)
        + (p - 1) * (p - 2) * (p - 3) * x ** (p - 4)
    )


def n_a_derivs_at_1(p, prec=50):
    """(value, first, second) derivatives of n_a at x = 1.

    All three vanish identically in p; callers use this as a residual
    check on the coefficient algebra, so the terms are combined exactly
    as written rather than simplified.
    """
    with mp.workdps(_digits(prec)):
        pv = mpf(p)
        one = mpf(1)
        return (
            n_a(one, pv, prec),
            _n_a_d1(one, pv),
            _n_a_d2(one, pv),
        )


def d_fn(x, p, prec=50):
    """Denominator form (x^(p-1) + 1)^2 + (p-1) x^(p-2) (x+1)^2."""
    with mp.workdps(_digits(prec)):
        xv, pv = mpf(x), mpf(p)
        if not xv > 0:
            raise DomainError(f"d_fn requires x > 0, got {x}")
        return (xv ** (pv - 1) + 1) ** 2 + (pv - 1) * xv ** (pv - 2) * (xv + 1) ** 2


def w_fn(x, params: Params, prec=50):
    """Common x-side weight phi^((d-2)/2) / ((x^p - 1) (x-1)^(p+d-2)).

    Only defined on the open ray x > x0(M); phi would go negative under
    a fractional power to the left of it.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        xv = mpf(x)
        left = x0(params.M, digits)
        if not xv > left:
            raise DomainError(f"w_fn requires x > x0 = {left}, got {x}")
        ph = phi(xv, params.M, digits)
        return ph ** ((params.d - 2) / mpf(2)) / (
            (xv ** params.p - 1) * (xv - 1) ** (params.p + params.d - 2)
        )


def x_of_y(y, prec=50):
    """Moebius change of variables (y+1)/(y-1); its own inverse."""
    with mp.workdps(_digits(prec)):
        yv = mpf(y)
        if not yv > 1:
            raise DomainError(f"x_of_y requires y > 1, got {y}")
        return (yv + 1) / (yv - 1)


def _f_of_s(s, p):
    """Ratio-gain density in the offset variable s = y - 1.

    Expects the ambient mp context to be set by the caller.  Written in
    factored form: x = (s+2)/s grows like 2/s near s = 0, and every
    factor below stays individually representable, so no logs needed.
    """
    x = (s + 2) / s
    na = n_a(x, p, mp.dps)
    return 2 * na * na * s ** (p - 2) / (2 ** p * (x ** p - 1) ** 3)


def f_weight(y, p, prec=50):
    """Ratio-gain density F(y) = 2 N_A(x(y))^2 (y-1)^(p-2) / (2^p (x^p-1)^3).

    Evaluated through the offset s = y - 1 so the near-1 blowup of x(y)
    never passes through a cancelling subtraction.
    """
    with mp.workdps(_digits(prec)):
        yv = mpf(y)
        if not yv > 1:
            raise DomainError(f"f_weight requires y > 1, got {y}")
        return _f_of_s(yv - 1, mpf(p))


def _g2_of_s(s, p):
    """Ratio-cost density variant with the squared cubic denominator.

    This is the printed closed form with (x^p - 1)^2; kept verbatim
    because the two-dimensional ratio diagnostic is defined relative to
    it (see integrals.ir_d2_ratio).  The certified cost integral uses
    the first-power kernel in integrals instead.
    """
    x = (s + 2) / s
    return 2 * d_fn(x, p, mp.dps) * s ** (p - 2) / (2 ** p * (x ** p - 1) ** 2)


def g_r_weight(y, p, prec=50):
    """Ratio-cost density G(y) = 2 D(x(y)) (y-1)^(p-2) / (2^p (x^p-1)^2)."""
    with mp.workdps(_digits(prec)):
        yv = mpf(y)
        if not yv > 1:
            raise DomainError(f"g_r_weight requires y > 1, got {y}")
        return _g2_of_s(yv - 1, mpf(p))


def logf_derivs(y, p, prec=50):
    """First and second y-derivatives of log F(y), in closed form.

    Assembled from the chain rule through x(y): with q = p x^(p-1)/(x^p-1),
    n1 = N_A'/N_A, n2 = N_A''/N_A,

        (log F)'  = 2 n1 x' + (p-2)/(y-1) - 3 q x'
        (log F)'' = 2 ((n2 - n1^2) x'^2 + n1 x'')
                    - (p-2)/(y-1)^2 - 3 (q' x'^2 + q x'')

    where x' = -2/(y-1)^2 and x'' = 4/(y-1)^3.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        yv, pv = mpf(y), mpf(p)
        if not yv > 1:
            raise DomainError(f"logf_derivs requires y > 1, got {y}")
        s = yv - 1
        x = (s + 2) / s
        xp = -2 / s ** 2
        xpp = 4 / s ** 3

        na = n_a(x, pv, digits)
        if na == 0:
            raise DomainError("log F derivative undefined where N_A vanishes")
        n1 = _n_a_d1(x, pv) / na
        n2 = _n_a_d2(x, pv) / na

        xpow = x ** pv
        q = pv * x ** (pv - 1) / (xpow - 1)
        qp = pv * (pv - 1) * x ** (pv - 2) / (xpow - 1) - (
            pv ** 2 * x ** (2 * pv - 2) / (xpow - 1) ** 2
        )

        d1 = 2 * n1 * xp + (pv - 2) / s - 3 * q * xp
        d2 = (
            2 * ((n2 - n1 ** 2) * xp ** 2 + n1 * xpp)
            - (pv - 2) / s ** 2
            - 3 * (qp * xp ** 2 + q * xpp)
        )
        return d1, d2
