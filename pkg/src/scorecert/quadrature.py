"""Tanh-sinh quadrature with endpoint handling, plus ball arithmetic.

The integrands in this package concentrate near interval endpoints and
carry fractional-power factors there.  Raw tanh-sinh pushes nodes so
close to the endpoints that forming ``y - a`` by subtraction rounds to
zero long before the quadrature converges.  The engine here therefore
always works in distance-from-endpoint variables: a finite interval is
split at its midpoint and each half integrated in the offset from its
nearer endpoint; a right-infinite interval is compactified through
``s = t/(1 - t)``.  Callers that can express their integrand directly
in offset form (see :func:`integrate_offsets`) keep full precision all
the way into the corners.

Ball arithmetic is deliberately small: midpoint-radius pairs with
outward rounding, just enough to propagate quadrature error estimates
and finite-difference disagreements through the certificate formulas.
Division by a ball containing zero raises; certificates must fail
loudly rather than absorb an infinite interval.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf

from .kernel import DomainError, _digits


class IntegrandError(ArithmeticError):
    """Integrand returned a non-finite value at an interior node."""


class ConvergenceError(ArithmeticError):
    """Quadrature error estimate failed to reach tolerance.

    Carries the best result obtained so callers can inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BallDivisionError(ZeroDivisionError):
    """Division by a ball whose interval contains zero."""


@dataclass(frozen=True)
class QuadResult:
    value: object
    err_estimate: object
    evaluations: int


@dataclass(frozen=True)
class SingularityHints:
    """Optional endpoint exponents alpha in (y - a)^alpha or (b - y)^alpha.

    A hinted endpoint with a negative or non-integer exponent gets the
    power substitution s = v**2, which turns an integrable algebraic
    singularity into a bounded (or milder) one.  ``None`` marks a
    regular endpoint.
    """

    a_exponent: object = None
    b_exponent: object = None


# --------------------------------------------------------------------------
# ball arithmetic


def _pad(m):
    # outward-rounding slop: a few ulps of the midpoint
    if m == 0:
        return mpf(2) ** (-mp.prec)
    return 4 * mp.eps * abs(m)


def _as_ball(x):
    return x if isinstance(x, Ball) else Ball(x)


class Ball:
    """Midpoint-radius enclosure with outward rounding.

    Not a full interval library: supports the arithmetic the
    certificates need (field ops, powers, abs/max, order tests with
    certainty).  Radii are always finite and non-negative.
    """

    __slots__ = ("mid", "rad")

    def __init__(self, mid, rad=0):
        m = mpf(mid)
        r = mpf(rad)
        if r < 0 or not mp.isfinite(m) or not mp.isfinite(r):
            raise ValueError(f"bad ball ({mid}, {rad})")
        self.mid = m
        self.rad = r

    def lower(self):
        return self.mid - self.rad

    def upper(self):
        return self.mid + self.rad

    def contains(self, x):
        return self.lower() <= mpf(x) <= self.upper()

    def strictly_positive(self):
        return self.lower() > 0

    def strictly_negative(self):
        return self.upper() < 0

    def strictly_less(self, other):
        other = _as_ball(other)
        return self.upper() < other.lower()

    def __repr__(self):
        return f"Ball({self.mid!r}, {self.rad!r})"

    def __neg__(self):
        return Ball(-self.mid, self.rad)

    def __add__(self, other):
        other = _as_ball(other)
        m = self.mid + other.mid
        return Ball(m, self.rad + other.rad + _pad(m))

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_ball(other)
        m = self.mid - other.mid
        return Ball(m, self.rad + other.rad + _pad(m))

    def __rsub__(self, other):
        return _as_ball(other) - self

    def __mul__(self, other):
        other = _as_ball(other)
        m = self.mid * other.mid
        r = (
            abs(self.mid) * other.rad
            + abs(other.mid) * self.rad
            + self.rad * other.rad
        )
        return Ball(m, r + _pad(m))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_ball(other)
        if other.rad >= abs(other.mid):
            raise BallDivisionError(
                f"division by ball containing zero: {other!r}"
            )
        lo1, hi1 = self.lower(), self.upper()
        lo2, hi2 = other.lower(), other.upper()
        cands = [lo1 / lo2, lo1 / hi2, hi1 / lo2, hi1 / hi2]
        lo, hi = min(cands), max(cands)
        m = (lo + hi) / 2
        return Ball(m, (hi - lo) / 2 + _pad(m))

    def __rtruediv__(self, other):
        return _as_ball(other) / self

    def __pow__(self, k):
        lo, hi = self.lower(), self.upper()
        if isinstance(k, int):
            if k == 0:
                return Ball(1)
            if k < 0:
                return (Ball(1) / self) ** (-k)
            a, b = lo ** k, hi ** k
            if k % 2 == 0 and lo < 0 < hi:
                clo, chi = mpf(0), max(a, b)
            else:
                clo, chi = min(a, b), max(a, b)
        else:
            if not lo > 0:
                raise DomainError(
                    f"fractional power needs a strictly positive ball, got {self!r}"
                )
            kv = mpf(k)
            a, b = lo ** kv, hi ** kv
            clo, chi = min(a, b), max(a, b)
        m = (clo + chi) / 2
        return Ball(m, (chi - m) + _pad(m))

    def abs(self):
        lo, hi = self.lower(), self.upper()
        if lo >= 0:
            return Ball(self.mid, self.rad)
        if hi <= 0:
            return Ball(-self.mid, self.rad)
        m = max(-lo, hi) / 2
        return Ball(m, m + _pad(m))

    def max_with(self, other):
        other = _as_ball(other)
        lo = max(self.lower(), other.lower())
        hi = max(self.upper(), other.upper())
        m = (lo + hi) / 2
        return Ball(m, (hi - lo) / 2 + _pad(m))


def ball_from_quad(result: QuadResult) -> Ball:
    """Promote a quadrature result to a ball.

    The radius is the tanh-sinh error *estimate*, not a rigorous bound;
    downstream reports label everything built on this as semi-rigorous.
    """
    return Ball(result.value, result.err_estimate)


# --------------------------------------------------------------------------
# integration engine


class _Counted:
    __slots__ = ("fn", "n")

    def __init__(self, fn):
        self.fn = fn
        self.n = 0

    def __call__(self, t):
        self.n += 1
        v = self.fn(t)
        if not mp.isfinite(v):
            raise IntegrandError(f"integrand returned {v} at t = {t}")
        return v


def _needs_power_sub(exponent):
    if exponent is None:
        return False
    e = mpf(exponent)
    if e <= -1:
        raise DomainError(f"endpoint exponent {exponent} is not integrable")
    return e < 0 or e != mp.floor(e)


def _half_integral(g, half_width, exponent, maxdegree):
    """Integrate g over offsets (0, half_width) from one endpoint."""
    if _needs_power_sub(exponent):
        counted = _Counted(lambda v: 2 * v * g(v * v))
        hi = mp.sqrt(half_width)
    else:
        counted = _Counted(g)
        hi = half_width
    val, err = mp.quad(counted, [mpf(0), hi], error=True, maxdegree=maxdegree)
    return val, err, counted.n


def _tail_integral(g, exponent, maxdegree):
    """Integrate g over offsets (0, inf), compactified via s = t/(1-t)."""
    if _needs_power_sub(exponent):
        base = lambda v: 2 * v * g(v * v)
    else:
        base = g
    counted = _Counted(lambda t: base(t / (1 - t)) / (1 - t) ** 2)
    val, err = mp.quad(counted, [mpf(0), mpf(1)], error=True, maxdegree=maxdegree)
    return val, err, counted.n


def integrate_offsets(g_lo, g_hi, a, b, prec=50, hints=None, maxdegree=8):
    """Integrate f over (a, b) given offset-form evaluators.

    ``g_lo(s)`` must equal f(a + s) and, for finite b, ``g_hi(u)`` must
    equal f(b - u).  Offsets arrive as exact small mpf values, so
    integrands with endpoint-singular factors can form them without
    cancellation.  For b = inf only ``g_lo`` is used.
    """
    digits = _digits(prec)
    hints = hints or SingularityHints()
    with mp.workdps(digits):
        av = mpf(a)
        bv = mpf(b)
        if bv == mp.inf:
            val, err, n = _tail_integral(g_lo, hints.a_exponent, maxdegree)
        else:
            if not bv > av:
                raise DomainError(f"empty interval ({a}, {b})")
            half = (bv - av) / 2
            v1, e1, n1 = _half_integral(g_lo, half, hints.a_exponent, maxdegree)
            v2, e2, n2 = _half_integral(g_hi, half, hints.b_exponent, maxdegree)
            val, err, n = v1 + v2, e1 + e2, n1 + n2
        err = abs(mpf(err))
        result = QuadResult(val, err, n)
        tol = mpf(10) ** (-6) * max(abs(val), mpf(10) ** (-digits))
        if err > tol:
            raise ConvergenceError(
                f"quadrature error {mp.nstr(err, 5)} exceeds tolerance "
                f"{mp.nstr(tol, 5)} on ({a}, {b})",
                best=result,
            )
        return result


def integrate(f, a, b, prec=50, hints=None, maxdegree=8):
    """Integrate f over (a, b) with optional endpoint-singularity hints.

    Convenience wrapper over :func:`integrate_offsets`; offsets are
    translated back to the original coordinate before calling f, which
    is fine when a and b are exactly representable or the endpoint
    factors are mild.  Integrands that would lose precision forming
    ``y - a`` themselves should use the offset form directly.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        av = mpf(a)
        bv = mpf(b)
        g_lo = lambda s: f(av + s)
        g_hi = lambda u: f(bv - u)
        return integrate_offsets(g_lo, g_hi, av, bv, digits, hints, maxdegree)


# --------------------------------------------------------------------------
# numerical differentiation


def _richardson_table(samples, ratio_pow):
    # samples: list of Ball finite-difference estimates, coarsest first
    rows = [list(samples)]
    n = len(samples)
    for j in range(1, n):
        prev = rows[-1]
        factor = mpf(ratio_pow) ** j
        rows.append(
            [
                (factor * prev[i + 1] - prev[i]) / (factor - 1)
                for i in range(len(prev) - 1)
            ]
        )
    return rows


def _stencil_values(g, t, hs, need_center):
    vals = {}
    if need_center:
        vals[0] = _as_ball(g(t))
    for h in hs:
        vals[h] = _as_ball(g(t + h))
        vals[-h] = _as_ball(g(t - h))
    return vals


def _first_from_stencil(vals, hs):
    diffs = [(vals[h] - vals[-h]) / (2 * h) for h in hs]
    rows = _richardson_table(diffs, 4)
    best = rows[-1][0]
    prev = rows[-2][0]
    return Ball(best.mid, best.rad + abs(best.mid - prev.mid) + _pad(best.mid))


def _second_from_stencil(vals, hs):
    c = vals[0]
    diffs = [(vals[h] - 2 * c + vals[-h]) / (h * h) for h in hs]
    rows = _richardson_table(diffs, 4)
    best = rows[-1][0]
    prev = rows[-2][0]
    return Ball(best.mid, best.rad + abs(best.mid - prev.mid) + _pad(best.mid))


def _default_steps(t, order, h0):
    levels = 4 if order == 1 else 5
    if h0 is None:
        h0 = mpf(10) ** (-2) * max(mpf(1), abs(mpf(t)))
    else:
        h0 = mpf(h0)
    return [h0 / 2 ** k for k in range(levels)]


def richardson_deriv(g, t, order=1, prec=50, h0=None):
    """Richardson-extrapolated central difference, returned as a ball.

    ``g`` may return plain numbers or balls; ball radii propagate
    through the extrapolation table, and the disagreement between the
    two deepest table entries is added to the final radius as the
    truncation term.  order 1 uses 4 step levels (8 evaluations),
    order 2 uses 5 levels plus the center (11 evaluations).
    """
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order}")
    digits = _digits(prec)
    with mp.workdps(digits):
        tv = mpf(t)
        hs = _default_steps(tv, order, h0)
        vals = _stencil_values(g, tv, hs, need_center=(order == 2))
        if order == 1:
            return _first_from_stencil(vals, hs)
        return _second_from_stencil(vals, hs)


def richardson_pair(g, t, prec=50, h0=None):
    """Both derivative orders from one shared 11-point stencil.

    The order-1 extrapolation uses the four coarsest step levels of the
    order-2 stencil, so callers needing both derivatives at one point
    pay 11 evaluations instead of 19.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        tv = mpf(t)
        hs = _default_steps(tv, 2, h0)
        vals = _stencil_values(g, tv, hs, need_center=True)
        d1 = _first_from_stencil(vals, hs[:4])
        d2 = _second_from_stencil(vals, hs)
        return d1, d2
