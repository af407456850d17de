"""Dimensional-boundary exploration: curvature scans, peak searches,
threshold bisection, asymptotic spot checks.

Unlike the certificate pipelines these are exploratory procedures: they
run at 30 digits by default, return plain numbers rather than balls,
and accept dimensions d >= 5 through the unchecked parameter path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from mpmath import mp, mpf

from .kernel import DomainError, Params, _digits, logf_derivs
from .integrals import h_dlog2, ratio_r

EXCEEDS_SCAN_LIMIT = "exceeds-scan-limit"


@dataclass(frozen=True)
class ScanResult:
    """Outcome of a curvature-condition scan over (y, M).

    m_cut is the refined first failing M (to within 0.05), or the
    sentinel string "exceeds-scan-limit" when no failure occurs below
    the scan limit.  failure_y is the y of the deepest violation at
    m_cut.  margin_min is the global minimum margin seen during the
    M sweep (positive for sentinel results).
    """

    m_cut: object
    failure_y: Optional[object]
    margin_min: object

    @property
    def exceeded(self):
        return self.m_cut == EXCEEDS_SCAN_LIMIT


@dataclass(frozen=True)
class PeakResult:
    r_peak: object
    m_peak: object
    tol: object
    bracket_valid: bool
    bracket_r_spread: object


@dataclass(frozen=True)
class PcritResult:
    lower: Optional[object]
    upper: Optional[object]
    peak_table: tuple
    resolution: object
    verdict: str
    widened_lower: Optional[object] = None
    widened_upper: Optional[object] = None


@dataclass(frozen=True)
class UnimodalDiag:
    m_grid: tuple
    slopes: tuple
    strictly_decreasing: bool
    peak_bracket: Optional[tuple]


def nsd_margin(y, M, d, p, prec=30):
    """Curvature margin d/(M^2 + y^2) - (log F)''(y); positive is good."""
    digits = _digits(prec)
    with mp.workdps(digits):
        yv, mv, pv = mpf(y), mpf(M), mpf(p)
        if not (1 < yv < mv):
            raise DomainError(f"need 1 < y < M, got y={y}, M={M}")
        _, d2 = logf_derivs(yv, pv, digits)
        return mpf(d) / (mv ** 2 + yv ** 2) - d2


def _y_grid(M, n):
    lo = mp.log(1 + mpf("1e-6"))
    hi = mp.log(M * (1 - mpf("1e-9")))
    return [mp.e ** (lo + (hi - lo) * mpf(k) / (n - 1)) for k in range(n)]


def _min_margin(M, d, p, n):
    best, ybest = mpf("inf"), None
    for y in _y_grid(M, n):
        m = mpf(d) / (M ** 2 + y ** 2) - logf_derivs(y, p, mp.dps)[1]
        if m < best:
            best, ybest = m, y
    return best, ybest


def scan_mcut(d, p, m_limit=20, y_grid_density=400, prec=30) -> ScanResult:
    """First M at which the curvature condition fails somewhere in y.

    Sweep M upward in steps of 0.1 from 1.1, scanning a 400-point
    log-spaced y grid at each step; on the first failing M, bisect the
    last step down to width 0.05 and report its upper end.
    """
    digits = _digits(prec)
    if not isinstance(d, int) or d < 2:
        raise DomainError(f"d must be an integer >= 2, got {d}")
    with mp.workdps(digits):
        pv, limit = mpf(p), mpf(m_limit)
        if not (d < pv < d + 1):
            raise DomainError(f"p must lie in ({d}, {d + 1}), got {p}")
        step = mpf("0.1")
        overall_min, fail_m = mpf("inf"), None
        M = 1 + step
        while M <= limit + step / 2:
            mm, _ = _min_margin(M, d, pv, y_grid_density)
            overall_min = min(overall_min, mm)
            if mm < 0:
                fail_m = M
                break
            M += step
        if fail_m is None:
            return ScanResult(EXCEEDS_SCAN_LIMIT, None, overall_min)
        lo, hi = fail_m - step, fail_m
        while hi - lo > mpf("0.05"):
            mid = (lo + hi) / 2
            mm, _ = _min_margin(mid, d, pv, y_grid_density)
            if mm < 0:
                hi = mid
            else:
                lo = mid
        _, fy = _min_margin(hi, d, pv, y_grid_density)
        return ScanResult(hi, fy, overall_min)


def _r_mid(d, p, M, digits):
    return ratio_r(Params.unchecked(d, p, M), digits).mid


def r_peak(d, p, m_range=(1.5, 30), tol="0.05", prec=30) -> PeakResult:
    """Golden-section maximum of M -> R(M, p, d).

    Relies on unimodality of R in M; the returned flag records whether
    the located peak value actually dominates both final bracket
    endpoints (it can fail if the true peak sits outside m_range).
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        tolv = mpf(tol)
        if not tolv > 0:
            raise DomainError(f"tol must be positive, got {tol}")
        a, b = mpf(m_range[0]), mpf(m_range[1])
        if not 1 < a < b:
            raise DomainError(f"bad m_range {m_range}")
        pv = mpf(p)
        gr = (mp.sqrt(5) - 1) / 2
        c = b - gr * (b - a)
        e = a + gr * (b - a)
        fc, fe = _r_mid(d, pv, c, digits), _r_mid(d, pv, e, digits)
        while b - a > tolv:
            if fc > fe:
                b, e, fe = e, c, fc
                c = b - gr * (b - a)
                fc = _r_mid(d, pv, c, digits)
            else:
                a, c, fc = c, e, fe
                e = a + gr * (b - a)
                fe = _r_mid(d, pv, e, digits)
        m_pk = (a + b) / 2
        r_pk = _r_mid(d, pv, m_pk, digits)
        ra, rb = _r_mid(d, pv, a, digits), _r_mid(d, pv, b, digits)
        return PeakResult(
            r_pk, m_pk, tolv, bool(r_pk >= ra and r_pk >= rb), abs(ra - rb)
        )


def locate_pcrit(d, resolution=mpf("0.001"), prec=30) -> PcritResult:
    """Bisect for the p at which the best-case ratio crosses 1.

    Probes just inside both ends of (d, d+1) first: already
    supercritical at the low end or still subcritical at the high end
    short-circuits with a sentinel verdict (no bracket).  The returned
    bracket is the raw bisection interval; the widened interval adds
    half the resolution plus the peak-search tolerance propagated
    through the secant slope of the sweep table.
    """
    digits = _digits(prec)
    if not isinstance(d, int) or d < 5:
        raise DomainError(f"locate_pcrit explores d >= 5, got {d}")
    with mp.workdps(digits):
        res = mpf(resolution)
        if not res > 0:
            raise DomainError(f"resolution must be positive, got {resolution}")
        p_lo_probe = d + res
        pk_lo = r_peak(d, p_lo_probe, prec=digits)
        if pk_lo.r_peak >= 1:
            return PcritResult(
                None, None, ((p_lo_probe, pk_lo),), res, "supercritical-throughout"
            )
        p_hi_probe = d + 1 - res
        pk_hi = r_peak(d, p_hi_probe, prec=digits)
        if pk_hi.r_peak < 1:
            return PcritResult(
                None, None, ((p_hi_probe, pk_hi),), res, "no-threshold-below-d+1"
            )
        table = []
        lo, lo_last_sub = p_lo_probe, None
        hi = p_hi_probe
        for k in range(1, 6):
            pk_p = d + mpf(k) / 10
            pk = r_peak(d, pk_p, prec=digits)
            table.append((pk_p, pk))
            if pk.r_peak < 1 and pk_p > lo:
                lo = pk_p
            if pk.r_peak >= 1 and pk_p < hi:
                hi = pk_p
        last = None
        while hi - lo > res:
            mid = (lo + hi) / 2
            last = r_peak(d, mid, prec=digits)
            if last.r_peak >= 1:
                hi = mid
            else:
                lo = mid
        # tolerance propagation: R spread across the final golden bracket,
        # divided through the table's secant slope of R_peak in p
        slope = (table[-1][1].r_peak - table[-2][1].r_peak) / (
            table[-1][0] - table[-2][0]
        )
        spread = last.bracket_r_spread if last is not None else mpf(0)
        half = res / 2 + spread / slope
        return PcritResult(
            lo, hi, tuple(table), res, "bracketed", lo - half, hi + half
        )


def largeM_check(d, p, m_values, prec=50):
    """Rows (M, h ball, leading asymptote -(d-2)/M^2, M^3-scaled remainder)."""
    digits = _digits(prec)
    if d not in (3, 4):
        raise DomainError(f"largeM_check covers d in {{3, 4}}, got {d}")
    rows = []
    with mp.workdps(digits):
        pv = mpf(p)
        for m in m_values:
            mv = mpf(m)
            if mv < 20:
                raise DomainError(f"large-M check needs M >= 20, got {m}")
            h = h_dlog2(Params.unchecked(d, pv, mv), digits)
            asym = -(mpf(d) - 2) / mv ** 2
            remainder = mv ** 3 * abs(h.mid - asym)
            rows.append((mv, h, asym, remainder))
    return rows


def unimodality_diag(d, p, m_grid, prec=30) -> UnimodalDiag:
    """Finite-difference slopes of log R across m_grid.

    The slope sequence should decrease strictly; where it crosses zero
    the enclosing pair of grid cells brackets the peak.
    """
    digits = _digits(prec)
    with mp.workdps(digits):
        ms = tuple(mpf(str(m)) for m in m_grid)
        if any(ms[i] >= ms[i + 1] for i in range(len(ms) - 1)) or len(ms) < 3:
            raise DomainError("m_grid must be strictly increasing, length >= 3")
        pv = mpf(p)
        logs = [mp.log(_r_mid(d, pv, m, digits)) for m in ms]
        slopes = tuple(
            (logs[i + 1] - logs[i]) / (ms[i + 1] - ms[i]) for i in range(len(ms) - 1)
        )
        decreasing = all(slopes[i] > slopes[i + 1] for i in range(len(slopes) - 1))
        bracket = None
        for i in range(len(slopes) - 1):
            if slopes[i] > 0 >= slopes[i + 1]:
                bracket = (ms[i], ms[i + 2])
                break
        return UnimodalDiag(ms, slopes, decreasing, bracket)
