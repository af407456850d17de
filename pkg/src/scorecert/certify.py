"""Grid certificate pipelines and report emission.

Two certificates:

* the curvature (residual) certificate: the second log-derivative h of
  the gain integral is negative on the whole (d, p, M) box, shown by
  evaluating h on a grid, certifying dh/dM > 0 at every grid point
  below the top M (so the supremum per (d, p) sits at the last M), and
  adding a p-direction Lipschitz correction;
* the ratio bound certificate: R stays below 1, shown by pointwise
  upper evaluations plus per-interval Lipschitz closure
  bound(i) = R_upper(M_i) + L_local(i) * (M_{i+1} - M_i) / 2 with
  L_local(i) = |dR/dM|(M_i) + |d2R/dM2|(M_i) * (M_{i+1} - M_i), and a
  global p-correction L_p * delta_p / 2.

Everything downstream of the quadrature error estimate is ball
arithmetic, but the radii start life as heuristic refinement
differences, so the whole pipeline is semi-rigorous; every report says
so in its methodology note.

Grid evaluation is embarrassingly parallel; records are aggregated in
(d, p, M) order regardless of execution order, and all serialisations
are deterministic decimal strings, so two runs of the same grid at the
same precision produce byte-identical reports.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from mpmath import mp, mpf

from .kernel import DomainError, Params, Precision
from .quadrature import Ball, richardson_deriv, richardson_pair
from .integrals import h_dlog2, ratio_r

METHODOLOGY_NOTE = (
    "Semi-rigorous certificate: quadrature radii are tanh-sinh refinement "
    "error estimates, not proven enclosures; derivative bounds use "
    "Richardson extrapolation with step-disagreement radii; interval "
    "closures take endpoint second derivatives as conservative Lipschitz "
    "constants for the first derivative on the interval."
)

RELATIVE_HEALTH = mpf(10) ** (-6)


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid: dims x (d + p_offsets) x m_values at one precision."""

    dims: tuple
    p_offsets: tuple
    m_values: tuple
    prec: Precision = Precision(50)

    def __post_init__(self):
        # canonical order keeps records globally (d, p, M)-sorted
        object.__setattr__(self, "dims", tuple(sorted(int(d) for d in self.dims)))
        # coerce grid strings at the grid's own precision, not ambient
        with mp.workdps(self.prec.digits):
            offs = tuple(sorted(mpf(str(o)) for o in self.p_offsets))
            ms = tuple(mpf(str(m)) for m in self.m_values)
        object.__setattr__(self, "p_offsets", offs)
        object.__setattr__(self, "m_values", ms)
        if not self.dims or any(d < 2 for d in self.dims):
            raise DomainError(f"dims must be integers >= 2, got {self.dims}")
        if not offs or any(not (0 < o < 1) for o in offs):
            raise DomainError("p_offsets must lie strictly in (0, 1)")
        if not ms or any(ms[i] >= ms[i + 1] for i in range(len(ms) - 1)):
            raise DomainError("m_values must be strictly increasing")
        if ms[0] <= 1:
            raise DomainError("m_values must exceed 1")

    @classmethod
    def residual_default(cls, prec=Precision(50)):
        return cls(
            dims=(3, 4),
            p_offsets=("0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "0.99"),
            m_values=(2, 3, 5, 7, 10, 15, 20),
            prec=prec,
        )

    @classmethod
    def rbound_default(cls, prec=Precision(50)):
        return cls(
            dims=(2, 3, 4),
            p_offsets=("0.05", "0.15", "0.25", "0.35", "0.45", "0.55", "0.65", "0.75", "0.85", "0.95"),
            m_values=(
                "1.001", "1.5", "2", "2.5", "3", "3.5", "4", "4.5", "5",
                "5.75", "6.5", "8", "10", "12", "15", "17.5", "20",
            ),
            prec=prec,
        )

    def pairs(self):
        for d in self.dims:
            for off in self.p_offsets:
                with mp.workdps(self.prec.digits):
                    p = d + off
                yield d, p

    def points(self):
        for d, p in self.pairs():
            for m in self.m_values:
                yield d, p, m


@dataclass
class CertRecord:
    params: Params
    value: Optional[Ball]
    dM: Optional[Ball] = None
    d2M: Optional[Ball] = None
    dp: Optional[Ball] = None
    flags: tuple = ()


@dataclass
class IntervalCert:
    d: int
    p: object
    m_lo: object
    m_hi: object
    delta_min: object
    k_max: object
    passed: bool
    depth: int
    finest_width: object


@dataclass
class CertReport:
    kind: str
    grid: GridSpec
    records: list
    worst_point: Optional[CertRecord]
    interval_bounds: list
    p_correction: Optional[Ball]
    final_bound: Optional[Ball]
    verdict: str
    methodology_note: str = METHODOLOGY_NOTE


# --------------------------------------------------------------------------
# point evaluators


def _h_eval(d, p, M, digits) -> Ball:
    # unchecked so derivative stencils may step just outside the p-window
    return h_dlog2(Params.unchecked(d, p, M), digits)


def _r_eval(d, p, M, digits) -> Ball:
    return ratio_r(Params.unchecked(d, p, M), digits)


def _m_step(M):
    # keep the whole difference stencil inside M > 1
    return min(mpf(10) ** (-2) * max(mpf(1), abs(M)), (M - 1) / 4)


def _healthy(*balls):
    for b in balls:
        if b is None:
            continue
        scale = abs(b.mid)
        if scale == 0 or b.rad > RELATIVE_HEALTH * scale:
            return False
    return True


def _point_flags(M):
    return ("near-boundary",) if M < mpf("1.001") else ()


def _eval_point(d, p, M, digits, wants_dM, wants_d2M, wants_dp, evaluator):
    """One grid point: value plus requested derivative balls.

    Returns (value, dM_signed, d2M, dp) with dM kept signed so sign
    checks can run before the magnitude is stored.
    """
    with mp.workdps(digits):
        value = evaluator(d, p, M, digits)
        dM = d2M = dp = None
        if wants_dM or wants_d2M:
            g = lambda m: evaluator(d, p, m, digits)
            if wants_d2M:
                dM, d2M = richardson_pair(g, M, digits, h0=_m_step(M))
            else:
                dM = richardson_deriv(g, M, 1, digits, h0=_m_step(M))
        if wants_dp:
            gp = lambda q: evaluator(d, q, M, digits)
            dp = richardson_deriv(gp, p, 1, digits)
        return value, dM, d2M, dp


def _record_point(d, p, M, digits, wants_dM, wants_d2M, wants_dp, evaluator):
    out = _eval_point(d, p, M, digits, wants_dM, wants_d2M, wants_dp, evaluator)
    flags = list(_point_flags(M))
    if not _healthy(*out):
        digits2 = int(digits * 3 // 2)
        out = _eval_point(d, p, M, digits2, wants_dM, wants_d2M, wants_dp, evaluator)
        flags.append("escalated")
        if not _healthy(*out):
            flags.append("radius-health")
    return out, flags


# --------------------------------------------------------------------------
# parallel plumbing


def _wire_ball(b):
    return None if b is None else (b.mid._mpf_, b.rad._mpf_)


def _unwire_ball(t, digits):
    if t is None:
        return None
    with mp.workdps(digits):
        return Ball(mp.make_mpf(t[0]), mp.make_mpf(t[1]))


def _point_task(task):
    kind, d, p_w, m_w, digits, wants_dM, wants_d2M, wants_dp = task
    with mp.workdps(digits):
        p = mp.make_mpf(p_w)
        M = mp.make_mpf(m_w)
    evaluator = _h_eval if kind == "residual" else _r_eval
    try:
        (value, dM, d2M, dp), flags = _record_point(
            d, p, M, digits, wants_dM, wants_d2M, wants_dp, evaluator
        )
        return (
            tuple(_wire_ball(b) for b in (value, dM, d2M, dp)),
            tuple(flags),
            None,
        )
    except Exception as exc:  # a failed point must not abort the grid
        return None, (), f"{type(exc).__name__}: {exc}"


def _run_points(kind, grid, jobs, parallel, evaluator):
    """jobs: list of (d, p, M, wants_dM, wants_d2M, wants_dp)."""
    digits = grid.prec.digits
    results = []
    workers = parallel
    if workers == 0:
        import os

        workers = os.cpu_count() or 1
    if workers > 1 and evaluator is None:
        tasks = [
            (kind, d, p._mpf_, M._mpf_, digits, a, b, c)
            for (d, p, M, a, b, c) in jobs
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for balls, flags, err in pool.map(_point_task, tasks):
                if err is not None:
                    results.append((None, None, None, None, (), err))
                else:
                    v, dm, d2m, dpb = (_unwire_ball(t, digits) for t in balls)
                    results.append((v, dm, d2m, dpb, flags, None))
    else:
        ev = evaluator or (_h_eval if kind == "residual" else _r_eval)
        for d, p, M, a, b, c in jobs:
            try:
                (v, dm, d2m, dpb), flags = _record_point(
                    d, p, M, digits, a, b, c, ev
                )
                results.append((v, dm, d2m, dpb, tuple(flags), None))
            except Exception as exc:
                results.append((None, None, None, None, (), f"{type(exc).__name__}: {exc}"))
    return results


def _p_halfgap(offsets):
    if len(offsets) < 2:
        return mpf(0)
    gaps = [offsets[i + 1] - offsets[i] for i in range(len(offsets) - 1)]
    return max(gaps) / 2


# --------------------------------------------------------------------------
# pipelines


def run_residual_certificate(grid: GridSpec, parallel=1, h_eval=None) -> CertReport:
    """Certify h < 0 over the grid box.

    Per (d, p): h at every M; signed dh/dM checked positive at every M
    below the top (monotone increase pins the per-pair supremum at the
    last M); |dh/dp| at the last M feeds the p-direction correction
    max|dh/dp| * half the p-grid gap.
    """
    if any(d not in (3, 4) for d in grid.dims):
        raise DomainError(f"residual certificate covers d in {{3, 4}}, got {grid.dims}")
    digits = grid.prec.digits
    last_m = grid.m_values[-1]
    jobs = [
        (d, p, M, M != last_m, False, M == last_m)
        for d, p in grid.pairs()
        for M in grid.m_values
    ]
    raw = _run_points("residual", grid, jobs, parallel, h_eval)

    records = []
    ok = True
    with mp.workdps(digits):
        for (d, p, M, *_), (v, dm, d2m, dpb, flags, err) in zip(jobs, raw):
            flags = list(flags)
            if err is not None:
                flags.append(f"error:{err}")
                ok = False
                records.append(
                    CertRecord(Params.unchecked(d, p, M), None, flags=tuple(sorted(flags)))
                )
                continue
            dm_abs = None
            if dm is not None:
                if dm.lower() > 0:
                    flags.append("dM-positive")
                else:
                    flags.append("sign-check-failed")
                    ok = False
                dm_abs = dm.abs()
            records.append(
                CertRecord(
                    Params.unchecked(d, p, M),
                    v,
                    dM=dm_abs,
                    dp=dpb.abs() if dpb is not None else None,
                    flags=tuple(sorted(flags)),
                )
            )

        scored = [r for r in records if r.value is not None]
        worst = max(scored, key=lambda r: r.value.upper()) if scored else None
        dps_balls = [r.dp for r in records if r.dp is not None]
        if dps_balls and worst is not None:
            lmax = dps_balls[0]
            for b in dps_balls[1:]:
                lmax = lmax.max_with(b)
            p_corr = lmax * _p_halfgap(grid.p_offsets)
            final = worst.value + p_corr
        else:
            p_corr = Ball(0)
            final = worst.value if worst else None
        verdict = "pass" if ok and final is not None and final.upper() < 0 else "fail"
    return CertReport("residual", grid, records, worst, [], p_corr, final, verdict)


def run_rbound_certificate(grid: GridSpec, parallel=1, r_eval=None) -> CertReport:
    """Certify R < 1 over the grid box via Lipschitz interval closure."""
    if any(d not in (2, 3, 4) for d in grid.dims):
        raise DomainError(f"ratio certificate covers d in {{2, 3, 4}}, got {grid.dims}")
    digits = grid.prec.digits
    last_m = grid.m_values[-1]
    jobs = [
        # derivatives in M at every point except the last (no interval
        # starts there); dR/dp everywhere for the global L_p
        (d, p, M, M != last_m, M != last_m, True)
        for d, p in grid.pairs()
        for M in grid.m_values
    ]
    raw = _run_points("rbound", grid, jobs, parallel, r_eval)

    records = []
    ok = True
    with mp.workdps(digits):
        for (d, p, M, *_), (v, dm, d2m, dpb, flags, err) in zip(jobs, raw):
            flags = list(flags)
            if err is not None:
                flags.append(f"error:{err}")
                ok = False
                records.append(
                    CertRecord(Params.unchecked(d, p, M), None, flags=tuple(sorted(flags)))
                )
                continue
            records.append(
                CertRecord(
                    Params.unchecked(d, p, M),
                    v,
                    dM=dm.abs() if dm is not None else None,
                    d2M=d2m.abs() if d2m is not None else None,
                    dp=dpb.abs() if dpb is not None else None,
                    flags=tuple(sorted(flags)),
                )
            )

        by_pair = {}
        for rec in records:
            by_pair.setdefault((rec.params.d, str(rec.params.p)), []).append(rec)

        intervals = []
        candidates = []
        for (_, _), recs in sorted(by_pair.items(), key=lambda kv: (kv[0][0], mpf(kv[0][1]))):
            for i in range(len(recs) - 1):
                lo, hi = recs[i], recs[i + 1]
                if lo.value is None or lo.dM is None or lo.d2M is None:
                    ok = False
                    continue
                dm_width = hi.params.M - lo.params.M
                l_local = lo.dM + lo.d2M * dm_width
                bound = lo.value + l_local * (dm_width / 2)
                intervals.append(
                    (lo.params.d, lo.params.p, lo.params.M, hi.params.M, bound)
                )
                candidates.append(bound)
            if recs and recs[-1].value is not None:
                candidates.append(recs[-1].value)  # top-M point not in any interval

        scored = [r for r in records if r.value is not None]
        worst = max(scored, key=lambda r: r.value.upper()) if scored else None
        if candidates:
            worst_bound = candidates[0]
            for b in candidates[1:]:
                worst_bound = worst_bound.max_with(b)
        else:
            worst_bound = None

        dps_balls = [r.dp for r in records if r.dp is not None]
        if dps_balls and worst_bound is not None:
            lmax = dps_balls[0]
            for b in dps_balls[1:]:
                lmax = lmax.max_with(b)
            p_corr = lmax * _p_halfgap(grid.p_offsets)
            final = worst_bound + p_corr
        else:
            p_corr = Ball(0)
            final = worst_bound
        verdict = "pass" if ok and final is not None and final.upper() < 1 else "fail"
    return CertReport("rbound", grid, records, worst, intervals, p_corr, final, verdict)


def run_subinterval_monotonicity(grid: GridSpec, max_depth=8, h_eval=None):
    """Certify dh/dM > 0 on every whole grid interval, not just at nodes.

    Taylor closure per interval: delta_min - K_max * width > 0 with
    delta_min the smaller endpoint derivative lower bound and K_max the
    larger endpoint |second derivative| upper bound.  Failing intervals
    are bisected (new endpoint stencils at midpoints) up to max_depth.
    """
    if any(d not in (3, 4) for d in grid.dims):
        raise DomainError(f"residual certificate covers d in {{3, 4}}, got {grid.dims}")
    digits = grid.prec.digits
    ev = h_eval or _h_eval
    out = []
    with mp.workdps(digits):
        for d, p in grid.pairs():
            cache = {}

            def derivs(M):
                key = str(M)
                if key not in cache:
                    g = lambda m: ev(d, p, m, digits)
                    cache[key] = richardson_pair(g, M, digits, h0=_m_step(M))
                return cache[key]

            for i in range(len(grid.m_values) - 1):
                m_lo, m_hi = grid.m_values[i], grid.m_values[i + 1]
                top_d1_lo = min(derivs(m_lo)[0].lower(), derivs(m_hi)[0].lower())
                top_k = max(derivs(m_lo)[1].abs().upper(), derivs(m_hi)[1].abs().upper())
                stack = [(m_lo, m_hi, 0)]
                passed = True
                depth_used = 0
                finest = m_hi - m_lo
                while stack:
                    a, b, depth = stack.pop()
                    depth_used = max(depth_used, depth)
                    finest = min(finest, b - a)
                    d1a, d2a = derivs(a)
                    d1b, d2b = derivs(b)
                    dmin = min(d1a.lower(), d1b.lower())
                    kmax = max(d2a.abs().upper(), d2b.abs().upper())
                    if dmin - kmax * (b - a) > 0:
                        continue
                    if depth >= max_depth:
                        passed = False
                        continue
                    mid = (a + b) / 2
                    stack.append((a, mid, depth + 1))
                    stack.append((mid, b, depth + 1))
                out.append(
                    IntervalCert(
                        d, p, m_lo, m_hi, top_d1_lo, top_k, passed, depth_used, finest
                    )
                )
    return out


# --------------------------------------------------------------------------
# report emission


def _dec(x, digits):
    with mp.workdps(digits):
        return mp.nstr(mpf(x), digits)


def _ball_obj(b, digits):
    if b is None:
        return None
    return {"mid": _dec(b.mid, digits), "rad": _dec(b.rad, digits)}


def _point_obj(params, digits):
    return {"d": params.d, "p": _dec(params.p, digits), "M": _dec(params.M, digits)}


def report_to_obj(report: CertReport) -> dict:
    digits = report.grid.prec.digits
    return {
        "certificate": report.kind,
        "grid": {
            "dims": list(report.grid.dims),
            "p_offsets": [_dec(o, digits) for o in report.grid.p_offsets],
            "m_values": [_dec(m, digits) for m in report.grid.m_values],
            "digits": digits,
        },
        "records": [
            {
                **_point_obj(r.params, digits),
                "value": _ball_obj(r.value, digits),
                "dM": _ball_obj(r.dM, digits),
                "d2M": _ball_obj(r.d2M, digits),
                "dp": _ball_obj(r.dp, digits),
                "flags": list(r.flags),
            }
            for r in report.records
        ],
        "worst_point": _point_obj(report.worst_point.params, digits)
        if report.worst_point
        else None,
        "interval_bounds": [
            {
                "d": d,
                "p": _dec(p, digits),
                "m_lo": _dec(lo, digits),
                "m_hi": _dec(hi, digits),
                "bound": _ball_obj(b, digits),
            }
            for (d, p, lo, hi, b) in report.interval_bounds
        ],
        "p_correction": _ball_obj(report.p_correction, digits),
        "final_bound": _ball_obj(report.final_bound, digits),
        "verdict": report.verdict,
        "methodology_note": report.methodology_note,
    }


def _emit_csv(report: CertReport) -> str:
    digits = report.grid.prec.digits
    cols = [
        "d", "p", "M",
        "value_mid", "value_rad", "dM_mid", "dM_rad",
        "d2M_mid", "d2M_rad", "dp_mid", "dp_rad", "flags",
    ]
    lines = [",".join(cols)]
    for r in report.records:
        cells = [str(r.params.d), _dec(r.params.p, digits), _dec(r.params.M, digits)]
        for b in (r.value, r.dM, r.d2M, r.dp):
            if b is None:
                cells += ["", ""]
            else:
                cells += [_dec(b.mid, digits), _dec(b.rad, digits)]
        cells.append(";".join(r.flags))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _emit_table(report: CertReport) -> str:
    digits = report.grid.prec.digits
    rows = [["d", "p", "M", "value", "flags"]]
    for r in report.records:
        val = "-" if r.value is None else f"{mp.nstr(r.value.mid, 8)} +- {mp.nstr(r.value.rad, 3)}"
        rows.append(
            [str(r.params.d), mp.nstr(r.params.p, 6), mp.nstr(r.params.M, 6), val, ";".join(r.flags)]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.append("")
    if report.worst_point is not None:
        wp = report.worst_point.params
        lines.append(
            f"worst point: d={wp.d} p={mp.nstr(wp.p, 6)} M={mp.nstr(wp.M, 6)} "
            f"value={mp.nstr(report.worst_point.value.mid, 10)}"
        )
    if report.p_correction is not None:
        lines.append(f"p-correction: {_dec(report.p_correction.upper(), digits)}")
    if report.final_bound is not None:
        lines.append(f"final bound (upper): {_dec(report.final_bound.upper(), digits)}")
    lines.append(f"verdict: {report.verdict}")
    lines.append(f"note: {report.methodology_note}")
    return "\n".join(lines) + "\n"


def emit_report(report: CertReport, format="json") -> str:
    """Deterministic serialisation; reals as decimal strings."""
    if format == "json":
        return json.dumps(report_to_obj(report), indent=2) + "\n"
    if format == "csv":
        return _emit_csv(report)
    if format in ("table", "text-table"):
        return _emit_table(report)
    raise DomainError(f"unknown report format {format!r}")
