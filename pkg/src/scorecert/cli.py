"""Command-line frontend.

One binary, four subcommands:

* ``eval``   -- single-point quantities, printed as "mid +- rad"
* ``cert``   -- grid certificates, emitted as deterministic reports
* ``scan``   -- boundary explorations (threshold scans, peak searches)
* ``tables`` -- canned reproduction tables (text plus a JSON twin)

Exit codes: 0 success / certificate pass, 1 certificate fail, 2 domain
error, 3 numeric failure, 64 usage error.  The toolkit is seedless by
construction: nothing here consumes randomness, so identical
invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

from mpmath import mp, mpf

from . import boundary, certify, integrals
from .kernel import DomainError, Params, Precision
from .quadrature import BallDivisionError, ConvergenceError, IntegrandError
from .integrals import CertificateError

EXIT_PASS = 0
EXIT_CERT_FAIL = 1
EXIT_DOMAIN = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64

DIGITS_ENV = "SCORECERT_DIGITS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    digits: int
    output_path: Optional[str]
    format: str
    parallelism: int
    args: argparse.Namespace

    def __post_init__(self):
        if self.digits < 15:
            raise DomainError(f"digits must be >= 15, got {self.digits}")
        if self.format not in ("json", "csv", "table"):
            raise DomainError(f"format must be json, csv or table, got {self.format}")


def _default_digits():
    raw = os.environ.get(DIGITS_ENV, "50")
    try:
        return int(raw)
    except ValueError:
        raise DomainError(f"{DIGITS_ENV} must be an integer, got {raw!r}")


def _dec(x, digits):
    with mp.workdps(digits):
        return mp.nstr(mpf(x), digits)


def _ball_str(b, digits):
    return f"{_dec(b.mid, digits)} +- {_dec(b.rad, digits)}"


def _write(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_list(raw):
    return [tok.strip() for tok in str(raw).split(",") if tok.strip()]


# --------------------------------------------------------------------------
# eval


def cmd_eval(cfg: RunConfig) -> int:
    a = cfg.args
    digits = cfg.digits
    q = a.quantity
    if q == "ir-d2-ratio":
        if a.p is None or a.M is None:
            raise DomainError("ir-d2-ratio needs --p and --M")
        with mp.workdps(digits):
            pv, mv = mpf(a.p), mpf(a.M)
        ball = integrals.ir_d2_ratio(pv, mv, digits)
    else:
        if a.d is None or a.p is None or a.M is None:
            raise DomainError(f"{q} needs --d, --p and --M")
        with mp.workdps(digits):
            params = Params(int(a.d), mpf(a.p), mpf(a.M))
        fn = {
            "R": integrals.ratio_r,
            "IL": integrals.i_l,
            "IR": integrals.i_r,
            "h": integrals.h_dlog2,
            "J-residual": integrals.gain_loss_residual,
        }[q]
        ball = fn(params, digits)
    out = _ball_str(ball, digits) + "\n"
    _write(out, cfg.output_path)
    return EXIT_PASS


# --------------------------------------------------------------------------
# cert


def _grid_from_args(kind, a, digits):
    default = (
        certify.GridSpec.residual_default
        if kind == "residual"
        else certify.GridSpec.rbound_default
    )(Precision(digits))
    dims = tuple(int(t) for t in _csv_list(a.dims)) if a.dims else default.dims
    offsets = tuple(_csv_list(a.offsets)) if a.offsets else default.p_offsets
    m_values = tuple(_csv_list(a.m_values)) if a.m_values else default.m_values
    return certify.GridSpec(dims, offsets, m_values, Precision(digits))


def cmd_cert(cfg: RunConfig) -> int:
    a = cfg.args
    grid = _grid_from_args(a.kind, a, cfg.digits)
    runner = (
        certify.run_residual_certificate
        if a.kind == "residual"
        else certify.run_rbound_certificate
    )
    report = runner(grid, parallel=cfg.parallelism)
    _write(certify.emit_report(report, cfg.format), cfg.output_path)
    return EXIT_PASS if report.verdict == "pass" else EXIT_CERT_FAIL


# --------------------------------------------------------------------------
# scan


def _num(x, digits):
    return None if x is None else _dec(x, digits)


def _peak_obj_bare(pk, digits):
    return {
        "R_peak": _dec(pk.r_peak, digits),
        "M_peak": _dec(pk.m_peak, digits),
        "tol": _dec(pk.tol, digits),
        "bracket_valid": pk.bracket_valid,
    }


def _peak_obj(p, pk, digits):
    return {"p": _dec(p, digits), **_peak_obj_bare(pk, digits)}


def cmd_scan(cfg: RunConfig) -> int:
    a = cfg.args
    digits = cfg.digits
    which = a.which
    if which != "pcrit" and a.p is None:
        raise DomainError(f"scan {which} needs --p")
    if which == "mcut":
        res = boundary.scan_mcut(int(a.d), a.p, m_limit=a.m_limit, prec=digits)
        obj = {
            "scan": "mcut",
            "d": int(a.d),
            "p": a.p,
            "m_limit": a.m_limit,
            "m_cut": res.m_cut if res.exceeded else _dec(res.m_cut, digits),
            "failure_y": _num(res.failure_y, digits),
            "margin_min": _dec(res.margin_min, digits),
        }
    elif which == "pcrit":
        res = boundary.locate_pcrit(int(a.d), a.resolution, prec=digits)
        obj = {
            "scan": "pcrit",
            "d": int(a.d),
            "resolution": a.resolution,
            "verdict": res.verdict,
            "lower": _num(res.lower, digits),
            "upper": _num(res.upper, digits),
            "widened_lower": _num(res.widened_lower, digits),
            "widened_upper": _num(res.widened_upper, digits),
            "peak_table": [_peak_obj(p, pk, digits) for (p, pk) in res.peak_table],
        }
    elif which == "rpeak":
        lo, hi = (_csv_list(a.m_range) + ["30"])[:2] if a.m_range else ("1.5", "30")
        pk = boundary.r_peak(int(a.d), a.p, (lo, hi), a.tolerance, prec=digits)
        obj = {"scan": "rpeak", "d": int(a.d), "p": a.p, **_peak_obj_bare(pk, digits)}
    elif which == "largem":
        ms = _csv_list(a.m_values or "20,50,100,200")
        rows = boundary.largeM_check(int(a.d), a.p, ms, prec=digits)
        obj = {
            "scan": "largem",
            "d": int(a.d),
            "p": a.p,
            "rows": [
                {
                    "M": _dec(m, digits),
                    "h": _dec(h.mid, digits),
                    "asymptote": _dec(asym, digits),
                    "m3_remainder": _dec(rem, digits),
                }
                for (m, h, asym, rem) in rows
            ],
            "note": (
                "At moderate M the measured curvature exceeds the leading "
                "-(d-2)/M^2 term by an order of magnitude; the M^3-scaled "
                "remainder column makes that gap explicit."
            ),
        }
    else:  # unimodal
        ms = _csv_list(a.m_grid or "1.5,2,3,5,5.75,6.5,8,10,15")
        diag = boundary.unimodality_diag(int(a.d), mpf(a.p), ms, prec=digits)
        obj = {
            "scan": "unimodal",
            "d": int(a.d),
            "p": _dec(a.p, digits),
            "m_grid": [_dec(m, digits) for m in diag.m_grid],
            "dlogR_dM": [_dec(s, digits) for s in diag.slopes],
            "strictly_decreasing": diag.strictly_decreasing,
            "peak_bracket": [_dec(m, digits) for m in diag.peak_bracket]
            if diag.peak_bracket
            else None,
        }
    _write(json.dumps(obj, indent=2) + "\n", cfg.output_path)
    return EXIT_PASS


# --------------------------------------------------------------------------
# tables


def _table_h_battery(digits):
    pairs = [(4, "4.9"), (3, "3.5"), (2, "2.5")]
    m_rows = ["1.1", "2.0", "5.0", "10", "20"]
    rows = []
    for ms in m_rows:
        cells = []
        for d, ps in pairs:
            with mp.workdps(digits):
                params = Params(d, mpf(ps), mpf(ms))
            h = integrals.h_dlog2(params, digits)
            cells.append({"d": d, "p": ps, "h": _dec(h.mid, digits)})
        rows.append({"M": ms, "cells": cells})
    header = ["M"] + [f"h(d={d},p={p})" for d, p in pairs]
    text_rows = [header]
    for row in rows:
        text_rows.append(
            [row["M"]] + [mp.nstr(mpf(c["h"]), 6) for c in row["cells"]]
        )
    return {"table": "h-battery", "digits": digits, "rows": rows}, text_rows


def _table_rbound_worst(digits):
    rows = []
    text_rows = [["d", "p", "M", "R"]]
    for d in (2, 3, 4):
        ps = f"{d}.95"
        with mp.workdps(digits):
            params = Params(d, mpf(ps), mpf("5.75"))
        ball = integrals.ratio_r(params, digits)
        rows.append({"d": d, "p": ps, "M": "5.75", "R": _dec(ball.mid, digits)})
        text_rows.append([str(d), ps, "5.75", mp.nstr(ball.mid, 6)])
    return {"table": "rbound-worst", "digits": digits, "rows": rows}, text_rows


def _table_mcut(d, offsets, digits):
    rows = []
    text_rows = [["p", "m_cut", "failure_y"]]
    for off in offsets:
        ps = str(d) + off[1:]  # offsets look like "0.1"
        res = boundary.scan_mcut(d, ps, prec=digits)
        m_cut = res.m_cut if res.exceeded else _dec(res.m_cut, digits)
        fy = _num(res.failure_y, digits)
        rows.append({"p": ps, "m_cut": m_cut, "failure_y": fy})
        text_rows.append(
            [
                ps,
                m_cut if res.exceeded else mp.nstr(res.m_cut, 5),
                "-" if fy is None else mp.nstr(res.failure_y, 5),
            ]
        )
    return {"table": f"mcut-d{d}", "digits": digits, "rows": rows}, text_rows


def _table_d5_peaks(digits):
    rows = []
    text_rows = [["p", "R_peak", "M_peak"]]
    for k in range(1, 6):
        ps = f"5.{k}"
        pk = boundary.r_peak(5, ps, prec=digits)
        rows.append({"p": ps, **_peak_obj_bare(pk, digits)})
        text_rows.append([ps, mp.nstr(pk.r_peak, 6), mp.nstr(pk.m_peak, 4)])
    return {"table": "d5-peaks", "digits": digits, "rows": rows}, text_rows


def _render_text(text_rows):
    widths = [max(len(str(r[i])) for r in text_rows) for i in range(len(text_rows[0]))]
    return (
        "\n".join(
            "  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip()
            for row in text_rows
        )
        + "\n"
    )


def cmd_tables(cfg: RunConfig) -> int:
    a = cfg.args
    digits = cfg.digits
    builders = {
        "h-battery": lambda: _table_h_battery(digits),
        "rbound-worst": lambda: _table_rbound_worst(digits),
        "mcut-d3": lambda: _table_mcut(
            3, ("0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8"), digits
        ),
        "mcut-d4": lambda: _table_mcut(
            4,
            ("0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "0.99"),
            digits,
        ),
        "d5-peaks": lambda: _table_d5_peaks(digits),
    }
    obj, text_rows = builders[a.which]()
    text = _render_text(text_rows)
    twin = json.dumps(obj, indent=2) + "\n"
    if cfg.output_path:
        _write(text, cfg.output_path)
        _write(twin, cfg.output_path + ".json")
    else:
        sys.stdout.write(text)
        sys.stdout.write(twin)
    return EXIT_PASS


# --------------------------------------------------------------------------
# wiring


def _add_common(sp, with_format=True):
    sp.add_argument("--digits", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--parallel", type=int, default=0, help="0 = auto (cpu count)")
    if with_format:
        sp.add_argument("--format", default="json", choices=["json", "csv", "table"])


def build_parser() -> _Parser:
    parser = _Parser(prog="scorecert", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("eval", help="evaluate a single-point quantity")
    ev.add_argument(
        "quantity", choices=["R", "IL", "IR", "h", "J-residual", "ir-d2-ratio"]
    )
    ev.add_argument("--d", type=int)
    ev.add_argument("--p")
    ev.add_argument("--M")
    _add_common(ev, with_format=False)

    ct = sub.add_parser("cert", help="run a grid certificate")
    ct.add_argument("kind", choices=["residual", "rbound"])
    ct.add_argument("--dims")
    ct.add_argument("--offsets")
    ct.add_argument("--m-values", dest="m_values")
    _add_common(ct)

    sc = sub.add_parser("scan", help="boundary scans and searches")
    sc.add_argument("which", choices=["mcut", "pcrit", "rpeak", "largem", "unimodal"])
    sc.add_argument("--d", type=int, required=True)
    sc.add_argument("--p")
    sc.add_argument("--m-limit", dest="m_limit", default="20")
    sc.add_argument("--resolution", default="0.001")
    sc.add_argument("--tolerance", default="0.05")
    sc.add_argument("--m-range", dest="m_range")
    sc.add_argument("--m-values", dest="m_values")
    sc.add_argument("--m-grid", dest="m_grid")
    _add_common(sc, with_format=False)

    tb = sub.add_parser("tables", help="regenerate reference tables")
    tb.add_argument(
        "which",
        choices=["h-battery", "rbound-worst", "mcut-d3", "mcut-d4", "d5-peaks"],
    )
    _add_common(tb, with_format=False)
    return parser


_HANDLERS = {
    "eval": cmd_eval,
    "cert": cmd_cert,
    "scan": cmd_scan,
    "tables": cmd_tables,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        digits = args.digits if args.digits is not None else _default_digits()
        cfg = RunConfig(
            command=args.command,
            digits=digits,
            output_path=args.out,
            format=getattr(args, "format", "json"),
            parallelism=args.parallel,
            args=args,
        )
        code = _HANDLERS[args.command](cfg)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (
        ConvergenceError,
        IntegrandError,
        BallDivisionError,
        CertificateError,
        ZeroDivisionError,
    ) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # malformed numeric strings from --p/--M/grid lists
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"domain error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return code


if __name__ == "__main__":
    sys.exit(main())
