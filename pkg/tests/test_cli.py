"""In-process tests of the command-line frontend: exit codes, output
formats, determinism, and environment handling."""

import json

import pytest
from mpmath import mpf

from scorecert import cli
from scorecert.cli import main
from scorecert.quadrature import ConvergenceError


def _parse_ball(line):
    mid, rad = line.strip().split(" +- ")
    return mpf(mid), mpf(rad)


# ---------------------------------------------------------------- eval


def test_eval_r_prints_ball(capsys):
    code = main(["eval", "R", "--d", "4", "--p", "4.95", "--M", "5.75",
                 "--digits", "20"])
    assert code == 0
    mid, rad = _parse_ball(capsys.readouterr().out)
    assert abs(mid - mpf("0.7031636457")) < mpf("1e-9")
    assert rad < mpf("1e-12")


def test_eval_radius_shrinks_with_digits(capsys):
    main(["eval", "R", "--d", "3", "--p", "3.5", "--M", "2", "--digits", "20"])
    _, rad20 = _parse_ball(capsys.readouterr().out)
    main(["eval", "R", "--d", "3", "--p", "3.5", "--M", "2", "--digits", "40"])
    _, rad40 = _parse_ball(capsys.readouterr().out)
    assert rad40 < rad20
    assert rad40 < mpf("1e-30")


def test_eval_ir_d2_ratio(capsys):
    code = main(["eval", "ir-d2-ratio", "--p", "2.95", "--M", "1.5",
                 "--digits", "30"])
    assert code == 0
    mid, _ = _parse_ball(capsys.readouterr().out)
    assert abs(mid - mpf("0.755274415609673")) < mpf("1e-14")


def test_eval_missing_param_is_domain_error(capsys):
    assert main(["eval", "R", "--d", "4", "--p", "4.95"]) == 2
    assert "domain error" in capsys.readouterr().err


def test_eval_out_of_range_is_domain_error(capsys):
    code = main(["eval", "R", "--d", "2", "--p", "1.5", "--M", "3",
                 "--digits", "20"])
    assert code == 2
    assert "domain error" in capsys.readouterr().err


def test_eval_low_digits_rejected():
    assert main(["eval", "R", "--d", "4", "--p", "4.95", "--M", "5.75",
                 "--digits", "10"]) == 2


def test_eval_writes_out_file(tmp_path, capsys):
    out = tmp_path / "r.txt"
    code = main(["eval", "R", "--d", "4", "--p", "4.95", "--M", "5.75",
                 "--digits", "20", "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    mid, _ = _parse_ball(out.read_text())
    assert abs(mid - mpf("0.7031636457")) < mpf("1e-9")


# ---------------------------------------------------------------- usage


def test_unknown_flag_exits_64():
    with pytest.raises(SystemExit) as exc:
        main(["eval", "R", "--bogus", "1"])
    assert exc.value.code == 64


def test_unknown_subcommand_exits_64():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 64


# ---------------------------------------------------------------- env


def test_env_digits_honored(capsys, monkeypatch):
    monkeypatch.setenv(cli.DIGITS_ENV, "20")
    code = main(["eval", "R", "--d", "3", "--p", "3.5", "--M", "2"])
    assert code == 0
    _, rad = _parse_ball(capsys.readouterr().out)
    # a 50-digit run (the unset default) would carry rad ~ 1e-45
    assert mpf("1e-30") < rad < mpf("1e-12")


def test_env_digits_invalid(capsys, monkeypatch):
    monkeypatch.setenv(cli.DIGITS_ENV, "plenty")
    assert main(["eval", "R", "--d", "3", "--p", "3.5", "--M", "2"]) == 2
    assert cli.DIGITS_ENV in capsys.readouterr().err


# ---------------------------------------------------------------- cert


TINY_CERT = ["cert", "rbound", "--dims", "4", "--offsets", "0.95",
             "--m-values", "5.75,6.5,8", "--digits", "20"]


def test_cert_tiny_rbound_passes_and_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(TINY_CERT + ["--out", str(a)]) == 0
    assert main(TINY_CERT + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    obj = json.loads(a.read_text())
    assert obj["verdict"] == "pass"
    assert obj["certificate"] == "rbound"
    assert float(obj["final_bound"]["mid"]) < 1


def test_cert_wide_interval_fails_exit_1(capsys):
    code = main(["cert", "rbound", "--dims", "4", "--offsets", "0.95",
                 "--m-values", "2,20", "--digits", "20"])
    assert code == 1
    obj = json.loads(capsys.readouterr().out)
    assert obj["verdict"] == "fail"
    assert float(obj["interval_bounds"][0]["bound"]["mid"]) > 1


def test_cert_table_format(capsys):
    code = main(TINY_CERT + ["--format", "table"])
    assert code == 0
    out = capsys.readouterr().out
    assert "verdict" in out and "pass" in out


# ---------------------------------------------------------------- scan


def test_scan_unimodal_json(capsys):
    code = main(["scan", "unimodal", "--d", "4", "--p", "4.95",
                 "--m-grid", "2,3,5,6.5,8", "--digits", "20"])
    assert code == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["strictly_decreasing"] is True
    # slope over (5, 6.5) straddles the peak, so the bracket spans to 8
    assert [float(m) for m in obj["peak_bracket"]] == [5.0, 8.0]
    slopes = [float(s) for s in obj["dlogR_dM"]]
    assert slopes == sorted(slopes, reverse=True)


def test_scan_largem_json(capsys):
    code = main(["scan", "largem", "--d", "3", "--p", "3.5",
                 "--m-values", "20", "--digits", "30"])
    assert code == 0
    obj = json.loads(capsys.readouterr().out)
    (row,) = obj["rows"]
    assert abs(mpf(row["h"]) - mpf("-0.00998418781463")) < mpf("1e-13")
    assert abs(mpf(row["asymptote"]) + mpf("0.0025")) < mpf("1e-15")
    assert abs(mpf(row["m3_remainder"]) - mpf("59.8735025")) < mpf("1e-6")
    assert "note" in obj


def test_scan_rpeak_json(capsys):
    code = main(["scan", "rpeak", "--d", "5", "--p", "5.1",
                 "--tolerance", "0.1", "--digits", "20"])
    assert code == 0
    obj = json.loads(capsys.readouterr().out)
    assert abs(float(obj["R_peak"]) - 0.7296) < 2e-3
    assert obj["bracket_valid"] is True
    assert obj["p"] == "5.1"  # raw echo, no double noise


def test_scan_mcut_requires_p():
    assert main(["scan", "mcut", "--d", "3"]) == 2


# ---------------------------------------------------------------- tables


def test_tables_rbound_worst(tmp_path):
    out = tmp_path / "tbl.txt"
    code = main(["tables", "rbound-worst", "--digits", "20", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[0].split() == ["d", "p", "M", "R"]
    assert "0.703164" in text
    twin = json.loads((tmp_path / "tbl.txt.json").read_text())
    assert twin["table"] == "rbound-worst"
    assert twin["rows"][2]["R"].startswith("0.7031636456")


# ---------------------------------------------------------------- numerics


def test_numeric_failure_maps_to_exit_3(capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise ConvergenceError("synthetic stall")

    monkeypatch.setattr(cli.integrals, "ratio_r", boom)
    code = main(["eval", "R", "--d", "4", "--p", "4.95", "--M", "5.75",
                 "--digits", "20"])
    assert code == 3
    assert "numeric failure" in capsys.readouterr().err
