"""Unit tests for threshold scans, peak searches and diagnostics."""

import pytest
from mpmath import mp, mpf

from scorecert import DomainError
from scorecert.boundary import (
    EXCEEDS_SCAN_LIMIT,
    largeM_check,
    locate_pcrit,
    nsd_margin,
    r_peak,
    scan_mcut,
    unimodality_diag,
)


# ---------------------------------------------------------------- margins


def test_nsd_margin_spot_values():
    with mp.workdps(30):
        # positive margin: curvature condition holds at this point
        m = nsd_margin("3.5", 7, 3, "3.1", 30)
        assert abs(m - mpf("0.096")) < mpf("2e-3")
        assert m > 0


def test_nsd_margin_domain():
    with pytest.raises(DomainError):
        nsd_margin(1, 5, 3, "3.1", 30)
    with pytest.raises(DomainError):
        nsd_margin(6, 5, 3, "3.1", 30)


# ---------------------------------------------------------------- mcut scans


def test_scan_mcut_d3_low_p_fails_inside_the_window():
    res = scan_mcut(3, "3.1", prec=30)
    assert not res.exceeded
    assert abs(res.m_cut - mpf("9.65")) < mpf("1e-9")
    assert abs(res.failure_y - mpf("6.5949")) < mpf("1e-3")
    assert abs(res.margin_min - mpf("-0.000246738")) < mpf("1e-7")


def test_scan_mcut_d3_high_p_exceeds_limit():
    res = scan_mcut(3, "3.8", prec=30)
    assert res.exceeded
    assert res.m_cut == EXCEEDS_SCAN_LIMIT
    assert res.failure_y is None
    assert abs(res.margin_min - mpf("0.000211534")) < mpf("1e-7")
    assert res.margin_min > 0


def test_scan_mcut_d4_exceeds_limit():
    res = scan_mcut(4, "4.5", prec=30)
    assert res.exceeded
    assert res.margin_min > 0


def test_scan_mcut_threshold_monotone_in_p_for_d3():
    a = scan_mcut(3, "3.1", prec=30)
    b = scan_mcut(3, "3.2", prec=30)
    assert a.m_cut < b.m_cut


def test_scan_mcut_respects_m_limit():
    res = scan_mcut(3, "3.1", m_limit=5, prec=30)
    assert res.exceeded  # first failure is near 9.65, beyond this limit


def test_scan_mcut_domain():
    with pytest.raises(DomainError):
        scan_mcut(1, "1.5", prec=30)
    with pytest.raises(DomainError):
        scan_mcut(3, "2.5", prec=30)  # p outside (d, d+1)


# ---------------------------------------------------------------- peak search


def test_r_peak_pinned_d5_value():
    pk = r_peak(5, "5.1", prec=30)
    assert abs(pk.r_peak - mpf("0.729633")) < mpf("1e-5")
    assert abs(pk.m_peak - mpf("6.084")) < mpf("0.06")
    assert pk.bracket_valid
    assert pk.r_peak < 1


def test_r_peak_tolerance_controls_bracket():
    coarse = r_peak(5, "5.1", tol="0.5", prec=30)
    fine = r_peak(5, "5.1", tol="0.05", prec=30)
    assert abs(coarse.m_peak - fine.m_peak) < mpf("0.6")
    assert fine.r_peak >= coarse.r_peak - mpf("1e-6")


def test_r_peak_detects_peak_outside_range():
    # peak sits near M = 6; a range capped at 3 cannot bracket it
    pk = r_peak(5, "5.1", m_range=(mpf("1.5"), mpf(3)), prec=30)
    assert not pk.bracket_valid or pk.m_peak > mpf("2.5")


def test_r_peak_domain():
    with pytest.raises(DomainError):
        r_peak(5, "5.1", tol=0, prec=30)
    with pytest.raises(DomainError):
        r_peak(5, "5.1", m_range=(3, 2), prec=30)


# ---------------------------------------------------------------- p threshold


def test_locate_pcrit_d5_bracket():
    res = locate_pcrit(5, prec=30)
    assert res.verdict == "bracketed"
    with mp.workdps(30):
        assert abs(res.lower - mpf("5.57212109375")) < mpf("1e-9")
        assert abs(res.upper - mpf("5.573095703125")) < mpf("1e-9")
        assert res.widened_lower < res.lower < res.upper < res.widened_upper
        # bisection invariant: subcritical below, supercritical above
        assert r_peak(5, res.lower, prec=30).r_peak < 1
        assert r_peak(5, res.upper, prec=30).r_peak >= 1
        assert len(res.peak_table) >= 5


def test_locate_pcrit_d6_is_supercritical_throughout():
    res = locate_pcrit(6, prec=30)
    assert res.verdict == "supercritical-throughout"
    assert res.lower is None and res.upper is None
    ((p_probe, pk),) = res.peak_table
    assert pk.r_peak > 1


def test_locate_pcrit_domain():
    with pytest.raises(DomainError):
        locate_pcrit(4, prec=30)
    with pytest.raises(DomainError):
        locate_pcrit(5, resolution=0, prec=30)


# ---------------------------------------------------------------- diagnostics


def test_largem_check_rows():
    rows = largeM_check(3, "3.5", (20, 50), prec=50)
    (m1, h1, asym1, rem1), (m2, h2, asym2, rem2) = rows
    assert h1.upper() < 0 and h2.upper() < 0
    assert abs(h1.mid - mpf("-0.00998419")) < mpf("1e-7")
    assert abs(asym1 - mpf("-0.0025")) < mpf("1e-15")
    assert abs(rem1 - mpf("59.8735")) < mpf("1e-3")
    assert rem2 > rem1  # the printed leading term does not dominate here


def test_largem_check_domain():
    with pytest.raises(DomainError):
        largeM_check(2, "2.5", (20,), prec=30)
    with pytest.raises(DomainError):
        largeM_check(3, "3.5", (10,), prec=30)


def test_unimodality_diag():
    diag = unimodality_diag(4, "4.95", (2, 3, 5, "5.75", "6.5", 8, 10), prec=30)
    assert diag.strictly_decreasing
    lo, hi = diag.peak_bracket
    assert lo == 5 and hi == mpf("6.5")
    assert diag.slopes[0] > 0 > diag.slopes[-1]


def test_unimodality_diag_validation():
    with pytest.raises(DomainError):
        unimodality_diag(4, "4.95", (2, 3), prec=30)  # needs >= 3 points
    with pytest.raises(DomainError):
        unimodality_diag(4, "4.95", (3, 2, 5), prec=30)  # must increase
