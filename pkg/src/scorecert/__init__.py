"""Certified numerics for power-rule incentive ratios.

The package is organized bottom-up:

* :mod:`scorecert.kernel`     -- closed-form scalar building blocks
* :mod:`scorecert.quadrature` -- endpoint-aware integration, balls,
  Richardson differentiation
* :mod:`scorecert.integrals`  -- the moment integrals, the ratio R and
  the curvature statistic h
* :mod:`scorecert.certify`    -- grid certificates with machine-checked
  verdicts
* :mod:`scorecert.boundary`   -- threshold scans and peak searches
* :mod:`scorecert.cli`        -- the ``scorecert`` command
"""

from .kernel import DomainError, Params, Precision
from .quadrature import (
    Ball,
    BallDivisionError,
    ConvergenceError,
    IntegrandError,
    QuadResult,
    SingularityHints,
    ball_from_quad,
    integrate,
    integrate_offsets,
    richardson_deriv,
    richardson_pair,
)
from .integrals import (
    AbcSet,
    CertificateError,
    MomentSet,
    abc_moments,
    gain_loss_residual,
    h_dlog2,
    i_alpha,
    i_l,
    i_r,
    ir_d2_ratio,
    moment_set,
    ratio_r,
)
from .certify import (
    CertRecord,
    CertReport,
    GridSpec,
    IntervalCert,
    emit_report,
    report_to_obj,
    run_rbound_certificate,
    run_residual_certificate,
    run_subinterval_monotonicity,
)
from .boundary import (
    PcritResult,
    PeakResult,
    ScanResult,
    UnimodalDiag,
    largeM_check,
    locate_pcrit,
    nsd_margin,
    r_peak,
    scan_mcut,
    unimodality_diag,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "Params",
    "Precision",
    "Ball",
    "BallDivisionError",
    "ConvergenceError",
    "IntegrandError",
    "QuadResult",
    "SingularityHints",
    "ball_from_quad",
    "integrate",
    "integrate_offsets",
    "richardson_deriv",
    "richardson_pair",
    "AbcSet",
    "CertificateError",
    "MomentSet",
    "abc_moments",
    "gain_loss_residual",
    "h_dlog2",
    "i_alpha",
    "i_l",
    "i_r",
    "ir_d2_ratio",
    "moment_set",
    "ratio_r",
    "CertRecord",
    "CertReport",
    "GridSpec",
    "IntervalCert",
    "emit_report",
    "report_to_obj",
    "run_rbound_certificate",
    "run_residual_certificate",
    "run_subinterval_monotonicity",
    "PcritResult",
    "PeakResult",
    "ScanResult",
    "UnimodalDiag",
    "largeM_check",
    "locate_pcrit",
    "nsd_margin",
    "r_peak",
    "scan_mcut",
    "unimodality_diag",
    "__version__",
]
