"""Shared fixtures.

The three default-grid certificates are expensive (tens of minutes on one
core), so they are computed once per session and shared between the
certificate unit tests and the acceptance battery.
"""

import pytest

from scorecert import (
    GridSpec,
    Precision,
    run_rbound_certificate,
    run_residual_certificate,
    run_subinterval_monotonicity,
)


@pytest.fixture(scope="session")
def rbound_report():
    return run_rbound_certificate(GridSpec.rbound_default(Precision(50)))


@pytest.fixture(scope="session")
def residual_report():
    return run_residual_certificate(GridSpec.residual_default(Precision(50)))


@pytest.fixture(scope="session")
def subinterval_certs():
    return run_subinterval_monotonicity(GridSpec.residual_default(Precision(50)))
