import math

import pytest

from eitmem.params import CouplingSchedule, PhysicalParams, PulseSpec, hz_to_gamma

REF_D = 651.37
REF_OMEGA_C2 = 0.22


def medium(d=REF_D, gamma0=None, gammac=None, omega_c2=REF_OMEGA_C2, L=12.0):
    g0 = hz_to_gamma(250.0) if gamma0 is None else gamma0
    gc = hz_to_gamma(100.0) if gammac is None else gammac
    return PhysicalParams.from_optical_depth(d, n=1e12, A=0.01, L=L, gamma0=g0, gammac=gc,
                                             omega_c=math.sqrt(omega_c2))


def reference_pulse():
    return PulseSpec(duration_T=50.0, carrier_amp=0.0, mod_freq=0.005, mod_depth_plus=100.0,
                     mod_depth_minus=-100.0, t_start=10.0)


@pytest.fixture
def reference_params():
    return medium()


@pytest.fixture
def reference_schedule(reference_params):
    return CouplingSchedule(omega_on=reference_params.omega_c, t_off=70.0, t_on=120.0)


# one PASS/FAIL line per acceptance criterion at the end of the run
_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    n = int(name.split("_")[2])
    if hasattr(report, "wasxfail"):
        _CRITERIA[n] = ("FAIL", f"expected failure: {report.wasxfail}")
    elif report.failed:
        _CRITERIA[n] = ("FAIL", f"{report.when} failed")
    elif report.skipped:
        _CRITERIA.setdefault(n, ("SKIP", "not run"))
    elif report.when == "call":
        _CRITERIA[n] = ("PASS", "")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, why = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}" + (f"  ({why})" if why else ""))
