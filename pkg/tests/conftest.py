import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import pytest

CRITERIA = {
    1: "calibration sweep, 11 rows within tolerance",
    2: "component suite, LDV/accelerometer/cross-channel bands",
    3: "40 Hz air filter, LDV estimate in [39.85, 40.15] Hz",
    4: "displacement round trip, 1% noiseless / 5% default noise",
    5: "noise-model fidelity: RMS, flicker slope, speckle KS, dominance",
    6: "FFT identities: line pairs, leakage, Parseval",
    7: "field/intensity equivalence over 10 random configurations",
    8: "determinism: repeat and parallel runs byte-identical",
    9: "property suites: unwrap, Henderson, FIR stopband, peak bias",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes.setdefault(marker.args[0], []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, text in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            verdict = "NOT RUN"
        else:
            verdict = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict:<7} {text}")
