import pytest

from ftqkd import load_config


@pytest.fixture
def ideal_config():
    """Lossless, jitter-free session with exact frequency and time correlations."""
    return load_config(overrides={
        "source.sigma_corr_nu": 0.0,
        "source.sigma_corr_t": 0.0,
        "detectors.alice.jitter_sigma": 0.0,
        "detectors.bob.jitter_sigma": 0.0,
        "paths.alice.insertion_loss_db": 0.0,
        "paths.bob.insertion_loss_db": 0.0,
        "pairs": 100_000,
    })


_criteria = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _criteria.append((report.outcome, value))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for outcome, line in _criteria:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {line}")
