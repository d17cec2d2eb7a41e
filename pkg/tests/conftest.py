import pytest

from lpvid import harness


@pytest.fixture(scope="session")
def default_flight():
    """One full default sweep, shared because it takes a few seconds to fly."""
    cfg = harness.ExperimentConfig()
    return cfg, harness.fly(cfg)


@pytest.fixture(scope="session")
def noisy_datasets(default_flight):
    cfg, flight = default_flight
    cfg = cfg.replace(noise_sigma=0.005)
    return cfg, harness.datasets_from_flight(flight, cfg)


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(number, name, passed, detail):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
