import numpy as np
import pytest

from ssns.diagnostics import DiagnosticsMonitor
from ssns.dissipation import DissipationSpec
from ssns.solver import SolverConfig, initial_vorticity, run
from ssns.spectral import Grid, make_lp_bank


@pytest.fixture(scope="session")
def grid32():
    return Grid(32)


@pytest.fixture(scope="session")
def grid64():
    return Grid(64)


@pytest.fixture(scope="session")
def bank64(grid64):
    return make_lp_bank(grid64)


@pytest.fixture(scope="session")
def energy_run():
    """128^2, gamma = 1/4, smooth random data with ||u0|| = 1, integrated to T = 1."""
    grid = Grid(128)
    spec = DissipationSpec(0.25)
    config = SolverConfig(grid, spec, dt_max=2e-3, t_end=1.0, cadence=10)
    omega0 = initial_vorticity(grid, "random", seed=7, energy=1.0)
    monitor = DiagnosticsMonitor(make_lp_bank(grid), spec)
    report = run(config, omega0, [monitor])
    return {"config": config, "omega0": omega0, "monitor": monitor, "report": report, "E": 1.0}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def report(number, name, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
