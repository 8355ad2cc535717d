import numpy as np
import pytest
from hypothesis import settings

from roughscat import experiments as ex
from roughscat import solve as solve_mod

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")

#: energy-identity defects of every solve executed during the session
ENERGY_DEFECTS: list = []
#: one verdict line per acceptance criterion
ACCEPTANCE: list = []

_original_solve = solve_mod.Factorization.solve


def _recording_solve(self, rhs):
    report = _original_solve(self, rhs)
    ENERGY_DEFECTS.append(report.energy_defect)
    return report


solve_mod.Factorization.solve = _recording_solve

DESK = 2 * np.pi / 2 / 15  # lambda_1 / 15 for k1^2 = 4


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def standard_scene():
    return ex.Scene(ex.standard_scene_config(DESK), points=[(0.0, 1.0)])


@pytest.fixture(scope="session")
def flat_scene():
    return ex.Scene(ex.flat_scene_config(2.0, DESK, A=8.0), points=[(0.0, 1.0)])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
    if ENERGY_DEFECTS:
        worst = max(ENERGY_DEFECTS)
        verdict = "PASS" if worst <= solve_mod.ENERGY_TOL else "FAIL"
        terminalreporter.write_line(f"criterion 4 (whole session): {verdict} ({len(ENERGY_DEFECTS)} solves, "
                                    f"max relative defect {worst:.3e})")
