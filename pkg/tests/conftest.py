import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from condensate.green import GreenData  # noqa: E402
from condensate.profile import build_H, build_sigma0  # noqa: E402
from condensate.torus_core import Torus, VortexConfig  # noqa: E402

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")

# criterion number -> list of (label, passed, detail); printed in the terminal summary
ACCEPTANCE = {}


def record(criterion, label, passed, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        for label, ok, detail in ACCEPTANCE[crit]:
            terminalreporter.write_line(f"criterion {crit:2d} {'PASS' if ok else 'FAIL'}  {label}  {detail}")


SQUARE_2202_POINTS = ((0.25 + 0.25j, 2), (-0.25 + 0.25j, 2), (0.25 - 0.25j, 0), (-0.25 - 0.25j, 2))


@pytest.fixture(scope="session")
def square_torus():
    return Torus.square(1.0)


@pytest.fixture(scope="session")
def square_greens(square_torus):
    return GreenData(square_torus)


@pytest.fixture(scope="session")
def square_2202(square_greens):
    """Order-two concentration point with vortices at the other quarter points of the unit square."""
    cfg = VortexConfig(SQUARE_2202_POINTS, (0,))
    return build_sigma0(build_H(cfg, square_greens))


def half_period_config(torus, orders):
    w1, w2 = torus.omega1, torus.omega2
    c = (w1 + w2) / 4
    n, n1, n2, n3 = orders
    return VortexConfig(((c, n), (c - w1 / 2, n1), (c - w2 / 2, n2), (c - (w1 + w2) / 2, n3)), (0,))
