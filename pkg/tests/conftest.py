import math
import time

import pytest

from threeregion.correlator import DetectorSpec, FieldSpec, amplitude_set
from threeregion.windows import gaussian_window

OMEGA_T = 4.0
L_GRID = (2.0, 3.0, 4.0)


def equilateral(L, T=1.0, omega=OMEGA_T, eps0=1.0, window=None):
    window = window or gaussian_window(eps0, T)
    h = L * math.sqrt(3) / 2
    pos = {"A": (0, 0, 0), "B": (L, 0, 0), "C": (L / 2, h, 0)}
    return tuple(DetectorSpec(i, pos[i], omega, window) for i in "ABC")


@pytest.fixture(scope="session")
def massless():
    return FieldSpec()


@pytest.fixture(scope="session")
def physical_sets(massless):
    """Continuum amplitude sets for Gaussian windows, Omega T = 4, L/T = 2, 3, 4."""
    start = time.perf_counter()
    sets = {L: amplitude_set(massless, equilateral(L)) for L in L_GRID}
    PHYSICAL_SETS_SECONDS.append(time.perf_counter() - start)
    return sets


PHYSICAL_SETS_SECONDS = []


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
