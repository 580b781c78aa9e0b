import numpy as np
import pytest

from hallbkm.spectral import Field, Grid, fft, leray_array


@pytest.fixture
def grid32():
    return Grid(32)


@pytest.fixture
def grid64():
    return Grid(64)


def smooth_random(grid, rng, components=(3,), band=6, divfree=False):
    """Random trigonometric polynomial with per-axis frequencies <= band."""
    raw = rng.standard_normal(tuple(components) + grid.physical_shape)
    a = fft(raw)
    a = a * (grid.max_int_mode <= band)
    if divfree:
        a = leray_array(grid, a)
    return Field(grid, a, True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number, title, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
