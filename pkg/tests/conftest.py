import numpy as np
import pytest

from slr.cloud import Label, PointCloud


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_cloud(rng, n, scale=10.0, decimals=None):
    xyz = rng.normal(size=(n, 3)) * scale
    if decimals is not None:
        # Coarse rounding creates coincident points and equal ranges.
        xyz = np.round(xyz, decimals)
    return PointCloud(xyz, rng.integers(0, 3, n))


def ground_plane(half_size, spacing, z=-1.65, offset=(0.0, 0.0)):
    k = np.arange(-int(half_size / spacing), int(half_size / spacing) + 1) * spacing
    X, Y = np.meshgrid(k + offset[0], k + offset[1], indexing="ij")
    xyz = np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, z)])
    return PointCloud(xyz, np.full(len(xyz), Label.GROUND))


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""

    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
