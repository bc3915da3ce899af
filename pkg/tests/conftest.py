import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    """One visible line per acceptance criterion, capture or not."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in RESULTS:
        terminalreporter.write_line(
            f"ACCEPTANCE {'PASS' if passed else 'FAIL'}: {name}"
        )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_cloud(rng, n, labeled=False, p=3):
    from pointparts import PointCloud

    positions = rng.normal(size=(n, 3))
    labels = rng.integers(1, p + 1, size=n) if labeled else None
    return PointCloud(positions=positions, gt_labels=labels)
