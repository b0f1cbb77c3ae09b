import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def grid100():
    from wclkit.placement import place_fixed_grid
    return place_fixed_grid(100.0, 100)


def line_deployment(xs, ys, area_R=1000.0, pu=(0.0, 0.0)):
    from wclkit.placement import Deployment, Disk
    pts = np.column_stack([xs, ys]).astype(float)
    return Deployment(pts, pts.copy(), np.asarray(pu, float), Disk(area_R))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
