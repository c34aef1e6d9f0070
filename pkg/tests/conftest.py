import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fa_lawn.model import ArrayGeometry, CommUser, PathCluster, Scenario

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

LAM = 0.1


def random_user(rng, rate_req=1.0, num_paths=4):
    el = np.arccos(rng.uniform(0, 1, num_paths))
    az = rng.uniform(0, 2 * math.pi, num_paths)
    gains = [1.0] + list(np.sqrt(0.05) * (rng.standard_normal(num_paths - 1)
                                          + 1j * rng.standard_normal(num_paths - 1)))
    paths = tuple(PathCluster(float(e), float(a), complex(g)) for e, a, g in zip(el, az, gains))
    return CommUser(float(rng.uniform(50, 150)), 2.8, paths, rate_req)


def random_geometry(rng, tx, side=5 * LAM, spacing=LAM / 2):
    pts = []
    while len(pts) < tx:
        c = rng.uniform(0, side, 2)
        if all(np.hypot(*(c - p)) >= spacing for p in pts):
            pts.append(c)
    return ArrayGeometry(np.array(pts), side, spacing)


def make_scenario(users=(), targets=(), plants=(), tx=4, side=5 * LAM, noise=1e-10):
    return Scenario(LAM, noise, 1e-6, tuple(users), tuple(targets), tuple(plants), tx, side, LAM / 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed after the run
CRITERIA: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for key in sorted(CRITERIA, key=lambda k: int(k.split()[1])):
            terminalreporter.write_line(f"{key}: {CRITERIA[key]}")
