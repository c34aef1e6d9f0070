import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fa_lawn.model import (ArrayGeometry, CommUser, InvalidConfig, PathCluster, ScenarioConfig,
                           channel, dbm_to_mw, direction_cosines, fpa_layout, mw_to_dbm,
                           sample_scenario, steering_vector)

from conftest import LAM, random_geometry


@pytest.mark.parametrize("el, az, expected", [
    (0.0, 1.3, (0.0, 0.0)),
    (math.pi / 2, 0.0, (1.0, 0.0)),
    (math.pi / 2, math.pi / 2, (0.0, 1.0)),
])
def test_direction_cosines(el, az, expected):
    assert direction_cosines(el, az) == pytest.approx(expected, abs=1e-15)


def test_steering_all_at_origin_is_ones():
    g = ArrayGeometry(np.zeros((4, 2)), 1.0, 0.0)
    assert np.allclose(steering_vector(g, 0.7, 2.0, LAM), np.ones(4))


def test_steering_half_wavelength_endfire_flips_sign():
    g = ArrayGeometry(np.array([[LAM / 2, 0.0]]), 1.0, 0.0)
    assert steering_vector(g, math.pi / 2, 0.0, LAM)[0] == pytest.approx(-1.0)


@given(st.integers(1, 10), st.integers(0, 2 ** 32 - 1),
       st.floats(0, math.pi), st.floats(0, 2 * math.pi, exclude_max=True))
def test_steering_unit_modulus(tx, seed, el, az):
    g = random_geometry(np.random.default_rng(seed), tx)
    a = steering_vector(g, el, az, LAM)
    assert np.vdot(a, a).real == pytest.approx(tx)


def test_channel_single_path_norm():
    g = random_geometry(np.random.default_rng(0), 6)
    user = CommUser(1.0, 2.0, (PathCluster(0.4, 1.0, 1.0),))
    h = channel(user, g, LAM, 1e-6)
    assert np.vdot(h, h).real == pytest.approx(6e-6)


def test_channel_cancelling_paths_is_zero():
    g = random_geometry(np.random.default_rng(1), 5)
    user = CommUser(10.0, 2.8, (PathCluster(0.4, 1.0, 1.0), PathCluster(0.4, 1.0, -1.0)))
    assert np.allclose(channel(user, g, LAM, 1e-6), 0.0)


def test_channel_power_linear_in_ref_gain(rng):
    from conftest import random_user
    g = random_geometry(rng, 8)
    user = random_user(rng)
    h1, h4 = channel(user, g, LAM, 1e-6), channel(user, g, LAM, 4e-6)
    assert np.vdot(h4, h4).real == pytest.approx(4 * np.vdot(h1, h1).real)


def test_geometry_rejects_out_of_region():
    with pytest.raises(ValueError):
        ArrayGeometry(np.array([[0.0, 0.6]]), 0.5, 0.05)


def test_fpa_layout_is_centered_half_wavelength_grid():
    g = fpa_layout(10, LAM, 5 * LAM)
    assert g.is_feasible()
    assert g.pairwise_distances().min() == pytest.approx(LAM / 2)
    assert g.positions.mean(axis=0) == pytest.approx([2.5 * LAM, 2.5 * LAM])


def test_sample_scenario_deterministic():
    a = sample_scenario(ScenarioConfig(), 5)
    b = sample_scenario(ScenarioConfig(), 5)
    assert a.users == b.users and a.targets == b.targets
    assert [p.link for p in a.plants] == [p.link for p in b.plants]


def test_sample_scenario_defaults():
    s = sample_scenario(ScenarioConfig(), 0)
    assert (len(s.users), len(s.targets), len(s.plants), s.num_antennas) == (3, 3, 2, 10)
    assert s.noise_power == pytest.approx(1e-10)
    assert all(50 <= u.distance <= 150 for u in s.users)
    assert all(0 <= t.elevation <= math.pi / 2 for t in s.targets)


def test_sample_scenario_without_users():
    s = sample_scenario(ScenarioConfig(num_users=0), 0)
    assert s.users == ()


def test_config_reports_every_violation():
    cfg = ScenarioConfig(num_users=-1, kappa=0.0)
    names = {name for name, _ in cfg.violations()}
    assert {"num_users", "kappa"} <= names
    with pytest.raises(InvalidConfig):
        cfg.validate()


@given(st.floats(-150, 60))
def test_dbm_round_trip(x):
    assert mw_to_dbm(dbm_to_mw(x)) == pytest.approx(x)


def test_mw_to_dbm_zero():
    assert mw_to_dbm(0.0) == -math.inf
