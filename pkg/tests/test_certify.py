import numpy as np
import pytest

from fa_lawn.beamforming import BeamformingSolution, solve_inner
from fa_lawn.certify import constraint_margins, min_power_duality
from fa_lawn.model import SensingTarget, channel

from conftest import LAM, make_scenario, random_geometry, random_user


def test_duality_single_user_closed_form(rng):
    h = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) * 1e-4
    assert min_power_duality(h[None], np.array([3.0]), 1e-10) == pytest.approx(
        3.0 * 1e-10 / np.vdot(h, h).real, rel=1e-10)


def test_duality_orthogonal_users_add():
    H = np.array([[1, 0, 0], [0, 2, 0]], complex) * 1e-4
    assert min_power_duality(H, np.array([1.0, 4.0]), 1e-10) == pytest.approx(2e-2)


def test_margins_flag_violations(rng):
    user = random_user(rng, 1.0)
    s = make_scenario(users=[user], targets=[SensingTarget(0.4, 0.4, -10.0)])
    g = random_geometry(rng, 4)
    sol, _ = solve_inner(g, s)
    assert constraint_margins(sol, g, s).passes()
    base = constraint_margins(sol, g, s).comm[0]
    weak = BeamformingSolution.from_weights(sol.weights * 0.5, 1)
    m = constraint_margins(weak, g, s)
    # half amplitude on a single link quarters the SINR up to the noise term
    assert m.comm[0] < 0.25 * (1 + base) - 1 + 1e-9
    assert not m.passes()


def test_margins_recompute_sinr(rng):
    user = random_user(rng, 2.0)
    s = make_scenario(users=[user])
    g = random_geometry(rng, 4)
    h = channel(user, g, LAM, s.ref_gain)
    w = h / np.linalg.norm(h) * np.sqrt(3.0 * s.noise_power / np.vdot(h, h).real)
    m = constraint_margins(BeamformingSolution.from_weights(w[None], 1), g, s)
    assert m.comm[0] == pytest.approx(0.0, abs=1e-12)
