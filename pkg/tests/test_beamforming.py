import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fa_lawn.beamforming import (BeamformingSolution, Infeasible, InnerProblem, InnerStatus,
                                 SCASubproblem, SolverFailure, assemble_problem, beampattern_gain,
                                 convex_solve, feasibility_init, fpa_baseline, fpa_geometry,
                                 rate_to_sinr, sca_iterate, sinr_of, solve_inner, solve_problem)
from fa_lawn.certify import constraint_margins
from fa_lawn.model import SensingTarget, channel

from conftest import LAM, make_scenario, random_geometry, random_user

NOISE = 1e-10


def single_user_power(h, gamma, noise=NOISE):
    return gamma * noise / np.vdot(h, h).real


def random_problem(rng, tx, gammas, M=0, gain_dbm=-30.0):
    H = (rng.standard_normal((len(gammas), tx)) + 1j * rng.standard_normal((len(gammas), tx))) * 1e-4
    A = np.exp(2j * math.pi * rng.uniform(size=(M, tx)))
    return InnerProblem(H, np.array(gammas, float), NOISE, A, np.full(M, 10 ** (gain_dbm / 10)),
                        len(gammas))


@pytest.mark.parametrize("rate, sinr", [(0, 0), (1, 1), (3, 7)])
def test_rate_to_sinr(rate, sinr):
    assert rate_to_sinr(rate) == sinr


def test_sinr_matched_filter(rng):
    h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    P = 2.5
    w = math.sqrt(P) * h / np.linalg.norm(h)
    assert sinr_of(h, w, [], 0.3) == pytest.approx(P * np.vdot(h, h).real / 0.3)


def test_sinr_zero_own_weight(rng):
    h = rng.standard_normal(4) + 0j
    assert sinr_of(h, np.zeros(4), [h], 1.0) == 0.0


def test_sinr_orthogonal_users_do_not_interfere():
    h1, h2 = np.array([1, 1j, 0, 0]), np.array([0, 0, 1, -1j])
    assert sinr_of(h1, h1, [h2], 1.0) == pytest.approx(4.0)  # |h1^H h1|^2 / noise


def test_beampattern_gain_values(rng):
    a = np.exp(2j * math.pi * rng.uniform(size=7))
    zero = BeamformingSolution.from_weights(np.zeros((2, 7)), 2)
    assert beampattern_gain(a, zero) == 0.0
    assert beampattern_gain(a, BeamformingSolution.from_weights((a / np.linalg.norm(a))[None], 1)) \
        == pytest.approx(7.0)


@given(st.integers(0, 2 ** 32 - 1))
def test_beampattern_matches_covariance_form(seed):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    a = np.exp(2j * math.pi * rng.uniform(size=5))
    R = sum(np.outer(w, w.conj()) for w in W)
    direct = beampattern_gain(a, BeamformingSolution.from_weights(W, 2))
    assert direct == pytest.approx(np.real(a.conj() @ R @ a), rel=1e-10)


def test_init_single_user_matched_filter(rng):
    p = random_problem(rng, 5, [3.0])
    sol = feasibility_init(p)
    h = p.channels[0]
    cos = abs(np.vdot(h, sol.weights[0])) / (np.linalg.norm(h) * np.linalg.norm(sol.weights[0]))
    assert cos == pytest.approx(1.0)
    assert sol.total_power == pytest.approx(single_user_power(h, 3.0) * (1 + 1e-6), rel=1e-9)


def test_init_no_constraints_is_zero():
    p = InnerProblem(np.zeros((0, 4), complex), np.zeros(0), NOISE, np.zeros((0, 4), complex),
                     np.zeros(0), 0)
    assert feasibility_init(p).total_power == 0.0


def test_init_unreachable_beampattern_is_infeasible(rng):
    # gain is at most Tx * P_cap for unit-modulus steering
    p = random_problem(rng, 4, [1.0], M=1, gain_dbm=60 + 10 * math.log10(4) + 1)
    with pytest.raises(Infeasible):
        feasibility_init(p)


def test_sensing_without_beams_is_infeasible():
    s = make_scenario(targets=[SensingTarget(0.3, 0.3, -10.0)])
    with pytest.raises(Infeasible):
        solve_inner(random_geometry(np.random.default_rng(0), 4), s)


@given(st.integers(0, 2 ** 32 - 1))
def test_tangent_minorizes_gain(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 4, [1.0, 2.0], M=2)
    sub = sca_iterate(feasibility_init(p), p)
    true_at_anchor = np.sum(np.abs(p.steering.conj() @ sub.anchor.T) ** 2, axis=1)
    assert sub.linearized_gains(sub.anchor) == pytest.approx(true_at_anchor, rel=1e-9)
    for _ in range(100):
        W = sub.anchor + 1e-3 * (rng.standard_normal(sub.anchor.shape)
                                 + 1j * rng.standard_normal(sub.anchor.shape))
        true = np.sum(np.abs(p.steering.conj() @ W.T) ** 2, axis=1)
        assert np.all(sub.linearized_gains(W) <= true * (1 + 1e-12) + 1e-18)


def test_convex_solve_single_user_is_exact(rng):
    p = random_problem(rng, 6, [2.0])
    sol = convex_solve(sca_iterate(feasibility_init(p), p))
    assert sol.total_power == pytest.approx(single_user_power(p.channels[0], 2.0), rel=1e-6)


def test_convex_solve_orthogonal_users_separate():
    h1 = np.array([1, 1j, 0, 0]) * 1e-4
    h2 = np.array([0, 0, 1, -1j]) * 2e-4
    p = InnerProblem(np.array([h1, h2]), np.array([1.0, 3.0]), NOISE, np.zeros((0, 4), complex),
                     np.zeros(0), 2)
    sol = convex_solve(sca_iterate(feasibility_init(p), p))
    expected = single_user_power(h1, 1.0) + single_user_power(h2, 3.0)
    assert sol.total_power == pytest.approx(expected, rel=1e-6)


def test_convex_solve_contradiction_fails(rng):
    p = random_problem(rng, 3, [1.0], M=1)
    sub = sca_iterate(feasibility_init(p), p)
    bad = SCASubproblem(p, sub.anchor, np.zeros_like(sub.lin_coeffs), sub.lin_rhs)
    with pytest.raises(SolverFailure):
        convex_solve(bad)


def test_solve_single_user_converges_fast(rng):
    p = random_problem(rng, 8, [1.0])
    sol, rep = solve_problem(p)
    assert rep.iterations <= 2 and rep.status is InnerStatus.FEASIBLE
    assert sol.total_power == pytest.approx(single_user_power(p.channels[0], 1.0), rel=1e-4)


def test_zero_thresholds_give_zero_power(rng):
    s = make_scenario(users=[random_user(rng, 0.0), random_user(rng, 0.0)])
    sol, rep = solve_inner(random_geometry(rng, 4), s)
    assert sol.total_power == 0.0 and rep.power_trajectory == [0.0]


@given(st.integers(0, 2 ** 32 - 1))
def test_trajectory_monotone_and_certified(seed):
    rng = np.random.default_rng(seed)
    targets = [SensingTarget(float(np.arccos(rng.uniform())), float(rng.uniform(0, 6.28)), -5.0)
               for _ in range(2)]
    s = make_scenario(users=[random_user(rng, 1.0) for _ in range(2)], targets=targets, tx=6)
    g = random_geometry(rng, 6)
    sol, rep = solve_inner(g, s)
    traj = rep.power_trajectory
    assert all(b <= a * (1 + 1e-9) for a, b in zip(traj, traj[1:]))
    assert constraint_margins(sol, g, s).passes(1e-6)


def test_tightening_a_threshold_raises_power(rng):
    g = random_geometry(rng, 6)
    users = [random_user(rng, 1.0) for _ in range(3)]
    base, _ = solve_inner(g, make_scenario(users=users, tx=6))
    last = users[2]
    tighter = users[:2] + [type(last)(last.distance, last.pathloss_exponent, last.paths, 1.5)]
    harder, _ = solve_inner(g, make_scenario(users=tighter, tx=6))
    assert harder.total_power > base.total_power


def test_fpa_single_user_matches_formula(rng):
    user = random_user(rng, 2.0)
    s = make_scenario(users=[user], tx=10)
    sol, _ = fpa_baseline(s)
    h = channel(user, fpa_geometry(s), LAM, s.ref_gain)
    assert sol.total_power == pytest.approx(single_user_power(h, 3.0, s.noise_power), rel=1e-4)


def test_fpa_deterministic(rng):
    s = make_scenario(users=[random_user(rng) for _ in range(2)],
                      targets=[SensingTarget(0.5, 1.0, -20.0)], tx=10)
    a, b = fpa_baseline(s)[0], fpa_baseline(s)[0]
    assert np.array_equal(a.weights, b.weights)


def test_assemble_orders_users_then_plants():
    from fa_lawn.control import double_integrator_plant
    from fa_lawn.model import CommUser, PathCluster
    rng = np.random.default_rng(3)
    user = random_user(rng)
    plant = double_integrator_plant(CommUser(80.0, 2.8, (PathCluster(0.2, 0.1, 1.0),)))
    p = assemble_problem(random_geometry(rng, 4), make_scenario(users=[user], plants=[plant]))
    assert p.num_comm == 1 and p.num_beams == 2
    assert p.sinr_targets[0] == pytest.approx(1.0)
    assert p.sinr_targets[1] == pytest.approx(-math.log(1 - 0.03795) / 0.5, rel=1e-3)
