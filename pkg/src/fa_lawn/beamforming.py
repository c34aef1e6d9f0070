"""Minimum-power transmit beamforming for fixed antenna positions.

The base station serves K communication users and N controlled UAVs with one
beam each; every receiver treats the other beams as interference. Sensing
reuses the aggregate transmit covariance: the power radiated toward each
target, ``sum_j |a^H w_j|^2``, must reach the target's beampattern floor.

SINR constraints are second-order cones once each beam is rotated so that
``h_j^H w_j`` is real. The beampattern floors are reverse-convex, so they are
replaced by their tangent minorants at the current point and the resulting
SOCP is solved repeatedly (successive convex approximation). Every iterate
is feasible for the original problem, so the power never increases.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from enum import Enum

import clarabel
import numpy as np
import scipy.sparse as sp

from . import control
from .model import ArrayGeometry, Scenario, channel, dbm_to_mw, fpa_layout, steering_vector

log = logging.getLogger(__name__)

SCA_TOL = 1e-4
SCA_MAX_ITER = 50
INIT_MARGIN = 1e-6
POWER_CAP_MW = dbm_to_mw(60.0)
# slack kept when repairing solver output, well under the 1e-6 audit tolerance
REPAIR_MARGIN = 1e-9
SLACK_TOL = 1e-6


class Infeasible(RuntimeError):
    """No beamformer meets the requirements below the power cap."""


class SolverFailure(RuntimeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InnerStatus(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    ITERATION_CAP = "IterationCap"


@dataclass(frozen=True)
class BeamformingSolution:
    comm_weights: np.ndarray  # (K, Tx)
    ctrl_weights: np.ndarray  # (N, Tx)
    total_power: float  # mW

    @classmethod
    def from_weights(cls, weights: np.ndarray, num_comm: int) -> BeamformingSolution:
        weights = np.asarray(weights, dtype=complex)
        return cls(weights[:num_comm].copy(), weights[num_comm:].copy(),
                   float(np.sum(np.abs(weights) ** 2)))

    @property
    def weights(self) -> np.ndarray:
        return np.vstack([self.comm_weights, self.ctrl_weights])


@dataclass
class InnerReport:
    power_trajectory: list[float]
    iterations: int
    status: InnerStatus
    # smallest relative constraint slack found by the independent checker
    worst_margin: float | None = None


@dataclass(frozen=True)
class InnerProblem:
    """Channels and thresholds of one inner solve; users first, then plants."""
    channels: np.ndarray  # (K+N, Tx)
    sinr_targets: np.ndarray  # (K+N,)
    noise_power: float
    steering: np.ndarray  # (M, Tx)
    gain_targets: np.ndarray  # (M,) mW
    num_comm: int

    @property
    def num_beams(self) -> int:
        return self.channels.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.steering.shape[1] if self.steering.size else self.channels.shape[1]

    @cached_property
    def cone_rows(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Phase-fix rows, SOC rows and the SOC rows holding the noise term.

        Rows act on the stacked real vector ``[Re w_1, Im w_1, Re w_2, ...]``
        of noise-normalized weights; the subproblem only rescales them.
        """
        B, tx = self.num_beams, self.num_antennas
        n = 2 * B * tx
        active = np.flatnonzero(self.sinr_targets > 0)
        Hc = (self.channels / math.sqrt(self.noise_power)).conj()
        # re_rows[k, i]: Re(h_k^H w_i) as a row; im_rows likewise
        re_rows = np.zeros((B, B, n))
        im_rows = np.zeros((B, B, n))
        for i in range(B):
            o = 2 * tx * i
            re_rows[:, i, o:o + tx], re_rows[:, i, o + tx:o + 2 * tx] = Hc.real, -Hc.imag
            im_rows[:, i, o:o + tx], im_rows[:, i, o + tx:o + 2 * tx] = Hc.imag, Hc.real
        phase = np.array([im_rows[j, j] for j in active]).reshape(-1, n)
        soc, noise_rows = [], []
        for j in active:
            soc.append(-re_rows[j, j] / math.sqrt(self.sinr_targets[j]))
            for i in range(B):
                if i != j:
                    soc += [-re_rows[j, i], -im_rows[j, i]]
            noise_rows.append(len(soc))
            soc.append(np.zeros(n))
        return phase, np.array(soc).reshape(-1, n), np.array(noise_rows, dtype=int), active


@dataclass(frozen=True)
class SCASubproblem:
    """Convex restriction built around a feasible anchor.

    Sensing row ``m`` reads ``sum_j 2 Re{c_mj^T w_j} >= rhs_m`` with
    ``c_mj = conj(a_m^H w_j^t) conj(a_m)``, the tangent of ``|a_m^H w_j|^2``.
    """
    problem: InnerProblem
    anchor: np.ndarray  # (K+N, Tx), rotated so h_j^H w_j >= 0
    lin_coeffs: np.ndarray  # (M, K+N, Tx)
    lin_rhs: np.ndarray  # (M,)

    def linearized_gains(self, weights: np.ndarray) -> np.ndarray:
        tangent = 2 * np.einsum("mjt,jt->m", self.lin_coeffs, weights).real
        return tangent - (self.lin_rhs - self.problem.gain_targets)


def rate_to_sinr(rate_req: float) -> float:
    if rate_req < 0:
        raise ValueError("rate must be >= 0")
    return 2.0 ** rate_req - 1.0


def sinr_of(link_channel: np.ndarray, own_weight: np.ndarray, other_weights, noise_power: float) -> float:
    """``|h^H w|^2 / (sum_other |h^H v|^2 + noise)``."""
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    signal = abs(np.vdot(link_channel, own_weight)) ** 2
    others = np.asarray(other_weights, dtype=complex).reshape(-1, len(link_channel))
    interference = float(np.sum(np.abs(others @ link_channel.conj()) ** 2))
    return signal / (interference + noise_power)


def beampattern_gain(a_target: np.ndarray, solution: BeamformingSolution) -> float:
    return float(np.sum(np.abs(solution.weights @ a_target.conj()) ** 2))


def assemble_problem(geometry: ArrayGeometry, scenario: Scenario) -> InnerProblem:
    """Channels and linear thresholds; raises Infeasible if a cost ceiling is unreachable."""
    lam, g0 = scenario.wavelength, scenario.ref_gain
    links = [u for u in scenario.users] + [p.link for p in scenario.plants]
    tx = geometry.num_antennas
    H = (np.array([channel(link, geometry, lam, g0) for link in links])
         if links else np.zeros((0, tx), dtype=complex))
    gammas = [rate_to_sinr(u.rate_req) for u in scenario.users]
    for plant in scenario.plants:
        try:
            gammas.append(control.control_sinr_floor(plant))
        except (control.InfeasibleCost, control.UnattainableReliability) as exc:
            raise Infeasible(f"control requirement unreachable: {exc}") from exc
    steer = (np.array([steering_vector(geometry, t.elevation, t.azimuth, lam) for t in scenario.targets])
             if scenario.targets else np.zeros((0, tx), dtype=complex))
    gains = np.array([dbm_to_mw(t.gain_req) for t in scenario.targets], dtype=float)
    return InnerProblem(H, np.array(gammas, dtype=float), scenario.noise_power, steer, gains,
                        len(scenario.users))


# ---------------------------------------------------------------------------
# Feasible starting point


def _sinrs(Hn: np.ndarray, W: np.ndarray) -> np.ndarray:
    """SINR of every link for noise-normalized channels ``Hn``."""
    G = np.abs(Hn.conj() @ W.T) ** 2  # G[k, j] = |h_k^H w_j|^2
    signal = np.diag(G)
    return signal / (G.sum(axis=1) - signal + 1.0)


def _sensing_gains(A: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(A.conj() @ W.T) ** 2, axis=1)


def _power_control(Hn, U, gammas, idle_power):
    """Least powers meeting every SINR for fixed unit directions ``U``.

    Beams with zero target get ``idle_power``. Returns None when the
    directions cannot support the targets at any power.
    """
    G = np.abs(Hn.conj() @ U.T) ** 2
    active = gammas > 0
    p = np.where(active, 0.0, idle_power)
    if not active.any():
        return p
    act = np.flatnonzero(active)
    idle = np.flatnonzero(~active)
    direct = G[act, act]
    if np.any(direct <= 0):
        return None
    D = gammas[act] / direct
    F = G[np.ix_(act, act)].copy()
    np.fill_diagonal(F, 0.0)
    rhs = D * (1.0 + G[np.ix_(act, idle)] @ p[idle])
    try:
        sol = np.linalg.solve(np.eye(len(act)) - D[:, None] * F, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)) or np.any(sol <= 0):
        return None
    p[act] = sol
    return p


def _fold_targets(U: np.ndarray, A: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Blend each target's steering direction into the best-aligned beam."""
    U = U.copy()
    for a, gamma in zip(A, targets):
        if gamma <= 0:
            continue
        a_unit = a / np.linalg.norm(a)
        proj = U.conj() @ a_unit
        j = int(np.argmax(np.abs(proj)))
        phase = np.exp(-1j * np.angle(proj[j]))  # a^H u has phase -angle(u^H a)
        blended = U[j] + phase * a_unit
        U[j] = blended / np.linalg.norm(blended)
    return U


def _unit_rows(M: np.ndarray) -> np.ndarray | None:
    norms = np.linalg.norm(M, axis=1, keepdims=True)
    if np.any(norms <= 1e-300):
        return None
    return M / norms


def feasibility_init(problem: InnerProblem, margin: float = INIT_MARGIN,
                     power_cap: float = POWER_CAP_MW) -> BeamformingSolution:
    """Feasible beamformer with relative slack ``margin`` on every constraint.

    Candidate directions are matched filters and zero-forcing beams, each with
    and without the target steering vectors folded in. Powers come from SINR
    power control, then a common scale-up lifts the beampattern gains (scaling
    all beams together never lowers an SINR). The cheapest candidate wins.
    """
    B, M = problem.num_beams, len(problem.gain_targets)
    tx = problem.num_antennas
    if B == 0:
        if np.any(problem.gain_targets > 0):
            raise Infeasible("sensing requirements but no beams to carry them")
        return BeamformingSolution.from_weights(np.zeros((0, tx), complex), 0)
    if not np.any(problem.sinr_targets > 0) and not np.any(problem.gain_targets > 0):
        return BeamformingSolution.from_weights(np.zeros((B, tx), complex), problem.num_comm)

    Hn = problem.channels / math.sqrt(problem.noise_power)
    gammas = problem.sinr_targets * (1 + margin)
    targets = problem.gain_targets * (1 + margin)

    bases = [_unit_rows(problem.channels)]
    if B <= tx:
        zf = np.linalg.pinv(problem.channels.conj()).T  # h_k^H u_j = 0 for k != j
        bases.append(_unit_rows(zf))
    candidates = []
    for U in bases:
        if U is None:
            continue
        candidates.append(U)
        if M:
            candidates.append(_fold_targets(U, problem.steering, targets))

    best = None
    for U in candidates:
        for idle in (0.0, 1.0):
            p = _power_control(Hn, U, gammas, idle)
            if p is None:
                break
            W = np.sqrt(p)[:, None] * U
            need = targets > 0
            if need.any():
                g = _sensing_gains(problem.steering[need], W)
                if np.any(g <= 0):
                    continue  # retry with idle beams switched on
                scale = max(1.0, float(np.max(targets[need] / g)))
                W = W * math.sqrt(scale)
            power = float(np.sum(np.abs(W) ** 2))
            if power <= power_cap and _satisfies(problem, W, margin * 0.5):
                if best is None or power < best[0]:
                    best = (power, W)
            break
    if best is None:
        raise Infeasible("no initial beamformer within the power cap")
    return BeamformingSolution.from_weights(best[1], problem.num_comm)


def _satisfies(problem: InnerProblem, W: np.ndarray, margin: float = 0.0) -> bool:
    Hn = problem.channels / math.sqrt(problem.noise_power)
    ok = np.all(_sinrs(Hn, W) >= problem.sinr_targets * (1 + margin)) if len(W) else True
    if len(problem.gain_targets):
        ok = ok and np.all(_sensing_gains(problem.steering, W) >= problem.gain_targets * (1 + margin))
    return bool(ok)


def _repair_scale(problem: InnerProblem, W: np.ndarray, margin: float = REPAIR_MARGIN) -> np.ndarray | None:
    """Smallest common scale-up that makes ``W`` feasible, or None."""
    Hn = problem.channels / math.sqrt(problem.noise_power)
    need = [1.0]
    G = np.abs(Hn.conj() @ W.T) ** 2
    signal = np.diag(G)
    interference = G.sum(axis=1) - signal
    gammas = problem.sinr_targets * (1 + margin)
    for s, i, g in zip(signal, interference, gammas):
        if g <= 0:
            continue
        room = s - g * i
        if room <= 0:
            return None
        need.append(g / room)
    if len(problem.gain_targets):
        gains = _sensing_gains(problem.steering, W)
        targets = problem.gain_targets * (1 + margin)
        for gain, t in zip(gains, targets):
            if t <= 0:
                continue
            if gain <= 0:
                return None
            need.append(t / gain)
    return W * math.sqrt(max(need))


# ---------------------------------------------------------------------------
# SCA


def _rotate(problem: InnerProblem, W: np.ndarray) -> np.ndarray:
    """Per-beam phase so that ``h_j^H w_j`` is real and non-negative."""
    inner = np.einsum("jt,jt->j", problem.channels.conj(), W)
    phase = np.where(np.abs(inner) > 0, np.exp(-1j * np.angle(inner)), 1.0)
    return W * phase[:, None]


def sca_iterate(current: BeamformingSolution, problem: InnerProblem) -> SCASubproblem:
    W = _rotate(problem, current.weights)
    proj = problem.steering.conj() @ W.T  # (M, B): a_m^H w_j
    coeffs = np.conj(proj)[:, :, None] * problem.steering.conj()[:, None, :]
    rhs = problem.gain_targets + np.sum(np.abs(proj) ** 2, axis=1)
    return SCASubproblem(problem, W, coeffs, rhs)


def _to_complex(x: np.ndarray, beams: int, tx: int) -> np.ndarray:
    x = x.reshape(beams, 2, tx)
    return x[:, 0] + 1j * x[:, 1]


_SETTINGS = None


def _settings():
    global _SETTINGS
    if _SETTINGS is None:
        s = clarabel.DefaultSettings()
        s.verbose = False
        s.max_iter = 200
        s.tol_gap_abs = 1e-10
        s.tol_gap_rel = 1e-10
        s.tol_feas = 1e-10
        s.tol_ktratio = 1e-8
        _SETTINGS = s
    return _SETTINGS


def convex_solve(subproblem: SCASubproblem) -> BeamformingSolution:
    """Solve the SOCP restriction with Clarabel.

    Weights are scaled by the anchor's power so the program is O(1). The
    result is checked against the subproblem's own constraints.
    """
    prob = subproblem.problem
    B, tx = prob.num_beams, prob.num_antennas
    n = 2 * B * tx
    anchor_power = float(np.sum(np.abs(subproblem.anchor) ** 2))
    scale2 = anchor_power if anchor_power > 0 else 1.0
    phase_rows, soc_rows, noise_rows, active = prob.cone_rows
    sensing = np.flatnonzero(prob.gain_targets > 0)

    # tangent rows: 2 Re(c^T w) over [Re w, Im w] blocks is 2 [Re c, -Im c]
    coeffs = subproblem.lin_coeffs[sensing] / math.sqrt(scale2)
    sens_rows = -2 * np.concatenate([coeffs.real, -coeffs.imag], axis=2).reshape(len(sensing), n)
    soc_b = np.zeros(len(soc_rows))
    soc_b[noise_rows] = 1.0 / math.sqrt(scale2)

    cones = []
    if len(active):
        cones.append(clarabel.ZeroConeT(len(active)))
    if len(sensing):
        cones.append(clarabel.NonnegativeConeT(len(sensing)))
    cones += [clarabel.SecondOrderConeT(2 * B)] * len(active)
    if not cones:
        return BeamformingSolution.from_weights(np.zeros((B, tx), complex), prob.num_comm)

    dense = np.vstack([phase_rows, sens_rows, soc_rows])
    b = np.concatenate([np.zeros(len(active)), -subproblem.lin_rhs[sensing] / scale2, soc_b])
    A = sp.csc_matrix(dense)
    P = sp.identity(n, format="csc") * 2.0
    result = clarabel.DefaultSolver(P, np.zeros(n), A, b, cones, _settings()).solve()
    status = str(result.status)
    if status not in ("Solved", "AlmostSolved"):
        raise SolverFailure(f"subproblem solver returned {status}",
                            {"status": status, "iterations": result.iterations})
    x = np.array(result.x)
    residual = _cone_residuals(b - dense @ x, cones)
    if residual > 1e-8:
        raise SolverFailure("subproblem constraints violated",
                            {"status": status, "max_residual": residual})
    W = _to_complex(x, B, tx) * math.sqrt(scale2)
    return BeamformingSolution.from_weights(W, prob.num_comm)


def _cone_residuals(s: np.ndarray, cones) -> float:
    worst, k = 0.0, 0
    for cone in cones:
        d = cone.dim
        part = s[k:k + d]
        if isinstance(cone, clarabel.ZeroConeT):
            worst = max(worst, float(np.max(np.abs(part))))
        elif isinstance(cone, clarabel.NonnegativeConeT):
            worst = max(worst, float(np.max(-part, initial=0.0)))
        else:
            worst = max(worst, float(np.linalg.norm(part[1:]) - part[0]))
        k += d
    return worst


def solve_problem(problem: InnerProblem, tol: float = SCA_TOL,
                  max_iter: int = SCA_MAX_ITER) -> tuple[BeamformingSolution, InnerReport]:
    """SCA loop from the feasibility start; raises Infeasible if there is none.

    A candidate is accepted only if it lowers the power after repair, so the
    trajectory is strictly decreasing and every iterate is feasible.
    """
    current = feasibility_init(problem)
    trajectory = [current.total_power]
    status = InnerStatus.FEASIBLE
    iterations = 0
    if current.total_power == 0.0:
        return current, InnerReport(trajectory, 0, status)
    while True:
        if iterations >= max_iter:
            status = InnerStatus.ITERATION_CAP
            break
        iterations += 1
        sub = sca_iterate(current, problem)
        try:
            candidate = convex_solve(sub)
        except SolverFailure as exc:
            log.debug("SCA stopped at iteration %d: %s %s", iterations, exc, exc.diagnostics)
            break
        W = _repair_scale(problem, candidate.weights)
        if W is None:
            break
        # Slack tangent rows mean the point also solves the SINR-only
        # relaxation, hence the original problem: nothing left to gain.
        settled = bool(np.all(sub.linearized_gains(W) > problem.gain_targets * (1 + SLACK_TOL)))
        candidate = BeamformingSolution.from_weights(W, problem.num_comm)
        previous = trajectory[-1]
        if not candidate.total_power < previous:
            break
        current = candidate
        trajectory.append(candidate.total_power)
        if settled or previous - candidate.total_power <= tol * previous:
            break
    return current, InnerReport(trajectory, iterations, status)


def solve_inner(geometry: ArrayGeometry, scenario: Scenario, tol: float = SCA_TOL,
                max_iter: int = SCA_MAX_ITER) -> tuple[BeamformingSolution, InnerReport]:
    from .certify import worst_margin

    problem = assemble_problem(geometry, scenario)
    solution, report = solve_problem(problem, tol, max_iter)
    report.worst_margin = worst_margin(solution, geometry, scenario)
    return solution, report


def fpa_geometry(scenario: Scenario) -> ArrayGeometry:
    return fpa_layout(scenario.num_antennas, scenario.wavelength, scenario.region_side,
                      scenario.min_spacing)


def fpa_baseline(scenario: Scenario) -> tuple[BeamformingSolution, InnerReport]:
    """Inner solve on the fixed 5x2 half-wavelength layout; no position search."""
    return solve_inner(fpa_geometry(scenario), scenario)
