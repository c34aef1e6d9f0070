"""Independent constraint checker and convex-regime reference solver.

Nothing here touches the SCA machinery: SINRs, beampattern gains and control
thresholds are recomputed from the scenario and the raw weights, so the
checker can certify solver output rather than echo it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import control_sinr_floor
from .model import ArrayGeometry, Scenario, channel, steering_vector

AUDIT_TOL = 1e-6


@dataclass
class ConstraintMargins:
    """Relative slack ``(achieved - required) / required`` per constraint."""
    comm: list[float]
    control: list[float]
    sensing: list[float]

    @property
    def worst(self) -> float:
        return min(self.comm + self.control + self.sensing, default=math.inf)

    def passes(self, tol: float = AUDIT_TOL) -> bool:
        return self.worst >= -tol


def _relative(achieved: float, required: float) -> float:
    if required <= 0:
        return math.inf
    return (achieved - required) / required


def constraint_margins(solution, geometry: ArrayGeometry, scenario: Scenario) -> ConstraintMargins:
    lam, g0, noise = scenario.wavelength, scenario.ref_gain, scenario.noise_power
    beams = list(solution.comm_weights) + list(solution.ctrl_weights)

    def link_sinr(h, own):
        total = 0.0
        wanted = 0.0
        for idx, w in enumerate(beams):
            power = abs(np.sum(np.conj(h) * w)) ** 2
            if idx == own:
                wanted = power
            else:
                total += power
        return wanted / (total + noise)

    comm = []
    for k, user in enumerate(scenario.users):
        h = channel(user, geometry, lam, g0)
        comm.append(_relative(link_sinr(h, k), 2.0 ** user.rate_req - 1.0))
    ctrl = []
    for n, plant in enumerate(scenario.plants):
        h = channel(plant.link, geometry, lam, g0)
        ctrl.append(_relative(link_sinr(h, len(scenario.users) + n), control_sinr_floor(plant)))

    covariance = sum((np.outer(w, w.conj()) for w in beams),
                     np.zeros((geometry.num_antennas,) * 2, complex))
    sensing = []
    for target in scenario.targets:
        a = steering_vector(geometry, target.elevation, target.azimuth, lam)
        gain = float(np.real(a.conj() @ covariance @ a))
        sensing.append(_relative(gain, 10.0 ** (target.gain_req / 10.0)))
    return ConstraintMargins(comm, ctrl, sensing)


def worst_margin(solution, geometry: ArrayGeometry, scenario: Scenario) -> float:
    return constraint_margins(solution, geometry, scenario).worst


def min_power_duality(channels: np.ndarray, sinr_targets: np.ndarray, noise_power: float,
                      tol: float = 1e-13, max_iter: int = 100_000) -> float:
    """Least total power for SINR-only downlink beamforming.

    Fixed-point iteration on the virtual uplink powers,
    ``q_k <- gamma_k / (h_k^H (I + sum_{j != k} q_j h_j h_j^H)^-1 h_k)``,
    over noise-normalized channels. The limit ``sum_k q_k`` equals the
    downlink optimum by uplink-downlink duality. Returns ``inf`` if the
    iteration blows up.
    """
    H = np.asarray(channels, dtype=complex) / math.sqrt(noise_power)
    gam = np.asarray(sinr_targets, dtype=float)
    K, tx = H.shape
    q = np.zeros(K)
    for _ in range(max_iter):
        total = np.eye(tx, dtype=complex) + (H.T * q) @ H.conj()
        q_new = np.empty(K)
        for k in range(K):
            Tk = total - q[k] * np.outer(H[k], H[k].conj())
            q_new[k] = gam[k] / np.real(H[k].conj() @ np.linalg.solve(Tk, H[k]))
        if not np.all(np.isfinite(q_new)) or q_new.sum() > 1e30:
            return math.inf
        done = np.max(np.abs(q_new - q)) <= tol * max(1.0, np.max(q_new))
        q = q_new
        if done:
            break
    return float(q.sum())
