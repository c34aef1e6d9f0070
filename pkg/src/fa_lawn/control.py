"""LQR cost over a lossy command link, and its inversion to an SINR floor.

Each controlled UAV receives its actuation command over the wireless link;
a command packet arrives with probability ``p`` (Bernoulli, i.i.d.). The
expected infinite-horizon cost then follows the modified Riccati recursion

    S <- Q + A'SA - p A'SB (R + B'SB)^-1 B'SA,       J = tr(S W),

which diverges below a critical delivery probability. Delivery is tied to
link quality by ``eps = exp(-kappa * SINR)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CommUser

CONVERGENCE_TOL = 1e-10
MAX_ITERATIONS = 100_000
DIVERGENCE_CAP = 1e12
BISECTION_TOL = 1e-8


class InfeasibleCost(ValueError):
    """No delivery probability, not even p = 1, meets the cost ceiling."""


class UnattainableReliability(ValueError):
    """The ceiling needs p = 1, which no finite SINR provides."""


def _psd_floor(M: np.ndarray, name: str, strict: bool) -> None:
    if not np.allclose(M, M.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    lo = np.linalg.eigvalsh(M).min() if M.size else 0.0
    if (strict and lo <= 0) or lo < -1e-12:
        raise ValueError(f"{name} must be positive {'definite' if strict else 'semidefinite'}")


@dataclass(frozen=True, eq=False)
class ControlledPlant:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    W: np.ndarray
    J_max: float
    link: CommUser
    kappa: float = 0.5

    def __post_init__(self):
        for name in ("A", "B", "Q", "R", "W"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n, m = self.B.shape
        if self.A.shape != (n, n) or self.Q.shape != (n, n) or self.W.shape != (n, n):
            raise ValueError("A, Q, W must be n x n with n = rows of B")
        if self.R.shape != (m, m):
            raise ValueError("R must be m x m with m = columns of B")
        _psd_floor(self.Q, "Q", strict=False)
        _psd_floor(self.R, "R", strict=True)
        _psd_floor(self.W, "W", strict=False)
        if self.J_max < 0:
            raise ValueError("J_max must be >= 0")
        if self.kappa <= 0:
            raise ValueError("kappa must be > 0")

    def dynamics_key(self) -> tuple:
        """Hashable identity of everything the cost map depends on."""
        return tuple((a.shape, a.tobytes()) for a in (self.A, self.B, self.Q, self.R, self.W))


def double_integrator_plant(link: CommUser, lqr_cost_max: float = 10.58, dt: float = 0.1,
                            process_noise: float = 0.01, kappa: float = 0.5) -> ControlledPlant:
    """Position/velocity model of one UAV axis, commanded in acceleration."""
    A = np.array([[1.0, dt], [0.0, 1.0]])
    B = np.array([[0.0], [dt]])
    return ControlledPlant(A, B, np.eye(2), np.eye(1), process_noise * np.eye(2),
                           lqr_cost_max, link, kappa)


def _iterate_riccati(A, B, Q, R, p, S0=None, W=None, cost_cap=None):
    """Run the lossy-actuation Riccati map; returns ``(S, state)``.

    ``state`` is "converged", "diverged" or "exceeded". Started at or below
    the fixed point the iterates never decrease, so once ``tr(S W)`` passes
    ``cost_cap`` the limit must too and the run can stop early.
    """
    A, B, Q, R = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (A, B, Q, R))
    At = A.T
    sqrt_n = math.sqrt(A.shape[0])
    S = Q.copy() if S0 is None else np.array(S0, dtype=float)
    for _ in range(MAX_ITERATIONS):
        SB = S @ B
        AtSB = At @ SB
        S_next = Q + At @ S @ A - p * (AtSB @ np.linalg.solve(R + B.T @ SB, AtSB.T))
        S_next = (S_next + S_next.T) / 2
        size = np.linalg.norm(S_next)
        if not np.isfinite(size) or (size > DIVERGENCE_CAP
                                     and np.linalg.norm(S_next, 2) > DIVERGENCE_CAP):
            return None, "diverged"
        delta = S_next - S
        S = S_next
        # Frobenius norm brackets the spectral norm within a factor sqrt(n)
        step = np.linalg.norm(delta)
        if step <= CONVERGENCE_TOL or (step <= sqrt_n * CONVERGENCE_TOL
                                       and np.linalg.norm(delta, 2) <= CONVERGENCE_TOL):
            return S, "converged"
        if cost_cap is not None and np.trace(S @ W) > cost_cap * (1 + 1e-12):
            return S, "exceeded"
    return None, "diverged"


def riccati_fixed_point(A, B, Q, R, p: float) -> np.ndarray | None:
    """Iterate the lossy-actuation Riccati map from ``Q``; None if it diverges.

    Stops when successive iterates differ by at most ``CONVERGENCE_TOL`` in
    spectral norm. Hitting the norm cap, or the iteration cap without
    settling, counts as divergence.
    """
    S, state = _iterate_riccati(A, B, Q, R, p)
    return S if state == "converged" else None


def lossy_lqr_cost(plant: ControlledPlant, p: float) -> float:
    """Expected LQR cost at delivery probability ``p``; ``inf`` when divergent."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"success probability {p} outside [0, 1]")
    S = riccati_fixed_point(plant.A, plant.B, plant.Q, plant.R, p)
    if S is None:
        return math.inf
    return max(float(np.trace(S @ plant.W)), 0.0)


# (dynamics_key, J_max) -> p_min or the InfeasibleCost raised for it
_P_MIN_CACHE: dict = {}


def min_success_prob(plant: ControlledPlant, J_max: float) -> float:
    """Smallest delivery probability whose cost stays within ``J_max``.

    Bisection on the non-increasing map ``p -> lossy_lqr_cost(plant, p)``;
    the returned end of the bracket always satisfies the ceiling. Results
    are memoized per plant dynamics since sampled plants share matrices.
    """
    if J_max <= 0:
        raise ValueError("J_max must be > 0")
    key = (plant.dynamics_key(), float(J_max))
    hit = _P_MIN_CACHE.get(key)
    if hit is None:
        try:
            hit = _bisect_success_prob(plant, float(J_max))
        except InfeasibleCost as exc:
            hit = exc
        _P_MIN_CACHE[key] = hit
    if isinstance(hit, InfeasibleCost):
        raise InfeasibleCost(*hit.args)
    return hit


def _bisect_success_prob(plant: ControlledPlant, J_max: float) -> float:
    if lossy_lqr_cost(plant, 1.0) > J_max:
        raise InfeasibleCost(f"cost at p=1 exceeds J_max={J_max}")
    S, state = _iterate_riccati(plant.A, plant.B, plant.Q, plant.R, 0.0, None, plant.W, J_max)
    if state == "converged" and max(float(np.trace(S @ plant.W)), 0.0) <= J_max:
        return 0.0
    lo, hi = 0.0, 1.0
    # the fixed point at a feasible p lies below the one at any smaller p,
    # so it is a valid (and much closer) starting point
    S_hi = riccati_fixed_point(plant.A, plant.B, plant.Q, plant.R, 1.0)
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        S, state = _iterate_riccati(plant.A, plant.B, plant.Q, plant.R, mid, S_hi, plant.W, J_max)
        if state == "converged" and max(float(np.trace(S @ plant.W)), 0.0) <= J_max:
            hi, S_hi = mid, S
        else:
            lo = mid
    return hi


def packet_error(sinr: float, kappa: float) -> float:
    if sinr < 0:
        raise ValueError("sinr must be >= 0")
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    return math.exp(-kappa * sinr)


def control_sinr_floor(plant: ControlledPlant, J_max: float | None = None) -> float:
    """Linear SINR the command link needs so the LQR cost stays within ``J_max``."""
    J_max = plant.J_max if J_max is None else J_max
    p_min = min_success_prob(plant, J_max)
    if p_min >= 1.0:
        raise UnattainableReliability("cost ceiling requires lossless delivery")
    return -math.log1p(-p_min) / plant.kappa
