"""Particle swarm search over antenna positions (outer layer).

A particle is the flattened ``(x_1, y_1, ..., x_Tx, y_Tx)`` layout. Its
fitness is the inner minimum power plus a quadratic penalty on pairs closer
than the minimum spacing; inner infeasibility maps to a large sentinel.
Warm-start layouts seed the first particles, so the search can only improve
on them.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .beamforming import BeamformingSolution, Infeasible, InnerReport, solve_inner
from .model import SPACING_RTOL, ArrayGeometry, Scenario

log = logging.getLogger(__name__)


class NoFeasibleGeometry(RuntimeError):
    pass


@dataclass(frozen=True)
class PSOConfig:
    swarm_size: int = 20
    iterations: int = 30
    inertia_start: float = 0.9
    inertia_end: float = 0.4
    c1: float = 2.0
    c2: float = 2.0
    velocity_cap: float = 0.2  # fraction of the region side
    penalty_weight: float = 1e6  # mW per m^2
    infeasible_fitness: float = 1e6  # mW
    seed: int = 0

    def violations(self) -> list[tuple[str, str]]:
        out = []
        if int(self.swarm_size) != self.swarm_size or self.swarm_size < 1:
            out.append(("swarm_size", "must be an integer >= 1"))
        if int(self.iterations) != self.iterations or self.iterations < 1:
            out.append(("iterations", "must be an integer >= 1"))
        if not 0 < self.velocity_cap <= 1:
            out.append(("velocity_cap", "must be in (0, 1]"))
        if self.penalty_weight <= 0:
            out.append(("penalty_weight", "must be > 0"))
        if self.infeasible_fitness <= 0:
            out.append(("infeasible_fitness", "must be > 0"))
        for name in ("inertia_start", "inertia_end", "c1", "c2"):
            if getattr(self, name) < 0:
                out.append((name, "must be >= 0"))
        if not 0 <= self.seed < 2 ** 64:
            out.append(("seed", "must be an unsigned 64-bit integer"))
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise ValueError("; ".join(f"{k}: {v}" for k, v in bad))


@dataclass
class Evaluation:
    fitness: float
    penalty: float
    solution: BeamformingSolution | None
    report: InnerReport | None

    @property
    def feasible(self) -> bool:
        return self.solution is not None and self.penalty == 0.0


@dataclass
class PSOTrace:
    best_fitness_per_iter: list[float]
    best_geometry: ArrayGeometry
    evaluations: int
    best_fitness: float = math.inf
    best_solution: BeamformingSolution | None = None
    best_report: InnerReport | None = None
    inner_reports: list[InnerReport] = field(default_factory=list)


def spacing_penalty(geometry: ArrayGeometry, min_spacing: float, weight: float = 1.0) -> float:
    """``weight * sum_{i<j} max(0, D_min - d_ij)^2``."""
    short = np.maximum(0.0, min_spacing - geometry.pairwise_distances())
    short[short <= SPACING_RTOL * min_spacing] = 0.0
    return float(weight * np.sum(short ** 2))


def clamp_to_region(raw_positions, region_side: float, min_spacing: float = 0.0) -> ArrayGeometry:
    pos = np.clip(np.asarray(raw_positions, dtype=float).reshape(-1, 2), 0.0, region_side)
    return ArrayGeometry(pos, region_side, min_spacing)


def evaluate(geometry: ArrayGeometry, scenario: Scenario, config: PSOConfig) -> Evaluation:
    penalty = spacing_penalty(geometry, scenario.min_spacing, config.penalty_weight)
    try:
        solution, report = solve_inner(geometry, scenario)
    except Infeasible:
        return Evaluation(config.infeasible_fitness + penalty, penalty, None, None)
    return Evaluation(solution.total_power + penalty, penalty, solution, report)


def fitness(geometry: ArrayGeometry, scenario: Scenario, config: PSOConfig | None = None) -> float:
    return evaluate(geometry, scenario, config or PSOConfig()).fitness


def _random_layout(rng: np.random.Generator, tx: int, side: float, spacing: float) -> np.ndarray:
    """Sequential random placement honoring the spacing where it fits easily."""
    pts = np.empty((tx, 2))
    for i in range(tx):
        for _ in range(200):
            cand = rng.uniform(0.0, side, 2)
            if i == 0 or np.min(np.hypot(*(pts[:i] - cand).T)) >= spacing:
                break
        pts[i] = cand
    return pts


def repair_spacing(geometry: ArrayGeometry, max_passes: int = 200) -> ArrayGeometry | None:
    """Push violating pairs apart symmetrically until the spacing holds.

    Returns None if clamping at the region boundary keeps reintroducing
    violations.
    """
    pos = np.array(geometry.positions)
    side, d_min = geometry.region_side, geometry.min_spacing
    target = d_min * (1 + 1e-9)
    tx = len(pos)
    for _ in range(max_passes):
        moved = False
        for i in range(tx):
            for j in range(i + 1, tx):
                delta = pos[j] - pos[i]
                d = math.hypot(*delta)
                if d >= d_min:
                    continue
                if d > 0:
                    unit = delta / d
                else:
                    angle = 2 * math.pi * (i * tx + j) / (tx * tx)
                    unit = np.array([math.cos(angle), math.sin(angle)])
                shift = 0.5 * (target - d) * unit
                pos[i] -= shift
                pos[j] += shift
                np.clip(pos, 0.0, side, out=pos)
                moved = True
        if not moved:
            return ArrayGeometry(pos, side, d_min)
    candidate = ArrayGeometry(pos, side, d_min)
    return candidate if candidate.is_feasible() else None


def pso_optimize(scenario: Scenario, config: PSOConfig, warm_starts=(),
                 region_side: float | None = None, workers: int = 1,
                 record_reports: bool = False) -> PSOTrace:
    """Global-best PSO with linearly decaying inertia.

    Fitness values are reduced in particle order and all random draws happen
    in the single-threaded update step, so the trace does not depend on
    ``workers``. The returned geometry always satisfies the spacing: the
    best zero-penalty layout seen is kept, and a penalized incumbent is
    repaired and re-evaluated before it may replace it.
    """
    config.validate()
    side = scenario.region_side if region_side is None else region_side
    tx, d_min = scenario.num_antennas, scenario.min_spacing
    warm = [clamp_to_region(g.positions, side, d_min).positions for g in warm_starts]
    for w in warm:
        if w.shape[0] != tx:
            raise ValueError("warm start has the wrong number of antennas")
    swarm = max(config.swarm_size, len(warm))
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(swarm)]

    X = np.empty((swarm, 2 * tx))
    for i in range(swarm):
        X[i] = warm[i].ravel() if i < len(warm) else _random_layout(streams[i], tx, side, d_min).ravel()
    V = np.zeros_like(X)
    v_max = config.velocity_cap * side

    reports: list[InnerReport] = []
    best_feasible: tuple[float, ArrayGeometry, Evaluation] | None = None
    evaluations = 0
    any_inner_feasible = False

    # particles parked on an already-evaluated layout reuse its fitness
    seen: dict[bytes, Evaluation] = {}

    def run(positions):
        nonlocal evaluations, best_feasible, any_inner_feasible
        geoms = [ArrayGeometry(p.reshape(tx, 2), side, d_min) for p in positions]
        keys = [g.positions.tobytes() for g in geoms]
        todo = list({k: g for k, g in zip(keys, geoms) if k not in seen}.items())
        if workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                fresh = list(pool.map(lambda kg: evaluate(kg[1], scenario, config), todo))
        else:
            fresh = [evaluate(g, scenario, config) for _, g in todo]
        for (k, _), ev in zip(todo, fresh):
            seen[k] = ev
        results = [seen[k] for k in keys]
        evaluations += len(fresh)
        for (_, g), ev in zip(todo, fresh):
            if ev.report is not None:
                any_inner_feasible = True
                if record_reports:
                    reports.append(ev.report)
            if ev.feasible and (best_feasible is None or ev.fitness < best_feasible[0]):
                best_feasible = (ev.fitness, g, ev)
        return np.array([ev.fitness for ev in results]), results

    fit, results = run(X)
    p_best, p_fit = X.copy(), fit.copy()
    g_idx = int(np.argmin(fit))
    g_best, g_fit, g_eval = X[g_idx].copy(), float(fit[g_idx]), results[g_idx]
    history = [g_fit]

    for it in range(config.iterations):
        frac = it / max(config.iterations - 1, 1)
        inertia = config.inertia_start + (config.inertia_end - config.inertia_start) * frac
        for i in range(swarm):
            r1 = streams[i].random(2 * tx)
            r2 = streams[i].random(2 * tx)
            V[i] = (inertia * V[i] + config.c1 * r1 * (p_best[i] - X[i])
                    + config.c2 * r2 * (g_best - X[i]))
        np.clip(V, -v_max, v_max, out=V)
        X = np.clip(X + V, 0.0, side)
        fit, results = run(X)
        improved = fit < p_fit
        p_best[improved], p_fit[improved] = X[improved], fit[improved]
        i = int(np.argmin(fit))
        if fit[i] < g_fit:
            g_best, g_fit, g_eval = X[i].copy(), float(fit[i]), results[i]
        history.append(g_fit)

    if g_eval.penalty > 0:
        repaired = repair_spacing(ArrayGeometry(g_best.reshape(tx, 2), side, d_min))
        if repaired is not None:
            run(repaired.positions.reshape(1, -1))
    if best_feasible is None:
        if not any_inner_feasible:
            raise NoFeasibleGeometry("every evaluated layout was infeasible")
        raise NoFeasibleGeometry("no layout satisfied the minimum spacing")
    fit_final, geom, ev = best_feasible
    return PSOTrace(history, geom, evaluations, fit_final, ev.solution, ev.report, reports)
