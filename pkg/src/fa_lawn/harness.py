"""Seeded sweeps comparing the fixed array with two movable-region sizes.

For every seed the channel realization is drawn once and reused for every
axis value and architecture (common random numbers). Architectures are
nested through warm starts: both movable arrays start from the fixed layout,
the larger region also starts from the smaller region's optimum, and each
architecture starts from its own optimum at the previous, easier axis value.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .beamforming import Infeasible, InnerReport, fpa_baseline, fpa_geometry, solve_inner
from .model import ArrayGeometry, Scenario, ScenarioConfig, mw_to_dbm, sample_scenario
from .position_opt import NoFeasibleGeometry, PSOConfig, pso_optimize

log = logging.getLogger(__name__)

CSV_COLUMNS = ("axis", "value", "architecture", "mean_dBm", "std_dBm", "feasibility")


class InvalidSpec(ValueError):
    pass


class CsvWriteError(OSError):
    pass


class Architecture(str, Enum):
    FPA = "FPA"
    FA_SMALL = "FA(5λ)"
    FA_LARGE = "FA(10λ)"


ALL_ARCHITECTURES = (Architecture.FPA, Architecture.FA_SMALL, Architecture.FA_LARGE)

# axis -> ScenarioConfig field it sweeps
AXIS_FIELDS = {
    "rate": "rate_req",
    "beampattern_gain": "beampattern_dbm",
    "lqr_cost": "lqr_cost_max",
}

DEFAULT_VALUES = {
    "rate": (0.5, 1.0, 2.0, 3.0, 4.0, 5.0),
    "beampattern_gain": (-20.0, -15.0, -10.0, -5.0, 0.0, 5.0),
    "lqr_cost": tuple(round(10.58 * 2.0 ** k, 6) for k in range(-4, 2)),
}


def region_side(architecture: Architecture, config: ScenarioConfig) -> float | None:
    if architecture is Architecture.FA_SMALL:
        return config.region_wavelengths * config.wavelength
    if architecture is Architecture.FA_LARGE:
        return config.large_region_wavelengths * config.wavelength
    return None


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple[float, ...]
    architectures: tuple[Architecture, ...] = ALL_ARCHITECTURES
    num_seeds: int = 10
    base_config: ScenarioConfig = field(default_factory=ScenarioConfig)
    pso: PSOConfig = field(default_factory=PSOConfig)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "architectures", tuple(Architecture(a) for a in self.architectures))
        if self.axis not in AXIS_FIELDS:
            raise InvalidSpec(f"unknown axis {self.axis!r}; expected one of {sorted(AXIS_FIELDS)}")
        if not self.values or not self.architectures:
            raise InvalidSpec("values and architectures must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise InvalidSpec("values must be strictly increasing")
        if len(set(self.architectures)) != len(self.architectures):
            raise InvalidSpec("duplicate architecture")
        if self.num_seeds < 1:
            raise InvalidSpec("num_seeds must be >= 1")

    def easy_to_hard(self) -> tuple[float, ...]:
        # a larger cost ceiling is a looser requirement
        return tuple(reversed(self.values)) if self.axis == "lqr_cost" else self.values

    def seeds(self) -> list[int]:
        return [self.seed + s for s in range(self.num_seeds)]


@dataclass
class PointResult:
    architecture: Architecture
    power: float | None  # mW; None when infeasible
    geometry: ArrayGeometry | None = None
    sca_iterations: int = 0
    evaluations: int = 0
    reports: list[InnerReport] = field(default_factory=list)
    solution: object = None


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    architecture: str
    mean_dBm: float
    std_dBm: float
    feasibility: float

    @property
    def flagged(self) -> bool:
        return self.feasibility < 0.5


@dataclass(frozen=True)
class PointRecord:
    seed: int
    value: float
    architecture: str
    power: float | None


@dataclass
class SweepTable:
    rows: list[SweepRow]
    points: list[PointRecord] = field(default_factory=list)
    reports: list[InnerReport] = field(default_factory=list)

    def row(self, value: float, architecture) -> SweepRow:
        arch = Architecture(architecture).value
        for r in self.rows:
            if r.value == value and r.architecture == arch:
                return r
        raise KeyError((value, arch))

    def series(self, architecture) -> list[SweepRow]:
        arch = Architecture(architecture).value
        return sorted((r for r in self.rows if r.architecture == arch), key=lambda r: r.value)


def run_point(scenario: Scenario, architecture: Architecture, pso: PSOConfig | None = None,
              warm_starts=(), region: float | None = None, workers: int = 1,
              record_reports: bool = False) -> PointResult:
    """Minimum power of one architecture on one scenario; infeasibility is recorded."""
    architecture = Architecture(architecture)
    pso = pso or PSOConfig()
    fixed = fpa_geometry(scenario)
    if architecture is Architecture.FPA:
        try:
            solution, report = fpa_baseline(scenario)
        except Infeasible:
            return PointResult(architecture, None)
        return PointResult(architecture, solution.total_power, fixed, report.iterations, 1,
                           [report] if record_reports else [], solution)
    if region is None:
        factor = 2.0 if architecture is Architecture.FA_LARGE else 1.0
        region = factor * scenario.region_side
    warm = [fixed.with_region(region)] + [g.with_region(region) for g in warm_starts]
    try:
        trace = pso_optimize(scenario, pso, warm, region_side=region, workers=workers,
                             record_reports=record_reports)
    except NoFeasibleGeometry:
        return PointResult(architecture, None)
    return PointResult(architecture, trace.best_fitness, trace.best_geometry,
                       trace.best_report.iterations, trace.evaluations,
                       trace.inner_reports, trace.best_solution)


def run_comparison(scenario: Scenario, config: ScenarioConfig, architectures=ALL_ARCHITECTURES,
                   pso: PSOConfig | None = None, previous: dict | None = None,
                   record_reports: bool = False, workers: int = 1) -> dict[Architecture, PointResult]:
    """All architectures on one scenario, smaller region first.

    ``previous`` maps an architecture to the layout it found at the previous
    axis value; it joins that architecture's warm starts.
    """
    previous = previous or {}
    out: dict[Architecture, PointResult] = {}
    for arch in ALL_ARCHITECTURES:
        if arch not in architectures:
            continue
        warm = []
        if arch is Architecture.FA_LARGE:
            small = out.get(Architecture.FA_SMALL)
            if small is not None and small.geometry is not None:
                warm.append(small.geometry)
        if previous.get(arch) is not None:
            warm.append(previous[arch])
        out[arch] = run_point(scenario, arch, pso, warm, region_side(arch, config), workers,
                              record_reports)
    _enforce_order(out)
    return out


def _better(current: PointResult, candidate: PointResult | None) -> PointResult:
    if candidate is None or candidate.power is None:
        return current
    if current.power is None or candidate.power < current.power:
        return candidate
    return current


def _resolve_at(scenario: Scenario, res: PointResult, record_reports: bool) -> PointResult | None:
    """Inner optimum at another point's layout, or None if infeasible there."""
    if res.geometry is None:
        return None
    try:
        solution, report = solve_inner(res.geometry, scenario)
    except Infeasible:
        return None
    return PointResult(res.architecture, solution.total_power, res.geometry, report.iterations, 1,
                       [report] if record_reports else [], solution)


def _adopt(res: PointResult, architecture: Architecture) -> PointResult:
    return PointResult(architecture, res.power, res.geometry, res.sca_iterations, 0, [], res.solution)


def _enforce_order(point: dict) -> None:
    # a smaller region's layout is available to every larger region
    prev = None
    for arch in ALL_ARCHITECTURES:
        if arch not in point:
            continue
        if prev is not None and prev.power is not None:
            point[arch] = _better(point[arch], _adopt(prev, arch))
        prev = point[arch]


def _seed_chain(spec: SweepSpec, seed: int, record_reports: bool):
    field_name = AXIS_FIELDS[spec.axis]
    pso = PSOConfig(**{**spec.pso.__dict__, "seed": (spec.pso.seed + seed) % 2 ** 64})
    previous: dict = {}
    results, scenarios = {}, {}
    order = spec.easy_to_hard()
    for value in order:
        config = spec.base_config.replace(**{field_name: value})
        scenarios[value] = sample_scenario(config, seed)
        point = run_comparison(scenarios[value], config, spec.architectures, pso, previous, record_reports)
        for arch, res in point.items():
            if res.geometry is not None and arch is not Architecture.FPA:
                previous[arch] = res.geometry
        results[value] = point

    # Backward pass: whatever was achieved at a harder value is feasible at
    # every easier one, so offer it (and a re-solve on its layout) downhill.
    for harder, easier in zip(order[::-1], order[-2::-1]):
        point = results[easier]
        for arch in point:
            done = results[harder][arch]
            if done.power is None:
                continue
            point[arch] = _better(point[arch], _adopt(done, arch))
            point[arch] = _better(point[arch], _resolve_at(scenarios[easier], done, record_reports))
        _enforce_order(point)
    return results


def run_sweep(spec: SweepSpec, workers: int = 1, record_reports: bool = False) -> SweepTable:
    """Run every seed's chain (in parallel when ``workers > 1``) and aggregate.

    Means and standard deviations are taken over per-seed powers in dBm,
    feasible seeds only; the fraction of feasible seeds is reported alongside.
    """
    seeds = spec.seeds()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chains = list(pool.map(lambda s: _seed_chain(spec, s, record_reports), seeds))
    else:
        chains = [_seed_chain(spec, s, record_reports) for s in seeds]

    rows, points, reports = [], [], []
    for value in spec.values:
        for arch in spec.architectures:
            powers = []
            for seed, chain in zip(seeds, chains):
                res = chain[value][arch]
                points.append(PointRecord(seed, value, arch.value, res.power))
                reports.extend(res.reports)
                if res.power is not None:
                    powers.append(mw_to_dbm(res.power))
            feasibility = len(powers) / len(seeds)
            if powers:
                dbm = np.array(powers)
                mean = float(np.mean(dbm)) if np.all(np.isfinite(dbm)) else float(np.min(dbm))
                std = float(np.std(dbm)) if np.all(np.isfinite(dbm)) else math.nan
            else:
                mean = std = math.nan
            row = SweepRow(spec.axis, value, arch.value, mean, std, feasibility)
            if row.flagged:
                log.warning("%s=%g %s feasible for only %.0f%% of seeds",
                            spec.axis, value, arch.value, 100 * feasibility)
            rows.append(row)
    return SweepTable(rows, points, reports)


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def emit_csv(table: SweepTable, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in table.rows:
                writer.writerow([r.axis, _fmt(r.value), r.architecture, _fmt(r.mean_dBm),
                                 _fmt(r.std_dBm), _fmt(r.feasibility)])
    except OSError as exc:
        raise CsvWriteError(exc.errno, f"cannot write sweep table: {exc.strerror}", os.fspath(path)) from exc


def read_csv(path) -> SweepTable:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        rows = [SweepRow(r["axis"], float(r["value"]), r["architecture"], float(r["mean_dBm"]),
                         float(r["std_dBm"]), float(r["feasibility"])) for r in reader]
    return SweepTable(rows)


def csv_filename(axis: str, timestamp: str | None = None) -> str:
    return f"sweep_{axis}.csv" if timestamp is None else f"sweep_{axis}_{timestamp}.csv"
