"""Array geometry, steering vectors and field-response channels.

Positions are 2D coordinates in meters inside a square movable region
``[0, A]^2``. Channels follow the far-field planar-wave multipath model:
every path contributes a steering vector weighted by its complex gain.
Powers are linear mW throughout; dBm only appears in configs and reports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .control import ControlledPlant


class InvalidConfig(ValueError):
    """Raised when a scenario config field is outside its documented range."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class EmptyPaths(ValueError):
    pass


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0:
        return -math.inf
    return 10.0 * math.log10(mw)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


# grids built at exactly D_min must not fail on rounding
SPACING_RTOL = 1e-9


@dataclass(frozen=True)
class ArrayGeometry:
    positions: np.ndarray  # (Tx, 2), meters
    region_side: float
    min_spacing: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ValueError(f"positions must have shape (Tx, 2) with Tx >= 1, got {pos.shape}")
        if self.region_side <= 0:
            raise ValueError("region_side must be positive")
        tol = 1e-12 * max(1.0, self.region_side)
        if np.any(pos < -tol) or np.any(pos > self.region_side + tol):
            raise ValueError("positions must lie inside [0, region_side]^2")
        pos = np.clip(pos, 0.0, self.region_side)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def num_antennas(self) -> int:
        return self.positions.shape[0]

    def pairwise_distances(self) -> np.ndarray:
        """Condensed vector of distances for all pairs i < j."""
        i, j = np.triu_indices(self.num_antennas, k=1)
        return np.hypot(*(self.positions[i] - self.positions[j]).T)

    def is_feasible(self) -> bool:
        d = self.pairwise_distances()
        return bool(d.size == 0 or d.min() >= self.min_spacing * (1 - SPACING_RTOL))

    def with_region(self, region_side: float) -> ArrayGeometry:
        return ArrayGeometry(self.positions, region_side, self.min_spacing)


@dataclass(frozen=True)
class PathCluster:
    elevation: float
    azimuth: float
    gain: complex

    def __post_init__(self):
        if not 0.0 <= self.elevation <= math.pi:
            raise ValueError(f"elevation {self.elevation} outside [0, pi]")
        if not 0.0 <= self.azimuth < 2 * math.pi:
            raise ValueError(f"azimuth {self.azimuth} outside [0, 2pi)")
        if not np.isfinite(self.gain):
            raise ValueError("path gain must be finite")


@dataclass(frozen=True)
class CommUser:
    distance: float
    pathloss_exponent: float
    paths: tuple[PathCluster, ...]
    rate_req: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if self.distance <= 0:
            raise ValueError("distance must be positive")
        if self.pathloss_exponent < 2:
            raise ValueError("pathloss exponent must be >= 2")
        if self.rate_req < 0:
            raise ValueError("rate_req must be >= 0")


@dataclass(frozen=True)
class SensingTarget:
    elevation: float
    azimuth: float
    gain_req: float  # dBm

    def __post_init__(self):
        if not 0.0 <= self.elevation <= math.pi:
            raise ValueError(f"elevation {self.elevation} outside [0, pi]")
        if not 0.0 <= self.azimuth < 2 * math.pi:
            raise ValueError(f"azimuth {self.azimuth} outside [0, 2pi)")


@dataclass(frozen=True)
class Scenario:
    wavelength: float
    noise_power: float  # mW
    ref_gain: float  # linear power gain at 1 m
    users: tuple[CommUser, ...]
    targets: tuple[SensingTarget, ...]
    plants: tuple[ControlledPlant, ...]
    num_antennas: int
    region_side: float
    min_spacing: float
    seed: int = 0

    def __post_init__(self):
        for name in ("users", "targets", "plants"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise power must be positive")
        if self.ref_gain <= 0:
            raise ValueError("reference gain must be positive")
        if self.num_antennas < 1:
            raise ValueError("need at least one antenna")

    def replace(self, **changes) -> Scenario:
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(changes)
        return Scenario(**kwargs)


def direction_cosines(elevation: float, azimuth: float) -> tuple[float, float]:
    s = math.sin(elevation)
    return s * math.cos(azimuth), s * math.sin(azimuth)


def _steering_matrix(positions: np.ndarray, u: np.ndarray, v: np.ndarray,
                     wavelength: float) -> np.ndarray:
    # (n_dirs, Tx)
    phase = np.outer(u, positions[:, 0]) + np.outer(v, positions[:, 1])
    return np.exp(2j * np.pi * phase / wavelength)


def steering_vector(geometry: ArrayGeometry, elevation: float, azimuth: float,
                    wavelength: float) -> np.ndarray:
    """Far-field response of every element toward ``(elevation, azimuth)``.

    Element ``i`` is ``exp(j 2 pi (x_i u + y_i v) / wavelength)`` with
    ``(u, v)`` the direction cosines, so all entries have unit modulus.
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    u, v = direction_cosines(elevation, azimuth)
    return _steering_matrix(geometry.positions, np.array([u]), np.array([v]), wavelength)[0]


def channel(user: CommUser, geometry: ArrayGeometry, wavelength: float,
            ref_gain: float) -> np.ndarray:
    """Multipath field-response channel of a single-antenna receiver."""
    if not user.paths:
        raise EmptyPaths("link has no propagation paths")
    theta = np.array([p.elevation for p in user.paths])
    phi = np.array([p.azimuth for p in user.paths])
    gains = np.array([p.gain for p in user.paths], dtype=complex)
    steer = _steering_matrix(geometry.positions, np.sin(theta) * np.cos(phi),
                             np.sin(theta) * np.sin(phi), wavelength)
    amplitude = math.sqrt(ref_gain * user.distance ** (-user.pathloss_exponent))
    return amplitude * (gains @ steer)


def fpa_layout(num_antennas: int, wavelength: float, region_side: float,
               min_spacing: float | None = None) -> ArrayGeometry:
    """Compact half-wavelength grid centered in the region (5x2 for Tx=10)."""
    spacing = wavelength / 2
    rows = 1 if num_antennas < 4 else 2
    cols = math.ceil(num_antennas / rows)
    idx = np.arange(num_antennas)
    grid = np.column_stack([(idx % cols) * spacing, (idx // cols) * spacing])
    grid += region_side / 2 - (grid.max(axis=0) + grid.min(axis=0)) / 2
    if grid.min() < 0 or grid.max() > region_side:
        raise InvalidConfig("region_wavelengths", "fixed-position layout does not fit in the region")
    return ArrayGeometry(grid, region_side, spacing if min_spacing is None else min_spacing)


# ---------------------------------------------------------------------------
# Scenario sampling


@dataclass(frozen=True)
class ScenarioConfig:
    num_users: int = 3
    num_targets: int = 3
    num_plants: int = 2
    num_antennas: int = 10
    noise_dbm: float = -100.0
    ref_gain_db: float = -60.0
    rate_req: float = 1.0
    beampattern_dbm: float = -10.0
    lqr_cost_max: float = 10.58
    region_wavelengths: float = 5.0
    large_region_wavelengths: float = 10.0
    wavelength: float = 0.1
    min_spacing_wavelengths: float = 0.5
    num_paths: int = 4
    nlos_variance: float = 0.1
    distance_min: float = 50.0
    distance_max: float = 150.0
    pathloss_exponent: float = 2.8
    control_dt: float = 0.1
    process_noise: float = 0.01
    kappa: float = 0.5

    def violations(self) -> list[tuple[str, str]]:
        """All (field, reason) pairs that break the documented ranges."""
        out = []

        def need(ok, name, why):
            if not ok:
                out.append((name, why))

        for name in ("num_users", "num_targets", "num_plants"):
            need(int(getattr(self, name)) == getattr(self, name) and getattr(self, name) >= 0,
                 name, "must be a non-negative integer")
        need(int(self.num_antennas) == self.num_antennas and self.num_antennas >= 1,
             "num_antennas", "must be an integer >= 1")
        need(int(self.num_paths) == self.num_paths and self.num_paths >= 1,
             "num_paths", "must be an integer >= 1")
        for name in ("noise_dbm", "ref_gain_db", "beampattern_dbm"):
            need(math.isfinite(getattr(self, name)), name, "must be finite")
        need(self.rate_req >= 0, "rate_req", "must be >= 0")
        need(self.lqr_cost_max > 0, "lqr_cost_max", "must be > 0")
        need(self.wavelength > 0, "wavelength", "must be > 0")
        need(self.region_wavelengths > 0, "region_wavelengths", "must be > 0")
        need(self.large_region_wavelengths >= self.region_wavelengths, "large_region_wavelengths",
             "must be >= region_wavelengths")
        need(self.min_spacing_wavelengths >= 0, "min_spacing_wavelengths", "must be >= 0")
        need(self.nlos_variance >= 0, "nlos_variance", "must be >= 0")
        need(0 < self.distance_min <= self.distance_max, "distance_min",
             "must satisfy 0 < distance_min <= distance_max")
        need(self.pathloss_exponent >= 2, "pathloss_exponent", "must be >= 2")
        need(self.control_dt > 0, "control_dt", "must be > 0")
        need(self.process_noise >= 0, "process_noise", "must be >= 0")
        need(self.kappa > 0, "kappa", "must be > 0")
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            name, why = bad[0]
            raise InvalidConfig(name, why)

    def replace(self, **changes) -> ScenarioConfig:
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(changes)
        return ScenarioConfig(**kwargs)


def _hemisphere_angles(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    # area-uniform over the upper hemisphere
    elevation = np.arccos(rng.uniform(0.0, 1.0, n))
    azimuth = rng.uniform(0.0, 2 * np.pi, n)
    return elevation, azimuth


def _sample_link(rng: np.random.Generator, cfg: ScenarioConfig, rate_req: float) -> CommUser:
    distance = rng.uniform(cfg.distance_min, cfg.distance_max)
    elevation, azimuth = _hemisphere_angles(rng, cfg.num_paths)
    nlos = rng.standard_normal((cfg.num_paths, 2)) @ np.array([1, 1j])
    gains = nlos * math.sqrt(cfg.nlos_variance / 2)
    gains[0] = 1.0  # dominant line-of-sight path
    paths = tuple(PathCluster(float(e), float(a), complex(g))
                  for e, a, g in zip(elevation, azimuth, gains))
    return CommUser(float(distance), cfg.pathloss_exponent, paths, rate_req)


def sample_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Draw a problem instance; a pure function of ``(config, seed)``.

    Users, targets and plants each get their own child stream of the seed,
    so changing how many of one kind are drawn leaves the others untouched.
    """
    from .control import double_integrator_plant

    config.validate()
    user_rng, target_rng, plant_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))

    users = [_sample_link(user_rng, config, config.rate_req) for _ in range(config.num_users)]
    elevation, azimuth = _hemisphere_angles(target_rng, config.num_targets)
    targets = [SensingTarget(float(e), float(a), config.beampattern_dbm)
               for e, a in zip(elevation, azimuth)]
    plants = [double_integrator_plant(_sample_link(plant_rng, config, 0.0),
                                      lqr_cost_max=config.lqr_cost_max,
                                      dt=config.control_dt,
                                      process_noise=config.process_noise,
                                      kappa=config.kappa)
              for _ in range(config.num_plants)]

    wavelength = config.wavelength
    return Scenario(
        wavelength=wavelength,
        noise_power=dbm_to_mw(config.noise_dbm),
        ref_gain=db_to_linear(config.ref_gain_db),
        users=users,
        targets=targets,
        plants=plants,
        num_antennas=int(config.num_antennas),
        region_side=config.region_wavelengths * wavelength,
        min_spacing=config.min_spacing_wavelengths * wavelength,
        seed=seed,
    )
