"""Run configuration: a flat, sectioned key-value file.

Example::

    [scenario]
    num_users = 3
    noise_dbm = -100

    [pso]
    swarm_size = 20

    [sweep]
    axis = rate
    values = 0.5, 1, 2

    [run]
    seed = 7

Unknown sections or keys are errors. Every problem found is reported, each
with its line number, rather than stopping at the first.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import re
from dataclasses import dataclass, field

from .harness import ALL_ARCHITECTURES, DEFAULT_VALUES, Architecture, SweepSpec
from .model import ScenarioConfig, mw_to_dbm
from .position_opt import PSOConfig

# optional linear alternative to noise_dbm; 0.0 means "not given"
NOISE_MW_KEY = "noise_power_mw"

# CLI axis name -> harness axis
AXES = {"rate": "rate", "beampattern": "beampattern_gain", "lqr": "lqr_cost"}

# defaults stated with the case study's numerical setup
CASE_STUDY_KEYS = {
    ("scenario", "num_users"), ("scenario", "num_targets"), ("scenario", "num_plants"),
    ("scenario", "num_antennas"), ("scenario", "noise_dbm"), ("scenario", "ref_gain_db"),
    ("scenario", "rate_req"), ("scenario", "beampattern_dbm"), ("scenario", "lqr_cost_max"),
    ("scenario", "region_wavelengths"), ("scenario", "large_region_wavelengths"),
}

SYMBOLS = {
    "num_users": "K", "num_targets": "M", "num_plants": "N", "num_antennas": "Tx",
    "noise_dbm": "σ²", NOISE_MW_KEY: "σ²", "ref_gain_db": "g0", "rate_req": "R_min", "beampattern_dbm": "Γ",
    "lqr_cost_max": "J_max", "wavelength": "λ", "min_spacing_wavelengths": "D_min",
    "kappa": "κ", "pathloss_exponent": "α",
}

RUN_DEFAULTS = {"seed": 0, "output_dir": "results", "plot": False}
SWEEP_DEFAULTS = {"axis": "rate", "values": (), "architectures": tuple(a.value for a in ALL_ARCHITECTURES),
                  "num_seeds": 10}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("\n".join(problems))
        self.problems = problems


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    pso: PSOConfig = field(default_factory=PSOConfig)
    axis: str = "rate"
    values: tuple[float, ...] = ()
    architectures: tuple[str, ...] = SWEEP_DEFAULTS["architectures"]
    num_seeds: int = 10
    seed: int = 0
    output_dir: str = "results"
    plot: bool = False
    # (section, key) -> "PAPER" | "DEFAULT" | "CONFIG" | "FLAG"
    provenance: dict = field(default_factory=dict)

    def sweep_spec(self, axis: str | None = None) -> SweepSpec:
        harness_axis = AXES[axis or self.axis]
        values = self.values if self.values and (axis is None or axis == self.axis) else DEFAULT_VALUES[harness_axis]
        return SweepSpec(harness_axis, tuple(values), tuple(Architecture(a) for a in self.architectures),
                         self.num_seeds, self.scenario, self.pso, self.seed)

    def effective(self) -> list[tuple[str, str, object, str]]:
        """(section, key, value, provenance) for every setting, defaults included."""
        rows = []
        for f in dataclasses.fields(self.scenario):
            rows.append(("scenario", f.name, getattr(self.scenario, f.name)))
        for f in dataclasses.fields(self.pso):
            rows.append(("pso", f.name, getattr(self.pso, f.name)))
        for key in SWEEP_DEFAULTS:
            rows.append(("sweep", key, getattr(self, key)))
        for key in RUN_DEFAULTS:
            rows.append(("run", key, getattr(self, key)))
        return [(s, k, v, self.provenance.get((s, k), _default_tag(s, k))) for s, k, v in rows]


def _default_tag(section: str, key: str) -> str:
    return "PAPER" if (section, key) in CASE_STUDY_KEYS else "DEFAULT"


def _schema() -> dict[str, dict[str, object]]:
    return {
        "scenario": {**{f.name: f.default for f in dataclasses.fields(ScenarioConfig)}, NOISE_MW_KEY: 0.0},
        "pso": {f.name: f.default for f in dataclasses.fields(PSOConfig)},
        "sweep": dict(SWEEP_DEFAULTS),
        "run": dict(RUN_DEFAULTS),
    }


def _coerce(raw: str, default):
    raw = raw.strip()
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int) and not isinstance(default, float):
        return int(raw, 0)
    if isinstance(default, float):
        value = float(raw)
        if math.isnan(value):
            raise ValueError("NaN is not allowed")
        return value
    if isinstance(default, tuple):
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    return raw


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, ""), no)
            continue
        key = re.split(r"[=:]", stripped, maxsplit=1)[0].strip()
        if section is not None:
            lines.setdefault((section, key), no)
    return lines


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse config text (may be empty) plus CLI overrides into a RunConfig.

    Raises ConfigError listing every violation found.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}".replace("\n", " ")]) from exc

    schema = _schema()
    where = _line_numbers(text)
    problems: list[str] = []
    values = {section: dict(keys) for section, keys in schema.items()}
    provenance = {}

    for section in parser.sections():
        if section not in schema:
            problems.append(f"line {where.get((section, ''), '?')}: unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            line = where.get((section, key), "?")
            if key not in schema[section]:
                problems.append(f"line {line}: unknown key '{key}' in [{section}]")
                continue
            try:
                values[section][key] = _coerce(raw, schema[section][key])
                provenance[(section, key)] = "CONFIG"
            except ValueError as exc:
                problems.append(f"line {line}: [{section}] {key}: {exc}")

    for (section, key), value in (overrides or {}).items():
        values[section][key] = value
        provenance[(section, key)] = "FLAG"

    scen = values["scenario"]
    noise_mw = scen.pop(NOISE_MW_KEY)
    if ("scenario", NOISE_MW_KEY) in provenance:
        if noise_mw > 0 and math.isfinite(noise_mw):
            scen["noise_dbm"] = mw_to_dbm(noise_mw)
            provenance[("scenario", "noise_dbm")] = provenance.pop(("scenario", NOISE_MW_KEY))
        else:
            problems.append(f"line {where.get(('scenario', NOISE_MW_KEY), '-')}: [scenario] "
                            f"{NOISE_MW_KEY} (σ²): noise power must be positive and finite")
    scenario = ScenarioConfig(**scen)
    for name, why in scenario.violations():
        sym = f" ({SYMBOLS[name]})" if name in SYMBOLS else ""
        problems.append(f"line {where.get(('scenario', name), '-')}: [scenario] {name}{sym}: {why}")
    pso = PSOConfig(**values["pso"])
    for name, why in pso.violations():
        problems.append(f"line {where.get(('pso', name), '-')}: [pso] {name}: {why}")

    sweep = values["sweep"]
    if sweep["axis"] not in AXES:
        problems.append(f"line {where.get(('sweep', 'axis'), '-')}: [sweep] axis: must be one of "
                        f"{', '.join(AXES)}")
    try:
        sweep["values"] = tuple(float(v) for v in sweep["values"])
        if any(b <= a for a, b in zip(sweep["values"], sweep["values"][1:])):
            raise ValueError("must be strictly increasing")
    except ValueError as exc:
        problems.append(f"line {where.get(('sweep', 'values'), '-')}: [sweep] values: {exc}")
    known = {a.value for a in Architecture}
    aliases = {"FA5": "FA(5λ)", "FA10": "FA(10λ)"}
    archs = tuple(aliases.get(a, a) for a in sweep["architectures"])
    bad = [a for a in archs if a not in known]
    if bad or not archs:
        problems.append(f"line {where.get(('sweep', 'architectures'), '-')}: [sweep] architectures: "
                        f"unknown {bad or 'empty list'}; expected FPA, FA5, FA10")
    if not isinstance(sweep["num_seeds"], int) or sweep["num_seeds"] < 1:
        problems.append(f"line {where.get(('sweep', 'num_seeds'), '-')}: [sweep] num_seeds: must be >= 1")
    run = values["run"]
    if not 0 <= run["seed"] < 2 ** 64:
        problems.append(f"line {where.get(('run', 'seed'), '-')}: [run] seed: must be an unsigned 64-bit integer")

    if problems:
        raise ConfigError(problems)
    return RunConfig(scenario, pso, sweep["axis"], sweep["values"], archs, sweep["num_seeds"],
                     run["seed"], run["output_dir"], run["plot"], provenance)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    text = ""
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError([f"cannot read config {path}: {exc.strerror}"]) from exc
    return parse_config(text, overrides)
