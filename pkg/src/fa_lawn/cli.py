"""Command-line entry point: ``fa-lawn run|sweep|validate``.

Exit codes: 0 ok, 1 usage or config error, 2 nothing feasible.
"""
from __future__ import annotations

import argparse
import io
import logging
import os
import sys
import time

from .certify import constraint_margins
from .config import AXES, SYMBOLS, ConfigError, RunConfig, load_config
from .harness import ALL_ARCHITECTURES, Architecture, CsvWriteError, emit_csv, csv_filename, run_comparison, run_sweep
from .model import mw_to_dbm, sample_scenario
from .svgplot import write_svg

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for infeasibility here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style config file (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp from output file names")

    parser = _Parser(prog="fa-lawn", description="Fluid-antenna transmit power minimization")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="solve one scenario for every architecture")
    sweep = sub.add_parser("sweep", parents=[common], help="seeded sweep over one requirement axis")
    sweep.add_argument("--axis", choices=sorted(AXES), help="requirement to sweep")
    sweep.add_argument("--plot", action="store_true", help="also write an SVG chart")
    sub.add_parser("validate", parents=[common], help="check a config and print the effective settings")
    return parser


def worker_count() -> int:
    raw = os.environ.get("FA_LAWN_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out[("run", "seed")] = args.seed
    if args.out is not None:
        out[("run", "output_dir")] = args.out
    if getattr(args, "axis", None) is not None:
        out[("sweep", "axis")] = args.axis
    if getattr(args, "plot", False):
        out[("run", "plot")] = True
    return out


def _stamp(no_timestamp: bool) -> str | None:
    return None if no_timestamp else time.strftime("%Y%m%d-%H%M%S")


def format_effective(cfg: RunConfig) -> str:
    lines = []
    for section, key, value, tag in cfg.effective():
        sym = f" ({SYMBOLS[key]})" if key in SYMBOLS and section == "scenario" else ""
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value) or "(axis default)"
        lines.append(f"{section}.{key}{sym} = {value} [{tag}]")
    return "\n".join(lines) + "\n"


def format_run_report(cfg: RunConfig, scenario, results: dict) -> str:
    buf = io.StringIO()
    w = buf.write
    w(f"seed: {cfg.seed}\n")
    w(f"users K={len(scenario.users)}, targets M={len(scenario.targets)}, plants N={len(scenario.plants)}, "
      f"antennas Tx={scenario.num_antennas}\n\n")
    for arch, res in results.items():
        w(f"== {arch.value} ==\n")
        if res.power is None:
            w("status: infeasible\n\n")
            continue
        w(f"power: {res.power:.6g} mW ({mw_to_dbm(res.power):.4f} dBm)\n")
        w(f"SCA iterations: {res.sca_iterations}, PSO evaluations: {res.evaluations}\n")
        w(f"region side: {res.geometry.region_side:.6g} m\n")
        w("positions (x, y) in wavelengths:\n")
        for i, (x, y) in enumerate(res.geometry.positions / scenario.wavelength):
            w(f"  {i:2d}: {x:9.5f} {y:9.5f}\n")
        margins = constraint_margins(res.solution, res.geometry, scenario)
        for label, vals in (("comm", margins.comm), ("control", margins.control), ("sensing", margins.sensing)):
            if vals:
                w(f"{label} margins (relative): " + " ".join(f"{m:.3e}" for m in vals) + "\n")
        w(f"worst margin: {margins.worst:.3e}\n\n")
    feasible = [r.power for r in results.values() if r.power is not None]
    order = [results[a].power for a in reversed(ALL_ARCHITECTURES) if a in results]
    if len(feasible) == len(order) and len(order) > 1:
        ok = all(a <= b for a, b in zip(order, order[1:]))
        w(f"ordering {' <= '.join(a.value for a in reversed(ALL_ARCHITECTURES) if a in results)}: "
          f"{'holds' if ok else 'VIOLATED'}\n")
    return buf.getvalue()


def _ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def cmd_validate(cfg: RunConfig) -> int:
    sys.stdout.write(format_effective(cfg))
    return EXIT_OK


def cmd_run(cfg: RunConfig, no_timestamp: bool = False, workers: int = 1) -> int:
    scenario = sample_scenario(cfg.scenario, cfg.seed)
    archs = tuple(Architecture(a) for a in cfg.architectures)
    results = run_comparison(scenario, cfg.scenario, archs, cfg.pso, workers=workers)
    report = format_run_report(cfg, scenario, results)
    _ensure_dir(cfg.output_dir)
    stamp = _stamp(no_timestamp)
    name = f"run_seed{cfg.seed}.txt" if stamp is None else f"run_seed{cfg.seed}_{stamp}.txt"
    path = os.path.join(cfg.output_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report)
    sys.stdout.write(report)
    print(f"report written to {path}")
    if all(r.power is None for r in results.values()):
        print("no architecture found a feasible solution", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, no_timestamp: bool = False, workers: int = 1) -> int:
    spec = cfg.sweep_spec()
    table = run_sweep(spec, workers=workers)
    _ensure_dir(cfg.output_dir)
    stamp = _stamp(no_timestamp)
    path = os.path.join(cfg.output_dir, csv_filename(spec.axis, stamp))
    emit_csv(table, path)
    print(f"{'value':>10} {'architecture':>12} {'mean dBm':>10} {'std dB':>8} {'feasible':>8}")
    for r in table.rows:
        flag = "  (flagged: feasible for < 50% of seeds)" if r.flagged else ""
        print(f"{r.value:>10g} {r.architecture:>12} {r.mean_dBm:>10.4f} {r.std_dBm:>8.4f} "
              f"{r.feasibility:>8.2f}{flag}")
    print(f"table written to {path}")
    if cfg.plot:
        svg = os.path.splitext(path)[0] + ".svg"
        write_svg(table, svg, title=f"{spec.axis} sweep, {spec.num_seeds} seeds")
        print(f"chart written to {svg}")
    if all(r.feasibility == 0 for r in table.rows):
        print("no sweep point was feasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "validate":
        return cmd_validate(cfg)
    workers = worker_count()
    try:
        if args.command == "run":
            return cmd_run(cfg, args.no_timestamp, workers)
        return cmd_sweep(cfg, args.no_timestamp, workers)
    except (CsvWriteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
