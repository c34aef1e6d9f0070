import math

import numpy as np
import pytest

from fa_lawn.harness import (ALL_ARCHITECTURES, CSV_COLUMNS, Architecture, InvalidSpec, SweepRow,
                             SweepSpec, SweepTable, csv_filename, emit_csv, read_csv, run_comparison,
                             run_point, run_sweep)
from fa_lawn.model import ScenarioConfig, sample_scenario
from fa_lawn.position_opt import PSOConfig

SMALL = ScenarioConfig(num_users=2, num_targets=1, num_plants=1, num_antennas=4)
FAST = PSOConfig(swarm_size=4, iterations=2)


def test_zero_requirements_cost_nothing():
    cfg = SMALL.replace(rate_req=0.0, num_targets=0, num_plants=0)
    s = sample_scenario(cfg, 0)
    for arch in ALL_ARCHITECTURES:
        assert run_point(s, arch, FAST).power == 0.0


def test_architecture_ordering_and_determinism():
    s = sample_scenario(SMALL, 4)
    first = run_comparison(s, SMALL, pso=FAST)
    again = run_comparison(s, SMALL, pso=FAST)
    fpa, fa5, fa10 = (first[a].power for a in ALL_ARCHITECTURES)
    assert fa10 <= fa5 <= fpa
    assert [r.power for r in first.values()] == [r.power for r in again.values()]


def test_sweep_single_point_matches_run_point():
    spec = SweepSpec("rate", [1.0], num_seeds=1, base_config=SMALL, pso=FAST)
    table = run_sweep(spec)
    s = sample_scenario(SMALL.replace(rate_req=1.0), 0)
    direct = run_comparison(s, SMALL, pso=FAST)
    for arch in ALL_ARCHITECTURES:
        assert table.row(1.0, arch).mean_dBm == pytest.approx(10 * math.log10(direct[arch].power))
        assert table.row(1.0, arch).std_dBm == 0.0


def test_rate_trend_under_common_random_numbers():
    spec = SweepSpec("rate", [1, 2, 3], (Architecture.FPA,), num_seeds=2, base_config=SMALL, pso=FAST)
    means = [r.mean_dBm for r in run_sweep(spec).series("FPA")]
    assert all(b >= a - 0.3 for a, b in zip(means, means[1:]))


def test_per_seed_monotone_along_lqr_axis():
    spec = SweepSpec("lqr_cost", [2.645, 10.58, 21.16], num_seeds=1, base_config=SMALL, pso=FAST)
    table = run_sweep(spec)
    for arch in ALL_ARCHITECTURES:
        pts = sorted((p.value, p.power) for p in table.points if p.architecture == arch.value)
        assert all(b <= a for (_, a), (_, b) in zip(pts, pts[1:]))


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        SweepSpec("snr", [1.0])
    with pytest.raises(InvalidSpec):
        SweepSpec("rate", [2.0, 1.0])
    assert SweepSpec("lqr_cost", [1.0, 2.0]).easy_to_hard() == (2.0, 1.0)


def test_csv_round_trip_and_bytes(tmp_path):
    rows = [SweepRow("rate", 0.5, "FPA", 8.0791234567, 0.123456789, 1.0),
            SweepRow("rate", 0.5, "FA(5λ)", math.nan, math.nan, 0.0)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(SweepTable(rows), a)
    emit_csv(SweepTable(rows), b)
    assert a.read_bytes() == b.read_bytes()
    back = read_csv(a).rows
    assert back[0].mean_dBm == pytest.approx(8.07912, rel=1e-6)
    assert math.isnan(back[1].mean_dBm) and back[1].architecture == "FA(5λ)"


def test_empty_table_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    emit_csv(SweepTable([]), path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_csv_filename():
    assert csv_filename("rate") == "sweep_rate.csv"
    assert csv_filename("rate", "20260101-000000") == "sweep_rate_20260101-000000.csv"
