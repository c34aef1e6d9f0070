"""Transmit power minimization for a fluid-antenna base station serving
communication users, sensing targets and wirelessly controlled plants."""

from .beamforming import BeamformingSolution, InnerReport, InnerStatus, solve_inner, fpa_baseline
from .control import lossy_lqr_cost, min_success_prob
from .harness import Architecture, SweepSpec, run_sweep, emit_csv
from .model import ArrayGeometry, Scenario, ScenarioConfig, sample_scenario
from .position_opt import PSOConfig, pso_optimize

__all__ = [
    "ArrayGeometry", "Architecture", "BeamformingSolution", "InnerReport", "InnerStatus",
    "PSOConfig", "Scenario", "ScenarioConfig", "SweepSpec", "emit_csv", "fpa_baseline",
    "lossy_lqr_cost", "min_success_prob", "pso_optimize", "run_sweep", "sample_scenario",
    "solve_inner",
]
