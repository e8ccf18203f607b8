"""Experiment orchestration: configs, Monte Carlo engine, replicas, reports, CLI."""

from .config import ExperimentConfig, load_config, parse_config_text
from .engine import (BerCurve, BerPoint, PaprCell, calibrate_noise, run_ber_sweep, run_ber_sweeps,
                     run_nonlinear_ber, run_papr_campaign)
from .figures import FIGURES, get_replica

__all__ = [
    "BerCurve", "BerPoint", "ExperimentConfig", "FIGURES", "PaprCell", "calibrate_noise", "get_replica",
    "load_config", "parse_config_text", "run_ber_sweep", "run_ber_sweeps", "run_nonlinear_ber",
    "run_papr_campaign",
]
