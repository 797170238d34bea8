"""Hybrid active/passive radio SLAM (C++ core)."""

from ._core import (
    ConfigError,
    DegenerateGeometryError,
    ExperimentConfig,
    GaussianVrp,
    NoPeakError,
    Rsp,
    SignalConfig,
    distance_crlb,
    estimate_distance,
    exact_fisher_info,
    load_config,
    mae,
    mirror_across_line,
    noise_var_for_snr,
    ospa,
    parse_config,
    run,
    run_experiment,
    simulate_echo,
    snr,
    va_from_pa,
    vrp_from_pa_va,
    vrp_from_rsps,
    vrp_from_two_rsps,
)

__all__ = [name for name in dir() if not name.startswith("_")]
