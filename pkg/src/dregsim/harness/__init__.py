"""Config-driven experiment harness: sweeps, tuning, CSV/SVG output, CLI."""

from .config import (ConfigError, ExperimentConfig, config_hash, config_help,
                     parse_config, parse_config_text, validate_config)
from .datafiles import FeatureFileError, load_feature_file
from .output import (CSV_COLUMNS, ResultRow, emit_outputs, read_results,
                     rows_to_csv)
from .runner import (RateSlopeResult, run_bounds_overlay, run_experiment,
                     run_m_sweep, run_rate_slope, run_real_data,
                     run_sample_complexity)

__all__ = [
    "CSV_COLUMNS", "ConfigError", "ExperimentConfig", "FeatureFileError",
    "RateSlopeResult", "ResultRow", "config_hash", "config_help",
    "emit_outputs", "load_feature_file", "parse_config", "parse_config_text",
    "read_results", "rows_to_csv", "run_bounds_overlay", "run_experiment",
    "run_m_sweep", "run_rate_slope", "run_real_data",
    "run_sample_complexity", "validate_config",
]
