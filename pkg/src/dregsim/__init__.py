"""dregsim: one-shot distributed SGD and ridge regression laboratory.

A numpy library for simulating divide-and-conquer estimators in random-design
linear regression (averaged constant-stepsize SGD, ridge, minimum-norm least
squares), estimating their excess risk by Monte Carlo, splitting it into bias
and variance, and evaluating the matching closed-form bounds.  The
``dregsim.harness`` subpackage adds config-driven experiment sweeps with CSV
and SVG output plus the ``dregsim`` command line tool.
"""

from .bounds import (BoundConstants, BoundReport, HypothesisViolationError,
                     RatePrediction, SampleComplexityConstants,
                     drr_lower_bound, dsgd_lower_bound, dsgd_upper_bound,
                     effective_dim_rr, effective_dim_sgd,
                     sample_complexity_constants, sc_condition_check,
                     tail_dsgd_upper_bound, theoretical_rate,
                     variance_functional)
from .ridge import (RidgeConfig, SingularGramError, dols, local_ridge,
                    local_ridge_path, run_dols, run_drr)
from .risk import (DecompositionSamples, EstimatorSpec, RiskReport,
                   bias_variance_samples, excess_risk_exact, mc_bias_variance,
                   mc_excess_risk, stepsize_is_stable)
from .sgd import (DecompositionPaths, DivergenceError, EstimatorOutput,
                  SgdConfig, run_dsgd, run_local_sgd, simulate_bias_paths,
                  simulate_decomposition, simulate_variance_paths)
from .spectra import (Dataset, ProblemInstance, Spectrum,
                      build_polynomial_spectrum, build_spiked_spectrum,
                      power_law_instance, power_law_target, sample_dataset,
                      split_dataset, split_discard_count)

__version__ = "0.1.0"

__all__ = [
    "BoundConstants", "BoundReport", "HypothesisViolationError",
    "RatePrediction", "SampleComplexityConstants", "Dataset",
    "DecompositionPaths", "DecompositionSamples", "DivergenceError",
    "EstimatorOutput", "EstimatorSpec", "ProblemInstance", "RidgeConfig",
    "RiskReport", "SgdConfig", "SingularGramError", "Spectrum",
    "bias_variance_samples", "build_polynomial_spectrum",
    "build_spiked_spectrum", "dols", "drr_lower_bound", "dsgd_lower_bound",
    "dsgd_upper_bound", "effective_dim_rr", "effective_dim_sgd",
    "excess_risk_exact", "local_ridge", "local_ridge_path",
    "mc_bias_variance", "mc_excess_risk", "power_law_instance",
    "power_law_target", "run_dols", "run_drr", "run_dsgd", "run_local_sgd",
    "sample_complexity_constants", "sample_dataset", "sc_condition_check",
    "simulate_bias_paths", "simulate_decomposition",
    "simulate_variance_paths", "split_dataset", "split_discard_count",
    "stepsize_is_stable", "tail_dsgd_upper_bound", "theoretical_rate",
    "variance_functional",
]
