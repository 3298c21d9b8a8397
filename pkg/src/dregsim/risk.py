# Exact excess-risk evaluation in the eigenbasis and Monte Carlo estimation
# over replicated datasets, including the empirical bias/variance split.

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .rng import child_sequence
from .ridge import RidgeConfig, run_dols, run_drr
from .sgd import (DivergenceError, EstimatorOutput, SgdConfig, run_dsgd,
                  simulate_decomposition)
from .spectra import Dataset, ProblemInstance, sample_dataset

_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RiskReport:
    """Monte Carlo excess risk with standard error and optional split."""

    excess_risk_mean: float
    excess_risk_stderr: float
    replicates: int
    bias_mc: float | None = None
    variance_mc: float | None = None
    cross_mc: float | None = None
    diverged: int = 0


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator a Monte Carlo run should fit on every dataset."""

    kind: str                        # "dsgd" | "drr" | "dols"
    sgd: SgdConfig | None = None
    ridge: RidgeConfig | None = None

    def __post_init__(self):
        if self.kind not in ("dsgd", "drr", "dols"):
            raise ValueError("kind must be 'dsgd', 'drr' or 'dols'")
        if self.kind == "dsgd" and self.sgd is None:
            raise ValueError("dsgd spec requires an SgdConfig")
        if self.kind == "drr" and self.ridge is None:
            raise ValueError("drr spec requires a RidgeConfig")

    def fit(self, data: Dataset, node_count: int) -> EstimatorOutput:
        if self.kind == "dsgd":
            return run_dsgd(data, node_count, self.sgd)
        if self.kind == "drr":
            return run_drr(data, node_count, self.ridge)
        return run_dols(data, node_count)


def excess_risk_exact(estimate, instance: ProblemInstance) -> float:
    """Population excess risk: half the spectrum-weighted squared error.

    Accepts an EstimatorOutput or a bare coefficient vector.
    """
    coeff = estimate.coefficients if isinstance(estimate, EstimatorOutput) else np.asarray(estimate, dtype=float)
    if coeff.shape != (instance.d,):
        raise ValueError("estimate dimension does not match the instance")
    diff = coeff - instance.target
    return 0.5 * float(instance.spectrum.eigenvalues @ (diff * diff))


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    # Unbiased sample variance; numpy reductions use pairwise summation, so
    # the result does not depend on worker scheduling for a fixed order.
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(values.size))
    return mean, stderr


def stepsize_is_stable(instance: ProblemInstance, stepsize: float, tau: float = 3.0) -> bool:
    """Advisory check: stepsize below 1 / (tau * trace)."""
    return stepsize * tau * instance.spectrum.trace < 1.0


def mc_excess_risk(instance: ProblemInstance, n: int, node_count: int,
                   estimator: EstimatorSpec, replicates: int, seed,
                   replicate_seeds=None) -> RiskReport:
    """Monte Carlo excess risk of an estimator over independent datasets.

    Draws ``replicates`` datasets from per-replicate derived streams, fits the
    estimator on each and averages the exact excess risk.  Divergent
    replicates are dropped and counted; the run aborts when more than half
    diverge.  ``replicate_seeds`` overrides the per-replicate seed derivation
    (mainly for reproduction and tests).

    Returns a RiskReport whose ``replicates`` is the number of retained runs.
    """
    if int(replicates) != replicates or replicates < 2:
        raise ValueError("replicates must be an integer >= 2")
    if estimator.kind == "dsgd" and not stepsize_is_stable(instance, estimator.sgd.stepsize):
        warnings.warn(
            "stepsize exceeds the 1/(tau*trace) stability guideline; "
            "running anyway", RuntimeWarning, stacklevel=2)
    base = child_sequence(seed)
    risks = []
    diverged = 0
    first_failure: DivergenceError | None = None
    for rep in range(int(replicates)):
        rep_seed = replicate_seeds[rep] if replicate_seeds is not None \
            else child_sequence(base, rep)
        data = sample_dataset(instance, n, rep_seed)
        try:
            out = estimator.fit(data, node_count)
        except DivergenceError as err:
            diverged += 1
            first_failure = first_failure or err
            continue
        risks.append(excess_risk_exact(out, instance))
    if diverged > replicates / 2 or len(risks) < 2:
        raise DivergenceError(
            f"{diverged} of {replicates} replicates diverged",
            step=first_failure.step if first_failure else 0,
            count=diverged,
        )
    if diverged:
        _log.info("mc_excess_risk: dropped %d divergent replicates", diverged)
    mean, stderr = _mean_stderr(np.asarray(risks))
    return RiskReport(excess_risk_mean=mean, excess_risk_stderr=stderr,
                      replicates=len(risks), diverged=diverged)


@dataclass(frozen=True)
class DecompositionSamples:
    """Per-replicate risk split from shared-stream path simulation.

    ``risk`` is computed from the aggregated estimate itself, so
    ``risk = bias + variance + cross`` holds replicate by replicate up to
    floating-point associativity.
    """

    bias: np.ndarray
    variance: np.ndarray
    cross: np.ndarray
    risk: np.ndarray


def bias_variance_samples(instance: ProblemInstance, n: int, node_count: int,
                          config: SgdConfig, replicates: int, seed) -> DecompositionSamples:
    """Simulate shared-stream paths and reduce them to per-replicate scalars."""
    paths = simulate_decomposition(instance, n, node_count, config, replicates, seed)
    lam = instance.spectrum.eigenvalues
    bias = 0.5 * (paths.bias**2 @ lam)
    variance = 0.5 * (paths.variance**2 @ lam)
    cross = (paths.bias * paths.variance) @ lam
    centered = paths.estimate - instance.target
    risk = 0.5 * (centered**2 @ lam)
    return DecompositionSamples(bias=bias, variance=variance, cross=cross, risk=risk)


def mc_bias_variance(instance: ProblemInstance, n: int, node_count: int,
                     config: SgdConfig, replicates: int, seed) -> RiskReport:
    """Monte Carlo bias/variance split of the averaged SGD excess risk.

    Requires well-specified noise (independent Gaussian responses around the
    target inner product), under which the expected risk is exactly the sum
    of the bias and variance components and the cross term vanishes in
    expectation.
    """
    if int(replicates) != replicates or replicates < 2:
        raise ValueError("replicates must be an integer >= 2")
    samples = bias_variance_samples(instance, n, node_count, config, replicates, seed)
    mean, stderr = _mean_stderr(samples.risk)
    return RiskReport(
        excess_risk_mean=mean,
        excess_risk_stderr=stderr,
        replicates=int(replicates),
        bias_mc=float(np.mean(samples.bias)),
        variance_mc=float(np.mean(samples.variance)),
        cross_mc=float(np.mean(samples.cross)),
    )
