# Constant-stepsize SGD on data shards, one-shot averaging across nodes, and
# the companion error recursions whose sum reproduces the centered estimate
# exactly (used for the empirical bias/variance split).
#
# Indexing convention: iterate t has seen samples 1..t-1, so iterate 1 is the
# initial point and sample t updates iterate t into iterate t+1.  Averages run
# over iterate indices 1..N for a shard of N samples; the final iterate N+1 is
# reported separately and never enters an average.

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import generator
from .spectra import (Dataset, ProblemInstance, draw_covariates, draw_noise,
                      response_products, split_dataset)

AVERAGING_MODES = ("full", "tail", "last_iterate")


class DivergenceError(RuntimeError):
    """A recursion produced a non-finite iterate.

    ``step`` is the 1-based sample index at which divergence was detected;
    ``count`` (optional) is the number of divergent replicates when raised by
    a Monte Carlo driver.
    """

    def __init__(self, message: str, step: int = 0, count: int = 0):
        super().__init__(message)
        self.step = step
        self.count = count


@dataclass(frozen=True)
class SgdConfig:
    """Stepsize, iterate averaging mode and initial point.

    averaging is one of ``"full"`` (mean of iterates 1..N), ``"tail"`` (mean
    of iterates floor(f*N)+1 .. N with f = tail_fraction) or
    ``"last_iterate"`` (iterate N+1).  The initial point defaults to zero.
    """

    stepsize: float
    averaging: str = "full"
    tail_fraction: float = 0.5
    initial_point: np.ndarray | None = None

    def __post_init__(self):
        if not (np.isfinite(self.stepsize) and self.stepsize > 0):
            raise ValueError("stepsize must be a positive real")
        if self.averaging not in AVERAGING_MODES:
            raise ValueError(f"averaging must be one of {AVERAGING_MODES}")
        if not (0.0 < self.tail_fraction < 1.0):
            raise ValueError("tail_fraction must lie in (0, 1)")
        if self.initial_point is not None:
            w0 = np.array(self.initial_point, dtype=float)
            w0.setflags(write=False)
            object.__setattr__(self, "initial_point", w0)

    def initial(self, d: int) -> np.ndarray:
        if self.initial_point is None:
            return np.zeros(d)
        if self.initial_point.shape != (d,):
            raise ValueError("initial_point dimension mismatch")
        return self.initial_point.copy()

    def describe_averaging(self) -> str:
        if self.averaging == "tail":
            return f"tail({self.tail_fraction:g})"
        return self.averaging


@dataclass(frozen=True)
class EstimatorOutput:
    """Coefficient vector in the eigenbasis plus provenance."""

    coefficients: np.ndarray
    kind: str                      # "dsgd" | "drr" | "dols"
    averaging: str | None
    node_count: int
    last_iterate: np.ndarray | None = None


def _tail_start(n: int, config: SgdConfig) -> int:
    # Number of leading iterates excluded from the average (0 for "full").
    if config.averaging == "tail":
        return int(math.floor(config.tail_fraction * n))
    return 0


def mean_rows(rows) -> np.ndarray:
    """Running mean of a sequence of vectors.

    Exactly reproduces a constant sequence (a plain sum would pick up one
    rounding per addition), which keeps fixed-point identities bitwise.
    """
    mean = None
    for count, row in enumerate(rows, start=1):
        if mean is None:
            mean = np.array(row, dtype=float)
        else:
            mean += (row - mean) / count
    if mean is None:
        raise ValueError("cannot average an empty sequence")
    return mean


def _sgd_shard(x: np.ndarray, y: np.ndarray, gamma: float, w0: np.ndarray,
               avg_start: int) -> tuple[np.ndarray, np.ndarray]:
    """One pass of the recursion over a shard.

    Returns (mean of iterates avg_start+1..N, final iterate N+1).  Raises
    DivergenceError as soon as a residual stops being finite.
    """
    n = x.shape[0]
    w = w0.copy()
    mean = np.zeros_like(w)
    count = 0
    for t in range(n):
        if t >= avg_start:
            count += 1
            mean += (w - mean) / count
        xt = x[t]
        resid = float(w @ xt) - y[t]
        if not math.isfinite(resid):
            raise DivergenceError(f"non-finite iterate at step {t + 1}", step=t + 1)
        w = w - gamma * resid * xt
    if not np.all(np.isfinite(w)):
        raise DivergenceError(f"non-finite iterate at step {n}", step=n)
    return mean, w


def run_local_sgd(shard: Dataset, config: SgdConfig) -> EstimatorOutput:
    """Run the constant-stepsize recursion over one shard.

    With N samples the iterates are w_1 (initial) through w_{N+1}; the
    returned coefficients are the configured average of w_1..w_N (or w_{N+1}
    for last-iterate mode).  Deterministic given the shard.
    """
    if shard.n == 0:
        raise ValueError("shard must be nonempty")
    w0 = config.initial(shard.d)
    avg, last = _sgd_shard(shard.covariates, shard.responses, config.stepsize,
                           w0, _tail_start(shard.n, config))
    coeff = last if config.averaging == "last_iterate" else avg
    return EstimatorOutput(
        coefficients=coeff,
        kind="dsgd",
        averaging=config.describe_averaging(),
        node_count=1,
        last_iterate=last,
    )


def run_dsgd(data: Dataset, node_count: int, config: SgdConfig) -> EstimatorOutput:
    """One-shot averaged SGD: split, run locally, average the local outputs."""
    shards = split_dataset(data, node_count)
    locals_ = [run_local_sgd(shard, config) for shard in shards]
    coeff = mean_rows(out.coefficients for out in locals_)
    last = mean_rows(out.last_iterate for out in locals_)
    return EstimatorOutput(
        coefficients=coeff,
        kind="dsgd",
        averaging=config.describe_averaging(),
        node_count=node_count,
        last_iterate=last,
    )


# ---------------------------------------------------------------------------
# Error-path recursions
# ---------------------------------------------------------------------------
#
# Centered iterate:  e_t = w_t - w_opt, e_{t+1} = e_t - g*(e_t.x)x + g*eps*x.
# Drift path:        b_1 = w_1 - w_opt, b_{t+1} = b_t - g*(b_t.x)x.
# Noise path:        v_1 = 0,           v_{t+1} = v_t - g*(v_t.x)x + g*eps*x.
# By construction e_t = b_t + v_t for every t, exactly.


def _bias_shard(x: np.ndarray, gamma: float, b0: np.ndarray,
                avg_start: int) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[0]
    b = b0.copy()
    mean = np.zeros_like(b)
    count = 0
    for t in range(n):
        if t >= avg_start:
            count += 1
            mean += (b - mean) / count
        xt = x[t]
        proj = float(b @ xt)
        if not math.isfinite(proj):
            raise DivergenceError(f"non-finite iterate at step {t + 1}", step=t + 1)
        b = b - gamma * proj * xt
    return mean, b


def _variance_shard(x: np.ndarray, eps: np.ndarray, gamma: float,
                    avg_start: int) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[0]
    v = np.zeros(x.shape[1])
    mean = np.zeros_like(v)
    count = 0
    for t in range(n):
        if t >= avg_start:
            count += 1
            mean += (v - mean) / count
        xt = x[t]
        proj = float(v @ xt)
        if not math.isfinite(proj):
            raise DivergenceError(f"non-finite iterate at step {t + 1}", step=t + 1)
        v = v - gamma * proj * xt + gamma * eps[t] * xt
    return mean, v


def _aggregate_paths(per_node: list[tuple[np.ndarray, np.ndarray]],
                     mode: str) -> np.ndarray:
    index = 1 if mode == "last_iterate" else 0
    return mean_rows(pair[index] for pair in per_node)


def _shard_bounds(n: int, node_count: int) -> list[tuple[int, int]]:
    size = n // node_count
    return [(m * size, (m + 1) * size) for m in range(node_count)]


def simulate_bias_paths(instance: ProblemInstance, n: int, node_count: int,
                        config: SgdConfig, replicates: int, seed) -> np.ndarray:
    """Aggregated drift vectors, one row per replicate.

    Per replicate and node, the drift recursion starts at w_1 - w_opt and is
    contracted by freshly sampled covariates (no responses involved); the row
    is the node mean of the configured iterate average.  In expectation each
    step multiplies the drift by (I - stepsize * H) coordinatewise.
    """
    if int(replicates) != replicates or replicates < 1:
        raise ValueError("replicates must be a positive integer")
    if node_count > n:
        raise ValueError("node_count must not exceed n")
    b0 = config.initial(instance.d) - instance.target
    shard_n = n // node_count
    start = _tail_start(shard_n, config)
    out = np.empty((replicates, instance.d))
    for rep in range(replicates):
        x = draw_covariates(instance, n, generator(seed, rep, 0))
        per_node = [
            _bias_shard(x[lo:hi], config.stepsize, b0, start)
            for lo, hi in _shard_bounds(n, node_count)
        ]
        out[rep] = _aggregate_paths(per_node, config.averaging)
    return out


def simulate_variance_paths(instance: ProblemInstance, n: int, node_count: int,
                            config: SgdConfig, replicates: int, seed) -> np.ndarray:
    """Aggregated noise-accumulation vectors, one row per replicate.

    The noise path starts at zero and is driven by the per-sample noise; it
    has zero mean at every step.  Rows are node means of the configured
    iterate average, using the same covariate streams as
    ``simulate_bias_paths`` for a given seed.
    """
    if int(replicates) != replicates or replicates < 1:
        raise ValueError("replicates must be a positive integer")
    if node_count > n:
        raise ValueError("node_count must not exceed n")
    shard_n = n // node_count
    start = _tail_start(shard_n, config)
    out = np.empty((replicates, instance.d))
    for rep in range(replicates):
        x = draw_covariates(instance, n, generator(seed, rep, 0))
        eps = draw_noise(instance, n, generator(seed, rep, 1))
        per_node = [
            _variance_shard(x[lo:hi], eps[lo:hi], config.stepsize, start)
            for lo, hi in _shard_bounds(n, node_count)
        ]
        out[rep] = _aggregate_paths(per_node, config.averaging)
    return out


@dataclass(frozen=True)
class DecompositionPaths:
    """Shared-stream drift, noise and estimate rows (one per replicate)."""

    bias: np.ndarray       # (replicates, d)
    variance: np.ndarray   # (replicates, d)
    estimate: np.ndarray   # (replicates, d) aggregated SGD coefficients


def simulate_decomposition(instance: ProblemInstance, n: int, node_count: int,
                           config: SgdConfig, replicates: int, seed) -> DecompositionPaths:
    """Run the estimate, drift and noise recursions on shared random streams.

    For every replicate the three recursions consume identical covariate and
    noise draws, so ``estimate - target == bias + variance`` up to
    floating-point associativity.
    """
    if int(replicates) != replicates or replicates < 1:
        raise ValueError("replicates must be a positive integer")
    if node_count > n:
        raise ValueError("node_count must not exceed n")
    w0 = config.initial(instance.d)
    b0 = w0 - instance.target
    shard_n = n // node_count
    start = _tail_start(shard_n, config)
    bias = np.empty((replicates, instance.d))
    var = np.empty((replicates, instance.d))
    est = np.empty((replicates, instance.d))
    for rep in range(replicates):
        x = draw_covariates(instance, n, generator(seed, rep, 0))
        eps = draw_noise(instance, n, generator(seed, rep, 1))
        y = response_products(x, instance.target) + eps
        w_node, b_node, v_node = [], [], []
        for lo, hi in _shard_bounds(n, node_count):
            w_node.append(_sgd_shard(x[lo:hi], y[lo:hi], config.stepsize, w0, start))
            b_node.append(_bias_shard(x[lo:hi], config.stepsize, b0, start))
            v_node.append(_variance_shard(x[lo:hi], eps[lo:hi], config.stepsize, start))
        est[rep] = _aggregate_paths(w_node, config.averaging)
        bias[rep] = _aggregate_paths(b_node, config.averaging)
        var[rep] = _aggregate_paths(v_node, config.averaging)
    return DecompositionPaths(bias=bias, variance=var, estimate=est)
