# Experiment drivers: node sweeps, bound tables, sample-complexity
# comparisons, rate-slope fits and real-data holdout runs.  Every grid cell
# derives its own random streams from the master seed, so results are
# identical for any worker count.

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..bounds import (BoundReport, HypothesisViolationError, drr_lower_bound,
                      dsgd_lower_bound, dsgd_upper_bound, effective_dim_rr,
                      effective_dim_sgd, tail_dsgd_upper_bound)
from ..ridge import RidgeConfig, local_ridge_path, run_dols, run_drr
from ..rng import child_sequence
from ..risk import EstimatorSpec, RiskReport, mc_excess_risk
from ..sgd import DivergenceError, SgdConfig, run_dsgd
from ..spectra import Dataset, ProblemInstance, sample_dataset, split_dataset
from .config import (ExperimentConfig, averaging_mode, build_instance,
                     config_hash, gamma_grid, lambda_grid, node_grid,
                     nodes_from_exponent)
from .datafiles import apply_scaler, load_feature_file, max_abs_scaler
from .output import ResultRow

_log = logging.getLogger(__name__)


def _node_sort_key(cell: tuple[float | None, int]) -> tuple[float, int]:
    beta, nodes = cell
    return (beta if beta is not None else -1.0, nodes)


def _parallel_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _experiment_id(cfg: ExperimentConfig) -> str:
    return f"{cfg.kind}-{config_hash(cfg)[:8]}"


def _single_gamma(cfg: ExperimentConfig, trace: float) -> float:
    if cfg.gamma is not None:
        return cfg.gamma[0]
    return 0.25 / trace


def _sgd_config(cfg: ExperimentConfig, stepsize: float) -> SgdConfig:
    return SgdConfig(stepsize=stepsize, averaging=averaging_mode(cfg),
                     tail_fraction=cfg.tail_fraction)


def _dsgd_bounds(instance: ProblemInstance, n: int, nodes: int, stepsize: float,
                 cfg: ExperimentConfig, mode: str) -> tuple[float | None, float | None, int]:
    """(upper, lower, effective dim) for the averaging mode, where proved."""
    constants = cfg.constants()
    k_star = effective_dim_sgd(instance.spectrum, n, nodes, stepsize)
    upper = lower = None
    try:
        if mode == "full":
            upper = dsgd_upper_bound(instance, n, nodes, stepsize, constants).total_upper
        elif mode == "tail":
            upper = tail_dsgd_upper_bound(instance, n, nodes, stepsize,
                                          constants=constants).total_upper
    except HypothesisViolationError:
        pass
    if mode == "full":
        lower = dsgd_lower_bound(instance, n, nodes, stepsize, constants).total_lower
    return upper, lower, k_star


# ---------------------------------------------------------------------------
# Node sweep
# ---------------------------------------------------------------------------

def run_m_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Risk of averaged SGD as a function of the node count, with bounds."""
    if cfg.kind != "m_sweep":
        raise ValueError("config kind must be m_sweep")
    n = cfg.n[0]
    exp_id = _experiment_id(cfg)
    mode = averaging_mode(cfg)
    cells = []
    for alpha in sorted(cfg.alpha):
        for beta, nodes in sorted(node_grid(cfg, n), key=_node_sort_key):
            cells.append((alpha, beta, nodes))

    def one_cell(indexed):
        idx, (alpha, beta, nodes) = indexed
        instance = build_instance(cfg, n, nodes, alpha)
        stepsize = _single_gamma(cfg, instance.spectrum.trace)
        upper, lower, k_star = _dsgd_bounds(instance, n, nodes, stepsize, cfg, mode)
        spec = EstimatorSpec(kind="dsgd", sgd=_sgd_config(cfg, stepsize))
        risk: RiskReport | None = None
        diverged = 0
        try:
            risk = mc_excess_risk(instance, n, nodes, spec, cfg.replicates,
                                  child_sequence(cfg.seed, idx))
            diverged = risk.diverged
        except DivergenceError as err:
            diverged = err.count or cfg.replicates
        return ResultRow(
            experiment_id=exp_id, n=n, d=instance.d, nodes=nodes, beta=beta,
            gamma=stepsize, alpha=alpha, estimator="dsgd", averaging=mode,
            replicates=risk.replicates if risk else None,
            risk_mean=risk.excess_risk_mean if risk else None,
            risk_stderr=risk.excess_risk_stderr if risk else None,
            upper_bound=upper, lower_bound=lower, k_star=k_star,
            diverged_count=diverged,
        )

    return _parallel_map(one_cell, list(enumerate(cells)), threads)


def run_bounds_overlay(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Closed-form bound values over the sweep grid, no simulation."""
    if cfg.kind != "bounds_overlay":
        raise ValueError("config kind must be bounds_overlay")
    n = cfg.n[0]
    exp_id = _experiment_id(cfg)
    mode = averaging_mode(cfg)
    rows = []
    for alpha in sorted(cfg.alpha):
        for beta, nodes in sorted(node_grid(cfg, n), key=_node_sort_key):
            instance = build_instance(cfg, n, nodes, alpha)
            stepsize = _single_gamma(cfg, instance.spectrum.trace)
            upper, lower, k_star = _dsgd_bounds(instance, n, nodes, stepsize, cfg, mode)
            rows.append(ResultRow(
                experiment_id=exp_id, n=n, d=instance.d, nodes=nodes,
                beta=beta, gamma=stepsize, alpha=alpha, estimator="dsgd",
                averaging=mode, upper_bound=upper, lower_bound=lower,
                k_star=k_star,
            ))
    return rows


# ---------------------------------------------------------------------------
# Sample-complexity comparison
# ---------------------------------------------------------------------------

def _mean_risk_per_lambda(instance: ProblemInstance, n: int, nodes: int,
                          lambdas, replicates: int, seed) -> np.ndarray:
    """Monte Carlo risk of one-shot ridge for a whole regularization grid.

    Shares one factorization per shard across the grid; falls back to plain
    per-value fits when the grid touches zero.
    """
    lam_arr = np.asarray(lambdas, dtype=float)
    lam_w = instance.spectrum.eigenvalues
    totals = np.zeros(lam_arr.size)
    for rep in range(replicates):
        data = sample_dataset(instance, n, child_sequence(seed, rep))
        shards = split_dataset(data, nodes)
        if np.all(lam_arr > 0):
            coeff = np.mean([local_ridge_path(s, lam_arr) for s in shards], axis=0)
        else:
            coeff = np.stack([
                run_drr(data, nodes, RidgeConfig(regularization=v)).coefficients
                for v in lam_arr])
        diff = coeff - instance.target
        totals += 0.5 * (diff**2 @ lam_w)
    return totals / replicates


def _tune_dsgd(cfg: ExperimentConfig, instance: ProblemInstance, n: int,
               nodes: int, seed) -> float:
    grid = gamma_grid(cfg, instance.spectrum.trace)
    if len(grid) == 1:
        return grid[0]
    best_gamma, best_risk = grid[0], math.inf
    for stepsize in grid:
        spec = EstimatorSpec(kind="dsgd", sgd=_sgd_config(cfg, stepsize))
        try:
            report = mc_excess_risk(instance, n, nodes, spec,
                                    cfg.tuning_replicates, seed)
        except DivergenceError:
            continue
        if report.excess_risk_mean < best_risk:
            best_gamma, best_risk = stepsize, report.excess_risk_mean
    return best_gamma


def _tune_drr(cfg: ExperimentConfig, instance: ProblemInstance, n: int,
              nodes: int, seed) -> float:
    grid = lambda_grid(cfg)
    if len(grid) == 1:
        return grid[0]
    risks = _mean_risk_per_lambda(instance, n, nodes, grid,
                                  cfg.tuning_replicates, seed)
    return grid[int(np.argmin(risks))]


def run_sample_complexity(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Tuned one-shot SGD versus tuned one-shot ridge across sample sizes.

    Stepsize and regularization are tuned by grid search on tuning
    replicates (a stream distinct from evaluation); the reported risk uses
    fresh evaluation replicates.
    """
    if cfg.kind != "sample_complexity":
        raise ValueError("config kind must be sample_complexity")
    exp_id = _experiment_id(cfg)
    mode = averaging_mode(cfg)
    estimators = cfg.estimators or ("dsgd", "drr")
    exponent = cfg.exponent if cfg.exponent is not None else 1.0 / 3.0
    sizes = sorted(cfg.n)

    def one_size(indexed):
        idx, n = indexed
        nodes = nodes_from_exponent(n, exponent)
        instance = build_instance(cfg, n, nodes, cfg.alpha[0])
        tune_seed = child_sequence(cfg.seed, idx, 0)
        eval_seed = child_sequence(cfg.seed, idx, 1)
        rows = []
        for estimator in estimators:
            gamma = lam = upper = lower = None
            k_star = None
            if estimator == "dsgd":
                gamma = _tune_dsgd(cfg, instance, n, nodes, tune_seed)
                spec = EstimatorSpec(kind="dsgd", sgd=_sgd_config(cfg, gamma))
                upper, lower, k_star = _dsgd_bounds(instance, n, nodes, gamma, cfg, mode)
            elif estimator == "drr":
                lam = _tune_drr(cfg, instance, n, nodes, tune_seed)
                spec = EstimatorSpec(kind="drr", ridge=RidgeConfig(regularization=lam))
                lower = drr_lower_bound(instance, n, nodes, lam, cfg.constants()).total_lower
                k_star = effective_dim_rr(instance.spectrum, n, nodes, lam, cfg.b)
            else:
                spec = EstimatorSpec(kind="dols")
            risk = None
            diverged = 0
            try:
                risk = mc_excess_risk(instance, n, nodes, spec, cfg.replicates, eval_seed)
                diverged = risk.diverged
            except DivergenceError as err:
                diverged = err.count or cfg.replicates
            rows.append(ResultRow(
                experiment_id=exp_id, n=n, d=instance.d, nodes=nodes,
                gamma=gamma, ridge_lambda=lam, alpha=cfg.alpha[0],
                estimator=estimator,
                averaging=mode if estimator == "dsgd" else None,
                replicates=risk.replicates if risk else None,
                risk_mean=risk.excess_risk_mean if risk else None,
                risk_stderr=risk.excess_risk_stderr if risk else None,
                upper_bound=upper, lower_bound=lower, k_star=k_star,
                diverged_count=diverged,
            ))
        return rows

    nested = _parallel_map(one_size, list(enumerate(sizes)), threads)
    return [row for group in nested for row in group]


# ---------------------------------------------------------------------------
# Rate slope
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateSlopeResult:
    fitted_slope: float
    predicted_slope: float
    rows: list[ResultRow]


def run_rate_slope(cfg: ExperimentConfig, threads: int = 1) -> RateSlopeResult:
    """Fit the log-log decay of the averaged SGD risk across sample sizes.

    Node counts grow as ceil(n ** (1/(2+r))) unless the config overrides the
    exponent; a single stepsize is tuned at the median sample size and held
    constant.  The predicted slope for a polynomial spectrum is
    -(r+1)/(r+2).
    """
    if cfg.kind != "rate_slope":
        raise ValueError("config kind must be rate_slope")
    if len(cfg.n) < 3:
        raise ValueError("rate_slope needs at least 3 sample sizes")
    exp_id = _experiment_id(cfg)
    mode = averaging_mode(cfg)
    exponent = cfg.exponent if cfg.exponent is not None else 1.0 / (2.0 + cfg.r)
    sizes = sorted(cfg.n)
    alpha = cfg.alpha[0]

    n_mid = sizes[len(sizes) // 2]
    nodes_mid = nodes_from_exponent(n_mid, exponent)
    instance_mid = build_instance(cfg, n_mid, nodes_mid, alpha)
    stepsize = _tune_dsgd(cfg, instance_mid, n_mid, nodes_mid,
                          child_sequence(cfg.seed, len(sizes), 0))

    def one_size(indexed):
        idx, n = indexed
        nodes = nodes_from_exponent(n, exponent)
        instance = build_instance(cfg, n, nodes, alpha)
        upper, lower, k_star = _dsgd_bounds(instance, n, nodes, stepsize, cfg, mode)
        spec = EstimatorSpec(kind="dsgd", sgd=_sgd_config(cfg, stepsize))
        risk = mc_excess_risk(instance, n, nodes, spec, cfg.replicates,
                              child_sequence(cfg.seed, idx, 1))
        return ResultRow(
            experiment_id=exp_id, n=n, d=instance.d, nodes=nodes,
            gamma=stepsize, alpha=alpha, estimator="dsgd", averaging=mode,
            replicates=risk.replicates, risk_mean=risk.excess_risk_mean,
            risk_stderr=risk.excess_risk_stderr, upper_bound=upper,
            lower_bound=lower, k_star=k_star, diverged_count=risk.diverged,
        )

    rows = _parallel_map(one_size, list(enumerate(sizes)), threads)
    risks = np.array([row.risk_mean for row in rows])
    log_n = np.log(np.array(sizes, dtype=float))
    if np.max(risks) == np.min(risks):
        fitted = 0.0
    else:
        if np.any(risks <= 0):
            raise ValueError("cannot fit a log-log slope through nonpositive risks")
        log_r = np.log(risks)
        centered = log_n - log_n.mean()
        fitted = float(centered @ (log_r - log_r.mean()) / (centered @ centered))
    predicted = -(cfg.r + 1.0) / (cfg.r + 2.0)
    return RateSlopeResult(fitted_slope=fitted, predicted_slope=predicted, rows=rows)


# ---------------------------------------------------------------------------
# Real data
# ---------------------------------------------------------------------------

def _holdout_mse(coeff: np.ndarray, data: Dataset) -> float:
    resid = data.covariates @ coeff - data.responses
    return float(np.mean(resid**2))


def run_real_data(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Fit the configured estimators on a training file; report held-out MSE.

    No population target is available, so bound columns stay empty and risk
    columns carry mean squared prediction error on the evaluation file.
    """
    if cfg.kind != "real_data":
        raise ValueError("config kind must be real_data")
    exp_id = _experiment_id(cfg)
    train = load_feature_file(cfg.train_path, cfg.data_format)
    holdout = load_feature_file(cfg.eval_path, cfg.data_format)
    if cfg.feature_scaling:
        scale = max_abs_scaler(train)
        train, holdout = apply_scaler(train, scale), apply_scaler(holdout, scale)
    mode = averaging_mode(cfg)
    estimators = cfg.estimators or ("dsgd", "drr")
    # Default stepsizes scale with the empirical second-moment trace.
    trace_estimate = float(np.mean(np.sum(train.covariates**2, axis=1)))
    gammas = gamma_grid(cfg, trace_estimate)
    lambdas = lambda_grid(cfg)
    nodes_list = [m for _, m in node_grid(cfg, train.n)]

    cells = []
    for estimator in estimators:
        params = gammas if estimator == "dsgd" else (lambdas if estimator == "drr" else (None,))
        for nodes in nodes_list:
            for param in params:
                cells.append((estimator, nodes, param))

    def one_cell(cell):
        estimator, nodes, param = cell
        gamma = lam = None
        mse = None
        diverged = 0
        try:
            if estimator == "dsgd":
                gamma = param
                out = run_dsgd(train, nodes, _sgd_config(cfg, gamma))
            elif estimator == "drr":
                lam = param
                out = run_drr(train, nodes, RidgeConfig(regularization=lam))
            else:
                out = run_dols(train, nodes)
            mse = _holdout_mse(out.coefficients, holdout)
        except DivergenceError:
            diverged = 1
        return ResultRow(
            experiment_id=exp_id, n=train.n, d=train.d, nodes=nodes,
            gamma=gamma, ridge_lambda=lam, estimator=estimator,
            averaging=mode if estimator == "dsgd" else None,
            risk_mean=mse, diverged_count=diverged,
        )

    return _parallel_map(one_cell, cells, threads)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> tuple[list[ResultRow], dict]:
    """Run the configured experiment; returns (rows, manifest extras)."""
    if cfg.kind == "m_sweep":
        return run_m_sweep(cfg, threads), {}
    if cfg.kind == "bounds_overlay":
        return run_bounds_overlay(cfg, threads), {}
    if cfg.kind == "sample_complexity":
        return run_sample_complexity(cfg, threads), {}
    if cfg.kind == "rate_slope":
        result = run_rate_slope(cfg, threads)
        return result.rows, {"fitted_slope": result.fitted_slope,
                             "predicted_slope": result.predicted_slope}
    if cfg.kind == "real_data":
        return run_real_data(cfg, threads), {}
    raise ValueError(f"unknown experiment kind {cfg.kind!r}")
