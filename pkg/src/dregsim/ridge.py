# Closed-form local ridge regression, one-shot distributed averaging, and the
# minimum-norm least squares baseline.

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sgd import EstimatorOutput, mean_rows
from .spectra import Dataset, split_dataset

# Relative singular-value cutoff for pseudoinverse rank decisions.
PINV_RCOND = 1e-10


class SingularGramError(np.linalg.LinAlgError):
    """Unregularized solve hit a singular system; use the minimum-norm
    solver (dols) for rank-deficient data."""


@dataclass(frozen=True)
class RidgeConfig:
    """Regularization level and linear-system route.

    solver: ``"dual"`` solves the n x n kernel system, ``"primal"`` the d x d
    normal equations, ``"auto"`` picks whichever is smaller (dual when the
    shard is overparameterized).
    """

    regularization: float
    solver: str = "auto"

    def __post_init__(self):
        if not (np.isfinite(self.regularization) and self.regularization >= 0):
            raise ValueError("regularization must be a nonnegative real")
        if self.solver not in ("auto", "dual", "primal"):
            raise ValueError("solver must be 'auto', 'dual' or 'primal'")


def _solve_psd(matrix: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    # Cholesky first so that (numerically) singular systems are detected
    # instead of silently returning garbage.
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        raise SingularGramError(
            f"{what} is singular at regularization 0; call dols for the "
            "minimum-norm solution"
        ) from None
    return np.linalg.solve(matrix, rhs)


def _dual_solve(x: np.ndarray, y: np.ndarray, reg: float) -> np.ndarray:
    gram = x @ x.T
    gram[np.diag_indices_from(gram)] += reg
    if reg > 0:
        alpha = np.linalg.solve(gram, y)
    else:
        alpha = _solve_psd(gram, y, "the Gram matrix")
    return x.T @ alpha


def _primal_solve(x: np.ndarray, y: np.ndarray, reg: float) -> np.ndarray:
    normal = x.T @ x
    normal[np.diag_indices_from(normal)] += reg
    rhs = x.T @ y
    if reg > 0:
        return np.linalg.solve(normal, rhs)
    return _solve_psd(normal, rhs, "the normal matrix")


def local_ridge(shard: Dataset, config: RidgeConfig) -> EstimatorOutput:
    """Closed-form ridge solution on one shard.

    The dual route computes ``X^T (X X^T + reg I)^{-1} Y``; for positive
    regularization this coincides with the primal ``(X^T X + reg I)^{-1} X^T Y``.
    At zero regularization a singular system raises SingularGramError rather
    than falling back to a pseudoinverse.
    """
    if shard.n == 0:
        raise ValueError("shard must be nonempty")
    solver = config.solver
    if solver == "auto":
        solver = "dual" if shard.n < shard.d else "primal"
    x, y = shard.covariates, shard.responses
    coeff = _dual_solve(x, y, config.regularization) if solver == "dual" \
        else _primal_solve(x, y, config.regularization)
    return EstimatorOutput(coefficients=coeff, kind="drr", averaging=None,
                           node_count=1)


def run_drr(data: Dataset, node_count: int, config: RidgeConfig) -> EstimatorOutput:
    """One-shot averaged ridge: coordinatewise mean of the local solutions."""
    shards = split_dataset(data, node_count)
    coeff = mean_rows(local_ridge(s, config).coefficients for s in shards)
    return EstimatorOutput(coefficients=coeff, kind="drr", averaging=None,
                           node_count=node_count)


def dols(shard: Dataset) -> EstimatorOutput:
    """Minimum-norm least squares solution on one shard.

    Computed through the dual form with a Gram pseudoinverse (eigenvalues
    below ``PINV_RCOND`` times the largest are treated as zero), which yields
    the pseudoinverse solution for any shape.  When the shard has full row
    rank the solution interpolates the responses exactly.
    """
    if shard.n == 0:
        raise ValueError("shard must be nonempty")
    x, y = shard.covariates, shard.responses
    gram = x @ x.T
    coeff = x.T @ (np.linalg.pinv(gram, rcond=PINV_RCOND, hermitian=True) @ y)
    return EstimatorOutput(coefficients=coeff, kind="dols", averaging=None,
                           node_count=1)


def run_dols(data: Dataset, node_count: int) -> EstimatorOutput:
    """One-shot averaged minimum-norm least squares across shards."""
    shards = split_dataset(data, node_count)
    coeff = mean_rows(dols(s).coefficients for s in shards)
    return EstimatorOutput(coefficients=coeff, kind="dols", averaging=None,
                           node_count=node_count)


def local_ridge_path(shard: Dataset, regs) -> np.ndarray:
    """Ridge solutions for a grid of positive regularization levels.

    One symmetric eigendecomposition is shared across the whole grid, which
    the sweep harness relies on when tuning.  Returns an array of shape
    (len(regs), d); each row matches ``local_ridge`` at that level.
    """
    regs = np.asarray(list(regs), dtype=float)
    if regs.size == 0:
        raise ValueError("regs must be nonempty")
    if np.any(regs <= 0):
        raise ValueError("grid solutions require strictly positive regularization")
    x, y = shard.covariates, shard.responses
    if shard.n < shard.d:
        evals, q = np.linalg.eigh(x @ x.T)
        qty = q.T @ y
        # alpha(reg) = Q (L + reg)^{-1} Q^T y, coefficients = X^T alpha
        alphas = q @ (qty[:, None] / (evals[:, None] + regs[None, :]))
        return (x.T @ alphas).T
    evals, q = np.linalg.eigh(x.T @ x)
    qtb = q.T @ (x.T @ y)
    coeffs = q @ (qtb[:, None] / (evals[:, None] + regs[None, :]))
    return coeffs.T
