# Closed-form excess-risk bounds and rate predictions for one-shot averaged
# SGD and ridge regression.  Everything here is a deterministic function of
# the spectrum, the target coefficients, the noise level and a handful of
# constants; the Monte Carlo side lives in risk.py.

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spectra import ProblemInstance, Spectrum


class HypothesisViolationError(ValueError):
    """A bound was requested outside the stepsize regime it is proved for."""


@dataclass(frozen=True)
class BoundConstants:
    """Constants entering the closed-form bounds.

    tau bounds the fourth moment against the second (3 is exact for Gaussian
    covariates), theta is the matching lower-bound constant (1 for Gaussian).
    b enters the ridge effective dimension, c the ridge lower bound and the
    sample-complexity bracket, c_b and c_v the tail-averaged upper bound.
    The bounds only assert that such constants exist, so the values used are
    recorded in every report.  sigma_sq is the noise second-moment
    functional; None means "use the squared instance noise level", which is
    exact for well-specified Gaussian noise.
    """

    tau: float = 3.0
    theta: float = 1.0
    b: float = 2.0
    c: float = 2.0
    c_b: float = 1.0
    c_v: float = 1.0
    sigma_sq: float | None = None

    def __post_init__(self):
        if not self.tau >= 1:
            raise ValueError("tau must be >= 1")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not self.b > 1:
            raise ValueError("b must exceed 1")
        if not self.c > 1:
            raise ValueError("c must exceed 1")
        if not (self.c_b > 0 and self.c_v > 0):
            raise ValueError("c_b and c_v must be positive")
        if self.sigma_sq is not None and not self.sigma_sq >= 0:
            raise ValueError("sigma_sq must be nonnegative")

    def noise_sq(self, instance: ProblemInstance) -> float:
        return self.sigma_sq if self.sigma_sq is not None else instance.noise_std**2


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bound values; only the side an evaluator proves is filled.

    ``k_star`` is the effective dimension splitting the spectrum and
    ``v_star`` the variance functional at that split.
    """

    k_star: int
    v_star: float
    bias_upper: float | None = None
    variance_upper: float | None = None
    total_upper: float | None = None
    bias_lower: float | None = None
    variance_lower: float | None = None
    total_lower: float | None = None
    constants: BoundConstants = BoundConstants()


# ---------------------------------------------------------------------------
# Spectrum-weighted norms (head of size k, tail beyond it; empty sums are 0)
# ---------------------------------------------------------------------------

def _head_inv_weighted(lam: np.ndarray, w: np.ndarray, k: int) -> float:
    return float(np.sum(w[:k] ** 2 / lam[:k]))


def _head_sq(w: np.ndarray, k: int) -> float:
    return float(np.sum(w[:k] ** 2))


def _tail_weighted(lam: np.ndarray, w: np.ndarray, k: int) -> float:
    return float(np.sum(lam[k:] * w[k:] ** 2))


def effective_dim_sgd(spectrum: Spectrum, n: int, node_count: int, stepsize: float) -> int:
    """Largest k whose eigenvalue reaches the threshold node_count/(stepsize*n).

    Returns 0 when even the top eigenvalue falls short.
    """
    if not (n >= node_count >= 1):
        raise ValueError("need n >= node_count >= 1")
    if not stepsize > 0:
        raise ValueError("stepsize must be positive")
    threshold = node_count / (stepsize * n)
    return int(np.count_nonzero(spectrum.eigenvalues >= threshold))


def variance_functional(spectrum: Spectrum, n: int, node_count: int,
                        stepsize: float, k: int) -> float:
    """Head count over n plus the stepsize-weighted tail second moment.

    Value of ``k/n + stepsize^2 * (n/node_count^2) * sum_{j>k} lam_j^2``; the
    tail truncates at the finite spectrum dimension.
    """
    if not (0 <= k <= spectrum.d):
        raise ValueError("k must lie in [0, d]")
    return k / n + stepsize**2 * (n / node_count**2) * spectrum.tail_sq_sum(k)


def dsgd_upper_bound(instance: ProblemInstance, n: int, node_count: int,
                     stepsize: float, constants: BoundConstants = BoundConstants()) -> BoundReport:
    """Upper bound on the excess risk of fully averaged one-shot SGD.

    Valid for zero initialization and ``stepsize < 1/(tau * trace)``; raises
    HypothesisViolationError otherwise.  The total is twice the sum of the
    bias and variance bounds.
    """
    lam = instance.spectrum.eigenvalues
    w = instance.target
    trace = instance.spectrum.trace
    slack = 1.0 - stepsize * constants.tau * trace
    if slack <= 0:
        raise HypothesisViolationError(
            f"stepsize {stepsize} outside the regime stepsize*tau*trace < 1")
    k = effective_dim_sgd(instance.spectrum, n, node_count, stepsize)
    v = variance_functional(instance.spectrum, n, node_count, stepsize, k)
    m = node_count
    head_inv = _head_inv_weighted(lam, w, k)
    tail_h = _tail_weighted(lam, w, k)
    head_id = _head_sq(w, k)
    bias = (
        m**2 / (stepsize**2 * n**2) * head_inv
        + tail_h
        + 2.0 * constants.tau * m**2 * (head_id + stepsize * (n / m) * tail_h)
        / (stepsize * n * slack) * v
    )
    variance = constants.noise_sq(instance) / slack * v
    return BoundReport(
        k_star=k, v_star=v,
        bias_upper=bias, variance_upper=variance,
        total_upper=2.0 * (bias + variance),
        constants=constants,
    )


def dsgd_lower_bound(instance: ProblemInstance, n: int, node_count: int,
                     stepsize: float, constants: BoundConstants = BoundConstants()) -> BoundReport:
    """Matching lower bound for one-shot averaged SGD under well-specified
    Gaussian noise and zero initialization.

    The bias part carries a node_count*(node_count-1) factor, so it vanishes
    on a single machine; the explicit 1/100 constants come with the result.
    """
    lam = instance.spectrum.eigenvalues
    w = instance.target
    k = effective_dim_sgd(instance.spectrum, n, node_count, stepsize)
    v = variance_functional(instance.spectrum, n, node_count, stepsize, k)
    m = node_count
    bias = (
        m * (m - 1) / (100.0 * stepsize**2 * n**2)
        * (_head_inv_weighted(lam, w, k)
           + stepsize**2 * n**2 / m**2 * _tail_weighted(lam, w, k))
    )
    variance = instance.noise_std**2 / 100.0 * v
    return BoundReport(
        k_star=k, v_star=v,
        bias_lower=bias, variance_lower=variance,
        total_lower=bias + variance,
        constants=constants,
    )


def effective_dim_rr(spectrum: Spectrum, n: int, node_count: int,
                     regularization: float, b: float = 2.0) -> int:
    """Smallest head size k at which the next eigenvalue drops below
    node_count * (regularization + tail sum) / (b * n).

    The eigenvalue beyond the spectrum is treated as 0, so the scan always
    terminates at k = d.
    """
    if not regularization >= 0:
        raise ValueError("regularization must be nonnegative")
    if not b > 1:
        raise ValueError("b must exceed 1")
    lam = spectrum.eigenvalues
    d = spectrum.d
    for k in range(d + 1):
        next_eig = lam[k] if k < d else 0.0
        if next_eig <= node_count * (regularization + spectrum.tail_sum(k)) / (b * n):
            return k
    return d


def _rr_variance_functional(spectrum: Spectrum, n: int, node_count: int,
                            regularization: float, k: int) -> float:
    # Head count over n plus tail second moment normalized by the squared
    # regularized tail mass; defined as 0 when that mass vanishes.
    denom = (regularization + spectrum.tail_sum(k)) ** 2
    tail = 0.0 if denom == 0.0 else spectrum.tail_sq_sum(k) / denom
    return k / n + (n / node_count**2) * tail


def drr_lower_bound(instance: ProblemInstance, n: int, node_count: int,
                    regularization: float,
                    constants: BoundConstants = BoundConstants()) -> BoundReport:
    """Lower bound on the excess risk of one-shot averaged ridge regression.

    Advisory: the bound is proved for head sizes at most n/(2*node_count); a
    RuntimeWarning is emitted when the computed head size exceeds that.
    """
    lam = instance.spectrum.eigenvalues
    w = instance.target
    k = effective_dim_rr(instance.spectrum, n, node_count, regularization, constants.b)
    if k > n / (2.0 * node_count):
        warnings.warn(
            f"ridge effective dimension {k} exceeds n/(2*nodes)={n / (2 * node_count):g}; "
            "the lower bound is outside its proved regime", RuntimeWarning,
            stacklevel=2)
    reg_tail = regularization + instance.spectrum.tail_sum(k)
    bias = (
        _tail_weighted(lam, w, k)
        + node_count**2 * reg_tail**2 / (constants.c * n**2)
        * _head_inv_weighted(lam, w, k)
    )
    v = _rr_variance_functional(instance.spectrum, n, node_count, regularization, k)
    variance = constants.noise_sq(instance) / constants.c * v
    return BoundReport(
        k_star=k, v_star=v,
        bias_lower=bias, variance_lower=variance,
        total_lower=bias + variance,
        constants=constants,
    )


def tail_dsgd_upper_bound(instance: ProblemInstance, n: int, node_count: int,
                          stepsize: float, k1: int | None = None,
                          k2: int | None = None,
                          constants: BoundConstants = BoundConstants()) -> BoundReport:
    """Upper bound for tail-averaged one-shot SGD with exponentially damped
    head bias.

    Requires ``stepsize < 1/trace``.  The split indices default to the SGD
    effective dimension.  The risk decomposes exactly into bias plus
    variance here, so the total is their sum (no extra factor of two).
    """
    if stepsize * instance.spectrum.trace >= 1.0:
        raise HypothesisViolationError(
            f"stepsize {stepsize} outside the regime stepsize*trace < 1")
    lam = instance.spectrum.eigenvalues
    w = instance.target
    if k1 is None or k2 is None:
        k_default = effective_dim_sgd(instance.spectrum, n, node_count, stepsize)
        k1 = k_default if k1 is None else k1
        k2 = k_default if k2 is None else k2
    d = instance.d
    if not (0 <= k1 <= d and 0 <= k2 <= d):
        raise ValueError("split indices must lie in [0, d]")
    m = node_count
    damping = np.exp(-2.0 * (n / m) * stepsize * lam[:k1])
    bias = (
        constants.c_b * m**2 / (stepsize**2 * n**2)
        * float(np.sum(damping * w[:k1] ** 2 / lam[:k1]))
        + _tail_weighted(lam, w, k1)
    )
    radius_sq = instance.target_sq_norm
    variance = (
        constants.c_v * (1.0 + radius_sq) * constants.noise_sq(instance)
        * (k2 / n + n * stepsize**2 / m**2 * instance.spectrum.tail_sq_sum(k2))
    )
    return BoundReport(
        k_star=k1, v_star=variance_functional(instance.spectrum, n, m, stepsize, k2),
        bias_upper=bias, variance_upper=variance,
        total_upper=bias + variance,
        constants=constants,
    )


@dataclass(frozen=True)
class SampleComplexityConstants:
    """Bracket on the SGD/ridge sample-size ratio under which tail-averaged
    one-shot SGD is no worse than one-shot ridge.

    ``ratio_lower`` and ``ratio_upper`` multiply the ridge sample size;
    ``stepsize_ok`` reports whether the stepsize condition that guarantees
    a nonempty bracket holds.
    """

    c_star: float
    c_lambda: float
    ratio_lower: float
    ratio_upper: float
    stepsize_ok: bool


def sample_complexity_constants(instance: ProblemInstance, n: int, node_count: int,
                                stepsize: float, regularization: float,
                                constants: BoundConstants = BoundConstants()) -> SampleComplexityConstants:
    """Evaluate the explicit constants of the SGD-versus-ridge comparison.

    ``c_star = c * (1 + |target|^2 / sigma^2)`` and ``c_lambda`` is the
    regularized tail mass at the ridge effective dimension.  Raises on zero
    noise (c_star undefined) and on zero regularized tail mass (degenerate).
    """
    noise_sq = constants.noise_sq(instance)
    if noise_sq == 0:
        raise ValueError("noise functional is zero; the comparison constant is undefined")
    k = effective_dim_rr(instance.spectrum, n, node_count, regularization, constants.b)
    c_lambda = regularization + instance.spectrum.tail_sum(k)
    if c_lambda == 0:
        raise ValueError("regularized tail mass is zero; the bracket is degenerate")
    c_star = constants.c * (1.0 + instance.target_sq_norm / noise_sq)
    lam_at_k = float(instance.spectrum.eigenvalues[k - 1]) if k >= 1 else 0.0
    ratio_lower = max(
        c_star,
        math.sqrt(constants.c * (1.0 - stepsize * lam_at_k)) / (stepsize * c_lambda),
    )
    ratio_upper = 1.0 / (c_star * stepsize**2 * c_lambda**2)
    stepsize_ok = stepsize < min(
        1.0 / instance.spectrum.trace,
        1.0 / (math.sqrt(constants.c) * c_star * c_lambda),
    )
    return SampleComplexityConstants(
        c_star=c_star, c_lambda=c_lambda,
        ratio_lower=ratio_lower, ratio_upper=ratio_upper,
        stepsize_ok=stepsize_ok,
    )


def sc_condition_check(spectrum: Spectrum, n: int, node_count: int,
                       stepsize: float, regularization: float, b: float = 2.0,
                       band: tuple[float, float] = (0.1, 10.0)) -> bool:
    """Whether stepsize times the regularized tail mass is of constant order.

    When this product sits inside the band the SGD and ridge sample
    complexities are of the same order.
    """
    lo, hi = band
    if not (lo > 0 and hi > 0 and lo <= 1.0 <= hi):
        raise ValueError("band must be positive and contain 1")
    k = effective_dim_rr(spectrum, n, node_count, regularization, b)
    value = stepsize * (regularization + spectrum.tail_sum(k))
    return lo <= value <= hi


@dataclass(frozen=True)
class RatePrediction:
    """Predicted excess-risk scale and the largest node count that keeps the
    error variance-dominated."""

    predicted_rate: float
    max_nodes: float


def theoretical_rate(kind: str, n: int, node_count: int, stepsize: float, *,
                     q: float | None = None, r: float | None = None,
                     radius: float = 1.0, tau: float = 3.0) -> RatePrediction:
    """Closed-form rate prediction for the two reference spectra.

    kind "spiked": rate ``(1/(stepsize*M)) * (M/n)**nu`` with
    ``nu = min(1-r, q-1)``; the node budget is
    ``sqrt(stepsize*(1-2*stepsize*tau)*n / radius^2)``.
    kind "polynomial": rate ``(stepsize/M) * (M/n)**(r/(1+r))``; the node
    budget is ``(stepsize/radius^2)**((1+r)/(2+r)) * (stepsize*n)**(1/(2+r))``.
    """
    m = node_count
    if kind == "spiked":
        if q is None or r is None or q <= 1 or not (0 < r <= 1):
            raise ValueError("spiked rate requires q > 1 and r in (0, 1]")
        nu = min(1.0 - r, q - 1.0)
        rate = (1.0 / (stepsize * m)) * (m / n) ** nu
        slack = 1.0 - 2.0 * stepsize * tau
        if slack <= 0:
            raise ValueError("stepsize too large: need stepsize < 1/(2*tau)")
        max_nodes = math.sqrt(stepsize * slack * n / radius**2)
        return RatePrediction(predicted_rate=rate, max_nodes=max_nodes)
    if kind == "polynomial":
        if r is None or r <= 0:
            raise ValueError("polynomial rate requires r > 0")
        rate = (stepsize / m) * (m / n) ** (r / (1.0 + r))
        max_nodes = (stepsize / radius**2) ** ((1.0 + r) / (2.0 + r)) \
            * (stepsize * n) ** (1.0 / (2.0 + r))
        return RatePrediction(predicted_rate=rate, max_nodes=max_nodes)
    raise ValueError("kind must be 'spiked' or 'polynomial'")
