# Problem distributions for random-design linear regression, expressed in the
# eigenbasis of the covariate second-moment operator.  Working in that basis
# makes the second moment diagonal, sampling coordinatewise and every exact
# risk or bound evaluation O(d).

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .rng import child_sequence, generator

_log = logging.getLogger(__name__)


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Spectrum:
    """Ordered eigenvalues of the covariate second-moment operator.

    Parameters
    ----------
    eigenvalues : array_like
        Strictly positive, nonincreasing values ``lam_1 >= ... >= lam_d``.
    kind : str
        Generator tag: ``"explicit"``, ``"polynomial"`` or ``"spiked"``.
    r : float, optional
        Decay exponent (polynomial: ``lam_j = j**-(1+r)``; spiked: head size
        exponent).
    q : float, optional
        Spiked dimension exponent (``d = floor(N**q)``).
    node_sample_count : int, optional
        Per-node sample count ``N`` the spiked model was built for.
    """

    eigenvalues: np.ndarray
    kind: str = "explicit"
    r: float | None = None
    q: float | None = None
    node_sample_count: int | None = None

    def __post_init__(self):
        arr = _frozen_array(self.eigenvalues)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("eigenvalues must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("eigenvalues must be finite and strictly positive")
        if np.any(np.diff(arr) > 0):
            raise ValueError("eigenvalues must be nonincreasing")
        object.__setattr__(self, "eigenvalues", arr)

    @property
    def d(self) -> int:
        return self.eigenvalues.size

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))

    def tail_sum(self, k: int) -> float:
        """Sum of eigenvalues with index > k (1-based head of size k)."""
        return float(np.sum(self.eigenvalues[k:]))

    def tail_sq_sum(self, k: int) -> float:
        """Sum of squared eigenvalues with index > k."""
        return float(np.sum(self.eigenvalues[k:] ** 2))


@dataclass(frozen=True)
class ProblemInstance:
    """Data distribution: spectrum, target coefficients and noise level.

    The target is given by its coefficients in the eigenbasis, so the squared
    norm of the optimum is simply the sum of squared coefficients.

    ``covariates`` selects the coordinate law: ``"gaussian"`` (default) or
    ``"rademacher"`` (coordinates ``+-sqrt(lam_j)``, same second moment).
    """

    spectrum: Spectrum
    target: np.ndarray
    noise_std: float = 0.0
    target_kind: str = "explicit"   # "explicit" | "power_decay"
    alpha: float | None = None      # power_decay exponent, if applicable
    covariates: str = "gaussian"

    def __post_init__(self):
        target = _frozen_array(self.target)
        if target.ndim != 1 or target.size != self.spectrum.d:
            raise ValueError("target length must equal the spectrum dimension")
        if not np.isfinite(self.noise_std) or self.noise_std < 0:
            raise ValueError("noise_std must be a nonnegative real")
        if self.covariates not in ("gaussian", "rademacher"):
            raise ValueError(f"unknown covariate model {self.covariates!r}")
        object.__setattr__(self, "target", target)

    @property
    def d(self) -> int:
        return self.spectrum.d

    @property
    def target_sq_norm(self) -> float:
        return float(np.sum(self.target**2))


@dataclass(frozen=True)
class Dataset:
    """Sampled regression data with rows expressed in the eigenbasis."""

    covariates: np.ndarray   # (n, d)
    responses: np.ndarray    # (n,)
    source: str = "synthetic"

    def __post_init__(self):
        x = _frozen_array(self.covariates)
        y = _frozen_array(self.responses)
        if x.ndim != 2:
            raise ValueError("covariates must be a 2-d array")
        if y.ndim != 1 or y.size != x.shape[0]:
            raise ValueError("responses length must equal the covariate row count")
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]


def build_polynomial_spectrum(d: int, r: float) -> Spectrum:
    """Polynomially decaying spectrum ``lam_j = j**-(1+r)``, j = 1..d.

    Parameters
    ----------
    d : int
        Dimension, at least 1.
    r : float
        Positive decay exponent.
    """
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    if not r > 0:
        raise ValueError("r must be positive")
    lam = np.arange(1, int(d) + 1, dtype=float) ** (-(1.0 + r))
    return Spectrum(lam, kind="polynomial", r=float(r))


def build_spiked_spectrum(node_sample_count: int, q: float, r: float) -> Spectrum:
    """Two-level spiked spectrum with unit mass on each level (trace 2).

    With ``N = node_sample_count``, sets ``d = floor(N**q)`` and
    ``d_head = floor(N**r)``; the first ``d_head`` eigenvalues equal
    ``1/d_head`` and the remaining ``d - d_head`` equal ``1/(d - d_head)``.
    Block values are exact reciprocals of the block sizes, so each block sums
    to 1 and the trace is 2 by construction.
    """
    n_local = node_sample_count
    if int(n_local) != n_local or n_local < 1:
        raise ValueError("node_sample_count must be a positive integer")
    if not q > 1:
        raise ValueError("q must exceed 1")
    if not (0 < r <= 1):
        raise ValueError("r must lie in (0, 1]")
    d = int(np.floor(float(n_local) ** q))
    d_head = int(np.floor(float(n_local) ** r))
    if d_head >= d:
        raise ValueError(
            f"degenerate two-level model: head size {d_head} >= dimension {d}"
        )
    if d - d_head < d_head:
        raise ValueError(
            f"degenerate two-level model: tail block {d - d_head} smaller than head {d_head}"
        )
    lam = np.empty(d)
    lam[:d_head] = 1.0 / d_head
    lam[d_head:] = 1.0 / (d - d_head)
    return Spectrum(lam, kind="spiked", r=float(r), q=float(q),
                    node_sample_count=int(n_local))


def power_law_target(d: int, alpha: float) -> np.ndarray:
    """Target coefficients ``w_j = j**-alpha`` (alpha = 0 gives all ones)."""
    if not alpha >= 0:
        raise ValueError("alpha must be nonnegative")
    return np.arange(1, d + 1, dtype=float) ** (-alpha)


def power_law_instance(spectrum: Spectrum, alpha: float, noise_std: float,
                       covariates: str = "gaussian") -> ProblemInstance:
    """Instance whose target decays as ``j**-alpha`` in the eigenbasis."""
    return ProblemInstance(
        spectrum=spectrum,
        target=power_law_target(spectrum.d, alpha),
        noise_std=noise_std,
        target_kind="power_decay",
        alpha=float(alpha),
        covariates=covariates,
    )


def draw_covariates(instance: ProblemInstance, n: int, rng: np.random.Generator) -> np.ndarray:
    """n covariate rows with per-coordinate second moment ``lam_j``."""
    d = instance.d
    if instance.covariates == "gaussian":
        z = rng.standard_normal((n, d))
    else:  # rademacher coordinates
        z = rng.integers(0, 2, size=(n, d)).astype(float) * 2.0 - 1.0
    return z * np.sqrt(instance.spectrum.eigenvalues)


def draw_noise(instance: ProblemInstance, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent Gaussian noise draws with the instance noise level."""
    if instance.noise_std == 0.0:
        return np.zeros(n)
    return rng.standard_normal(n) * instance.noise_std


def response_products(x: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Row-by-row inner products with the target.

    Uses the same vector dot the SGD recursion uses per sample, so noiseless
    responses reproduce the recursion's predictions bitwise (a blocked GEMV
    can differ in the last ulp, which would break exact fixed-point
    identities).
    """
    return np.array([row @ target for row in x])


def sample_dataset(instance: ProblemInstance, n: int, rng_seed) -> Dataset:
    """Draw an i.i.d. dataset of size n from the instance.

    Covariate coordinate j is ``sqrt(lam_j)`` times a standard draw and the
    response is the target inner product plus independent Gaussian noise.
    Deterministic given the seed; covariates and noise come from separate
    derived streams so covariate-only simulations can share the draw.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    ss = child_sequence(rng_seed)
    x = draw_covariates(instance, int(n), generator(ss, 0))
    eps = draw_noise(instance, int(n), generator(ss, 1))
    y = response_products(x, instance.target) + eps
    return Dataset(x, y, source=f"synthetic(seed={ss.entropy},key={ss.spawn_key})")


def split_discard_count(n: int, node_count: int) -> int:
    """Samples dropped when n is split into node_count equal shards."""
    return n - node_count * (n // node_count)


def split_dataset(data: Dataset, node_count: int) -> list[Dataset]:
    """Split into ``node_count`` equal shards of size ``floor(n / node_count)``.

    Shards are consecutive blocks taken in order; any trailing remainder is
    discarded and the discard count is logged.
    """
    m = node_count
    if int(m) != m or m < 1:
        raise ValueError("node_count must be a positive integer")
    if m > data.n:
        raise ValueError(f"cannot split {data.n} samples into {m} shards")
    size = data.n // m
    dropped = split_discard_count(data.n, m)
    if dropped:
        _log.info("split_dataset: discarding %d trailing samples (n=%d, nodes=%d)",
                  dropped, data.n, m)
    return [
        Dataset(
            data.covariates[i * size:(i + 1) * size],
            data.responses[i * size:(i + 1) * size],
            source=f"{data.source}[shard {i + 1}/{m}]",
        )
        for i in range(m)
    ]
