# Flat key=value experiment configuration: parsing, validation, defaults.

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from ..bounds import BoundConstants
from ..spectra import (ProblemInstance, Spectrum, build_polynomial_spectrum,
                       build_spiked_spectrum, power_law_instance)

EXPERIMENT_KINDS = ("m_sweep", "bounds_overlay", "sample_complexity",
                    "rate_slope", "real_data")

# Default relative stepsizes and ridge grid used when the config leaves the
# algorithm grids empty.  Stepsizes are fractions of the spectrum trace.
DEFAULT_GAMMA_FRACTIONS = (0.5, 0.25, 0.1, 0.05, 0.01)
DEFAULT_LAMBDA_GRID = tuple(10.0**k for k in range(-6, 3))


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description (see KEY_DOCS for the file format)."""

    kind: str
    spectrum: str = "polynomial"
    d: int | None = None
    r: float = 1.0
    q: float | None = None
    eigenvalues: tuple[float, ...] | None = None
    alpha: tuple[float, ...] = (1.0,)
    target: tuple[float, ...] | None = None
    noise_std: float = 1.0
    covariates: str = "gaussian"
    n: tuple[int, ...] = ()
    beta: tuple[float, ...] | None = None
    m_list: tuple[int, ...] | None = None
    gamma: tuple[float, ...] | None = None
    ridge_lambda: tuple[float, ...] | None = None
    averaging: str | None = None
    tail_fraction: float = 0.5
    estimators: tuple[str, ...] | None = None
    replicates: int = 200
    tuning_replicates: int = 50
    exponent: float | None = None
    seed: int = 0
    out_dir: str = "results"
    tau: float = 3.0
    theta: float = 1.0
    b: float = 2.0
    c: float = 2.0
    c_b: float = 1.0
    c_v: float = 1.0
    sigma_sq: float | None = None
    train_path: str | None = None
    eval_path: str | None = None
    data_format: str = "svmlight"
    feature_scaling: bool = False

    def constants(self) -> BoundConstants:
        return BoundConstants(tau=self.tau, theta=self.theta, b=self.b,
                              c=self.c, c_b=self.c_b, c_v=self.c_v,
                              sigma_sq=self.sigma_sq)


# key -> (parser tag, attribute, description, default shown in help)
KEY_DOCS: dict[str, tuple[str, str, str, str]] = {
    "kind": ("str", "kind", "experiment kind: " + " | ".join(EXPERIMENT_KINDS), "required"),
    "spectrum": ("str", "spectrum", "spectrum family: polynomial | spiked | explicit", "polynomial"),
    "d": ("int", "d", "dimension (polynomial/explicit spectra)", "required for polynomial"),
    "r": ("float", "r", "spectrum decay exponent", "1.0"),
    "q": ("float", "q", "spiked dimension exponent (d = floor((n/M)**q))", "none"),
    "eigenvalues": ("float_list", "eigenvalues", "explicit eigenvalue list (spectrum = explicit)", "none"),
    "alpha": ("float_list", "alpha", "target decay grid: coefficients j**-alpha", "1"),
    "target": ("float_list", "target", "explicit target coefficients (overrides alpha)", "none"),
    "noise_std": ("float", "noise_std", "response noise standard deviation", "1.0"),
    "covariates": ("str", "covariates", "covariate law: gaussian | rademacher", "gaussian"),
    "n": ("int_list", "n", "sample size grid", "required except real_data"),
    "beta": ("float_list", "beta", "node exponents, M = max(1, ceil(n**beta))", "none"),
    "m_list": ("int_list", "m_list", "explicit node count grid (alternative to beta)", "none"),
    "gamma": ("float_list", "gamma", "SGD stepsize grid (absolute values)", "(0.5,0.25,0.1,0.05,0.01)/trace"),
    "lambda": ("float_list", "ridge_lambda", "ridge regularization grid", "10^-6..10^2 decades"),
    "averaging": ("str", "averaging", "SGD averaging: full | tail | last_iterate", "full (tail for sample_complexity)"),
    "tail_fraction": ("float", "tail_fraction", "fraction of leading iterates dropped by tail averaging", "0.5"),
    "estimators": ("str_list", "estimators", "estimator grid: dsgd | drr | dols", "per experiment kind"),
    "replicates": ("int", "replicates", "evaluation Monte Carlo replicates", "200"),
    "tuning_replicates": ("int", "tuning_replicates", "replicates used for grid tuning", "50"),
    "exponent": ("float", "exponent", "node growth exponent, M = ceil(n**exponent)", "1/3 (rate_slope: 1/(2+r))"),
    "seed": ("int", "seed", "master random seed", "0"),
    "out_dir": ("str", "out_dir", "output directory", "results"),
    "tau": ("float", "tau", "fourth-moment bound constant", "3.0"),
    "theta": ("float", "theta", "fourth-moment lower-bound constant", "1.0"),
    "b": ("float", "b", "ridge effective-dimension constant", "2.0"),
    "c": ("float", "c", "ridge lower-bound / comparison constant", "2.0"),
    "c_b": ("float", "c_b", "tail-bound bias constant", "1.0"),
    "c_v": ("float", "c_v", "tail-bound variance constant", "1.0"),
    "sigma_sq": ("float", "sigma_sq", "noise functional override (defaults to noise_std^2)", "noise_std^2"),
    "train_path": ("str", "train_path", "training data file (real_data)", "none"),
    "eval_path": ("str", "eval_path", "held-out data file (real_data)", "none"),
    "data_format": ("str", "data_format", "feature file format: svmlight | dense_csv", "svmlight"),
    "feature_scaling": ("bool", "feature_scaling", "scale features by per-column max abs from train", "false"),
}


def config_help() -> str:
    lines = ["config file: one 'key = value' per line, '#' comments, lists comma-separated", ""]
    for key, (_, _, desc, default) in KEY_DOCS.items():
        lines.append(f"  {key:<18} {desc} [default: {default}]")
    return "\n".join(lines)


def _parse_scalar(tag: str, key: str, text: str):
    try:
        if tag == "int":
            return int(text)
        if tag == "float":
            return float(text)
        if tag == "bool":
            low = text.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError("expected true/false")
        if tag == "str":
            return text
        items = [s.strip() for s in text.split(",") if s.strip() != ""]
        if not items:
            raise ValueError("empty list")
        if tag == "int_list":
            return tuple(int(s) for s in items)
        if tag == "float_list":
            return tuple(float(s) for s in items)
        return tuple(items)
    except ValueError as err:
        raise ConfigError(key, f"cannot parse value {text!r} ({err})") from None


def parse_config_text(text: str) -> ExperimentConfig:
    values: dict[str, object] = {}
    unknown: list[str] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("<line>", f"line {line_no} is not of the form key = value: {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KEY_DOCS:
            unknown.append(key)
            continue
        tag, attr, _, _ = KEY_DOCS[key]
        values[attr] = _parse_scalar(tag, key, value)
    if unknown:
        raise ConfigError(", ".join(sorted(set(unknown))), "unknown key(s)")
    if "kind" not in values:
        raise ConfigError("kind", "missing (required)")
    config = ExperimentConfig(**values)
    validate_config(config)
    return config


def parse_config(path: str) -> ExperimentConfig:
    """Parse and validate a flat key = value experiment file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError("<file>", f"cannot read {path}: {err}") from None
    return parse_config_text(text)


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.kind not in EXPERIMENT_KINDS:
        raise ConfigError("kind", f"must be one of {EXPERIMENT_KINDS}")
    if cfg.spectrum not in ("polynomial", "spiked", "explicit"):
        raise ConfigError("spectrum", "must be polynomial, spiked or explicit")
    if cfg.covariates not in ("gaussian", "rademacher"):
        raise ConfigError("covariates", "must be gaussian or rademacher")
    if cfg.replicates < 2:
        raise ConfigError("replicates", "must be at least 2")
    if cfg.tuning_replicates < 2:
        raise ConfigError("tuning_replicates", "must be at least 2")
    if cfg.noise_std < 0:
        raise ConfigError("noise_std", "must be nonnegative")
    if not (0 < cfg.tail_fraction < 1):
        raise ConfigError("tail_fraction", "must lie in (0, 1)")
    if cfg.beta is not None and any(not (0.0 <= b <= 1.0) for b in cfg.beta):
        raise ConfigError("beta", "values must lie in [0, 1]")
    if cfg.m_list is not None and any(m < 1 for m in cfg.m_list):
        raise ConfigError("m_list", "node counts must be positive")
    if cfg.gamma is not None and any(g <= 0 for g in cfg.gamma):
        raise ConfigError("gamma", "stepsizes must be positive")
    if cfg.ridge_lambda is not None and any(l < 0 for l in cfg.ridge_lambda):
        raise ConfigError("lambda", "regularization must be nonnegative")
    if cfg.averaging is not None and cfg.averaging not in ("full", "tail", "last_iterate"):
        raise ConfigError("averaging", "must be full, tail or last_iterate")
    if cfg.estimators is not None:
        bad = [e for e in cfg.estimators if e not in ("dsgd", "drr", "dols")]
        if bad:
            raise ConfigError("estimators", f"unknown estimator(s) {bad}")
    if cfg.exponent is not None and not (0.0 <= cfg.exponent <= 1.0):
        raise ConfigError("exponent", "must lie in [0, 1]")
    if cfg.alpha is not None and any(a < 0 for a in cfg.alpha):
        raise ConfigError("alpha", "decay exponents must be nonnegative")

    needs_instance = cfg.kind in ("m_sweep", "bounds_overlay", "sample_complexity", "rate_slope")
    if needs_instance:
        if cfg.spectrum == "polynomial" and cfg.d is None:
            raise ConfigError("d", "required for a polynomial spectrum")
        if cfg.spectrum == "explicit" and cfg.eigenvalues is None:
            raise ConfigError("eigenvalues", "required for an explicit spectrum")
        if cfg.spectrum == "spiked" and cfg.q is None:
            raise ConfigError("q", "required for a spiked spectrum")
        if not cfg.n:
            raise ConfigError("n", "at least one sample size is required")
        if any(v < 1 for v in cfg.n):
            raise ConfigError("n", "sample sizes must be positive")

    if cfg.kind in ("m_sweep", "bounds_overlay"):
        if len(cfg.n) != 1:
            raise ConfigError("n", f"{cfg.kind} uses a single sample size")
        if cfg.beta is None and cfg.m_list is None:
            raise ConfigError("beta", "node grid required (beta or m_list)")
        if cfg.gamma is not None and len(cfg.gamma) != 1:
            raise ConfigError("gamma", f"{cfg.kind} uses a single stepsize")
    if cfg.kind == "rate_slope":
        if cfg.spectrum != "polynomial":
            raise ConfigError("spectrum", "rate_slope requires a polynomial spectrum")
        if len(cfg.n) < 3:
            raise ConfigError("n", "rate_slope needs at least 3 sample sizes")
        if len(cfg.alpha) != 1 and cfg.target is None:
            raise ConfigError("alpha", "rate_slope uses a single target")
    if cfg.kind == "real_data":
        if cfg.train_path is None:
            raise ConfigError("train_path", "required for real_data")
        if cfg.eval_path is None:
            raise ConfigError("eval_path", "required for real_data")
        if cfg.data_format not in ("svmlight", "dense_csv"):
            raise ConfigError("data_format", "must be svmlight or dense_csv")
        if cfg.m_list is None and cfg.beta is None:
            raise ConfigError("m_list", "node grid required (m_list or beta)")


def with_overrides(cfg: ExperimentConfig, seed: int | None = None,
                   out_dir: str | None = None) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if out_dir is not None:
        updates["out_dir"] = out_dir
    return replace(cfg, **updates) if updates else cfg


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable hash of the effective configuration (defaults included).

    The output directory is excluded: it does not affect any result.
    """
    parts = []
    for f in sorted(fields(cfg), key=lambda f: f.name):
        if f.name == "out_dir":
            continue
        parts.append(f"{f.name}={getattr(cfg, f.name)!r}")
    return hashlib.sha256(";".join(parts).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Grid helpers
# ---------------------------------------------------------------------------

def build_spectrum(cfg: ExperimentConfig, n: int, node_count: int) -> Spectrum:
    if cfg.spectrum == "polynomial":
        return build_polynomial_spectrum(cfg.d, cfg.r)
    if cfg.spectrum == "spiked":
        return build_spiked_spectrum(max(1, n // node_count), cfg.q, cfg.r)
    return Spectrum(np.array(cfg.eigenvalues))


def build_instance(cfg: ExperimentConfig, n: int, node_count: int,
                   alpha: float) -> ProblemInstance:
    spectrum = build_spectrum(cfg, n, node_count)
    if cfg.target is not None:
        return ProblemInstance(spectrum, np.array(cfg.target), cfg.noise_std,
                               covariates=cfg.covariates)
    return power_law_instance(spectrum, alpha, cfg.noise_std, cfg.covariates)


def node_grid(cfg: ExperimentConfig, n: int) -> list[tuple[float | None, int]]:
    """(beta, M) pairs for one sample size; beta is None for explicit counts."""
    if cfg.m_list is not None:
        return [(None, m) for m in cfg.m_list]
    return [(beta, nodes_from_exponent(n, beta)) for beta in cfg.beta]


def nodes_from_exponent(n: int, beta: float) -> int:
    return max(1, math.ceil(n**beta))


def gamma_grid(cfg: ExperimentConfig, trace: float) -> tuple[float, ...]:
    if cfg.gamma is not None:
        return cfg.gamma
    return tuple(f / trace for f in DEFAULT_GAMMA_FRACTIONS)


def lambda_grid(cfg: ExperimentConfig) -> tuple[float, ...]:
    if cfg.ridge_lambda is not None:
        return cfg.ridge_lambda
    return DEFAULT_LAMBDA_GRID


def averaging_mode(cfg: ExperimentConfig) -> str:
    if cfg.averaging is not None:
        return cfg.averaging
    return "tail" if cfg.kind == "sample_complexity" else "full"
