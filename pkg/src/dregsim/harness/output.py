# Result rows, deterministic CSV emission and round-trip parsing, run
# manifest, and per-experiment plots.

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields

from .config import ExperimentConfig, config_hash
from .svgplot import LinePlot

# CSV column order; the "lambda" column maps to the ridge_lambda attribute
# because "lambda" is reserved in Python.
CSV_COLUMNS = ("experiment_id", "n", "d", "M", "beta", "gamma", "lambda",
               "alpha", "estimator", "averaging", "replicates", "risk_mean",
               "risk_stderr", "bias_mc", "var_mc", "upper_bound",
               "lower_bound", "k_star", "diverged_count")
_ATTR_FOR_COLUMN = {"lambda": "ridge_lambda", "M": "nodes"}
_INT_COLUMNS = {"n", "d", "M", "replicates", "k_star", "diverged_count"}
_STR_COLUMNS = {"experiment_id", "estimator", "averaging"}


@dataclass(frozen=True)
class ResultRow:
    """One experiment grid point for one estimator."""

    experiment_id: str
    n: int | None = None
    d: int | None = None
    nodes: int | None = None
    beta: float | None = None
    gamma: float | None = None
    ridge_lambda: float | None = None
    alpha: float | None = None
    estimator: str | None = None
    averaging: str | None = None
    replicates: int | None = None
    risk_mean: float | None = None
    risk_stderr: float | None = None
    bias_mc: float | None = None
    var_mc: float | None = None
    upper_bound: float | None = None
    lower_bound: float | None = None
    k_star: int | None = None
    diverged_count: int | None = None


def _attr(column: str) -> str:
    return _ATTR_FOR_COLUMN.get(column, column)


def _format_cell(column: str, value) -> str:
    if value is None:
        return ""
    if column in _STR_COLUMNS:
        return str(value)
    if column in _INT_COLUMNS:
        return str(int(value))
    # 17 significant digits round-trips any float64 exactly
    return format(float(value), ".17g")


def rows_to_csv(rows: list[ResultRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(col, getattr(row, _attr(col)))
                              for col in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _parse_cell(column: str, text: str):
    if text == "":
        return None
    if column in _STR_COLUMNS:
        return text
    if column in _INT_COLUMNS:
        return int(text)
    return float(text)


def read_results(path: str) -> list[ResultRow]:
    """Parse a results.csv back into rows; exact inverse of rows_to_csv."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected results header")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(CSV_COLUMNS):
            raise ValueError(f"{path}: malformed row {line!r}")
        rows.append(ResultRow(**{
            _attr(col): _parse_cell(col, cell)
            for col, cell in zip(CSV_COLUMNS, cells)
        }))
    return rows


def _series_key(rows: list[ResultRow], attr: str) -> list:
    seen = []
    for row in rows:
        value = getattr(row, attr)
        if value not in seen:
            seen.append(value)
    return seen


def _plot_for_kind(kind: str, rows: list[ResultRow]) -> LinePlot | None:
    have_risk = [r for r in rows if r.risk_mean is not None]
    if kind in ("m_sweep", "bounds_overlay"):
        x_attr = "beta" if any(r.beta is not None for r in rows) else "nodes"
        xlabel = "node exponent" if x_attr == "beta" else "nodes"
        value_attr = "risk_mean" if kind == "m_sweep" else "upper_bound"
        plot = LinePlot("excess risk vs node count", xlabel, "excess risk", logy=True)
        for alpha in _series_key(rows, "alpha"):
            group = [r for r in rows if r.alpha == alpha]
            xs = [getattr(r, x_attr) for r in group]
            ys = [getattr(r, value_attr) for r in group]
            label = f"target decay {alpha:g}" if alpha is not None else "target"
            plot.add_series(label, xs, ys)
            if kind == "bounds_overlay":
                plot.add_series(f"lower, decay {alpha:g}", xs,
                                [r.lower_bound for r in group])
        return plot
    if kind in ("sample_complexity", "rate_slope"):
        plot = LinePlot("excess risk vs sample size", "n", "excess risk",
                        logx=True, logy=True)
        for estimator in _series_key(have_risk, "estimator"):
            group = [r for r in have_risk if r.estimator == estimator]
            plot.add_series(estimator, [r.n for r in group],
                            [r.risk_mean for r in group])
        return plot
    if kind == "real_data":
        plot = LinePlot("held-out error vs node count", "nodes", "mean squared error",
                        logy=True)
        for estimator in _series_key(have_risk, "estimator"):
            group = [r for r in have_risk if r.estimator == estimator]
            plot.add_series(estimator, [r.nodes for r in group],
                            [r.risk_mean for r in group])
        return plot
    return None


def emit_outputs(rows: list[ResultRow], cfg: ExperimentConfig,
                 extras: dict | None = None) -> dict[str, str]:
    """Write results.csv, the experiment plot and manifest.json.

    Refuses empty row lists before creating anything; same rows + config
    produce byte-identical files.  Returns the written paths.
    """
    if not rows:
        raise ValueError("no result rows to write")
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    written = {}

    csv_path = os.path.join(out_dir, "results.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))
    written["results"] = csv_path

    plot = _plot_for_kind(cfg.kind, rows)
    if plot is not None:
        plot_path = os.path.join(out_dir, f"{cfg.kind}.svg")
        plot.write(plot_path)
        written["plot"] = plot_path

    manifest = {
        "kind": cfg.kind,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "constants": asdict_constants(cfg),
        "rows": len(rows),
    }
    if extras:
        manifest["extras"] = extras
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written["manifest"] = manifest_path
    return written


def asdict_constants(cfg: ExperimentConfig) -> dict:
    constants = cfg.constants()
    out = asdict(constants)
    if out["sigma_sq"] is None:
        out["sigma_sq"] = cfg.noise_std**2
    return out


def row_fields() -> tuple[str, ...]:
    return tuple(f.name for f in fields(ResultRow))
