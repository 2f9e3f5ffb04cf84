"""Binning, regression, subset analysis, and the MI-vs-SMI comparison.

The evaluation protocol: group triples into fixed-width intervals of
the unnormalized metric, average accuracy within each bin, fit a line
to the bin points, and report R-squared.  A per-task mean squared
error against that line complements the bin-level fit.  The paired
t-test compares per-model R-squared values between two predictors.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .errors import DataError, InternalError
from .metrics import MetricRecord, ModelSpec, apply_norm, smi
from .studentt import t_quantile, t_two_sided_p

METRIC_KEYS = ("cooccur", "mi", "smi")
DEFAULT_BIN_WIDTH = 0.2
DEFAULT_LOW_FRACTION = 0.2


@dataclass(frozen=True)
class Bin:
    """One metric interval [lower, upper) and its member triples."""

    lower: float
    upper: float
    triple_ids: tuple[str, ...]
    mean_metric: float

    @property
    def count(self) -> int:
        return len(self.triple_ids)


def bin_index(x: float, width: float) -> int:
    """Index k such that k*width <= x < (k+1)*width holds in floats.

    Plain floor(x / width) can land one bin off when x sits on a
    boundary that the division rounds across, so the result is nudged
    until the half-open membership test passes exactly.
    """
    if width <= 0.0:
        raise DataError(f"bin width must be positive, got {width}")
    if not math.isfinite(x):
        raise DataError(f"cannot bin non-finite value {x}")
    k = math.floor(x / width)
    if x < k * width:
        k -= 1
    elif x >= (k + 1) * width:
        k += 1
    if not (k * width <= x < (k + 1) * width):
        raise InternalError(f"bin adjustment failed for x={x}, width={width}")
    return k


def bin_by_metric(values: Mapping[str, float], width: float = DEFAULT_BIN_WIDTH) -> list[Bin]:
    """Group ids by metric interval; empty bins are never materialized."""
    if not values:
        raise DataError("nothing to bin")
    groups: dict[int, list[str]] = {}
    for tid, x in values.items():
        groups.setdefault(bin_index(x, width), []).append(tid)
    bins = []
    for k in sorted(groups):
        ids = tuple(sorted(groups[k]))
        mean = sum(values[t] for t in ids) / len(ids)
        bins.append(Bin(lower=k * width, upper=(k + 1) * width, triple_ids=ids, mean_metric=mean))
    return bins


def bin_summaries(bins: Sequence[Bin], accuracies: Mapping[str, float]) -> list[tuple[float, float]]:
    """Per-bin (mean_metric, mean_accuracy) pairs."""
    out = []
    for b in bins:
        try:
            acc = sum(accuracies[t] for t in b.triple_ids) / b.count
        except KeyError as exc:
            raise DataError(f"no accuracy for triple {exc}") from None
        out.append((b.mean_metric, acc))
    return out


def derive_bin_smi(
    bin_mean_log_i: Sequence[float],
    norm: tuple[float, float],
    param_count: float,
) -> list[float]:
    """SMI coordinates for bins on the log-MI scale.

    SMI is derived from MI after binning: the bin mean is taken on the
    log-MI axis, pushed through the persisted normalization constants,
    then through the size discount.
    """
    return [smi(apply_norm(v, norm), param_count) for v in bin_mean_log_i]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    mse: float
    n_points: int
    degenerate: bool = False

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


def fit_linear(points: Iterable[tuple[float, float]]) -> FitResult:
    """Ordinary least squares on (x, y) pairs.

    Constant y yields a zero-slope line flagged degenerate with r2 = 0
    rather than an error: a flat relationship is a legitimate finding.
    Constant x is refused since the slope is undefined.
    """
    pts = list(points)
    n = len(pts)
    if n < 2:
        raise DataError(f"linear fit needs at least 2 points, got {n}")
    mx = sum(x for x, _ in pts) / n
    my = sum(y for _, y in pts) / n
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    if sxx == 0.0:
        raise DataError("cannot fit a line: all x values are identical")
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in pts)
    ss_tot = sum((y - my) ** 2 for _, y in pts)
    if ss_tot == 0.0:
        return FitResult(slope, intercept, r2=0.0, mse=ss_res / n, n_points=n, degenerate=True)
    return FitResult(slope, intercept, r2=1.0 - ss_res / ss_tot, mse=ss_res / n, n_points=n)


def mse_per_task(fit: FitResult, points: Iterable[tuple[float, float]]) -> float:
    """Mean squared residual of individual tasks against a bin-level line."""
    total = 0.0
    n = 0
    for x, y in points:
        r = y - fit.predict(x)
        total += r * r
        n += 1
    if n == 0:
        raise DataError("mse_per_task needs at least one point")
    return total / n


def percentile_filter(values: Mapping[str, float], fraction: float) -> list[str]:
    """Ids of the floor(fraction * n) smallest values.

    Ties are broken by id so the subset is stable across runs and
    input orderings.
    """
    if not (0.0 < fraction <= 1.0):
        raise DataError(f"fraction must lie in (0, 1], got {fraction}")
    ranked = sorted(values.items(), key=lambda kv: (kv[1], kv[0]))
    k = math.floor(fraction * len(ranked))
    return [tid for tid, _ in ranked[:k]]


@dataclass(frozen=True)
class TTestResult:
    n_pairs: int
    df: int
    mean_diff: float
    sd_diff: float
    t: float
    p: float
    ci_low: float
    ci_high: float


def paired_t_test(pairs: Sequence[tuple[float, float]]) -> TTestResult:
    """Two-sided paired t-test on (a, b) pairs, differences taken b - a.

    A positive t therefore means the second member of each pair runs
    higher.  The 95 percent confidence interval covers the mean
    difference.
    """
    n = len(pairs)
    if n < 2:
        raise DataError(f"paired t-test needs at least 2 pairs, got {n}")
    diffs = [b - a for a, b in pairs]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    if sd == 0.0:
        raise DataError("paired t-test undefined: all differences are identical")
    se = sd / math.sqrt(n)
    t = mean / se
    df = n - 1
    p = t_two_sided_p(t, df)
    tc = t_quantile(0.975, df)
    return TTestResult(
        n_pairs=n, df=df, mean_diff=mean, sd_diff=sd, t=t, p=p,
        ci_low=mean - tc * se, ci_high=mean + tc * se,
    )


@dataclass(frozen=True)
class AccuracyRecord:
    triple_id: str
    model: str
    accuracy: float
    n_responses: int

    def validate(self) -> None:
        if not (0.0 <= self.accuracy <= 1.0):
            raise DataError(f"accuracy for {self.triple_id}/{self.model} out of [0, 1]: {self.accuracy}")
        if self.n_responses < 1:
            raise DataError(f"n_responses for {self.triple_id}/{self.model} must be >= 1")
        product = self.accuracy * self.n_responses
        if abs(product - round(product)) > 1e-9:
            raise DataError(
                f"accuracy {self.accuracy} times n_responses {self.n_responses} is not integral "
                f"for {self.triple_id}/{self.model}: got {product}"
            )


def load_accuracies(paths: Iterable[str | Path]) -> list[AccuracyRecord]:
    """Read accuracy JSONL files, validating every record."""
    records = []
    seen: set[tuple[str, str]] = set()
    for path in paths:
        path = Path(path)
        if not path.exists():
            raise DataError(f"accuracy file does not exist: {path}")
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    rec = AccuracyRecord(
                        triple_id=str(obj["triple_id"]),
                        model=str(obj["model"]),
                        accuracy=float(obj["accuracy"]),
                        n_responses=int(obj["n_responses"]),
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    raise DataError(f"{path}:{lineno}: malformed accuracy record") from None
                rec.validate()
                key = (rec.triple_id, rec.model)
                if key in seen:
                    raise DataError(f"{path}:{lineno}: duplicate accuracy for {key}")
                seen.add(key)
                records.append(rec)
    if not records:
        raise DataError("no accuracy records loaded")
    return records


def group_accuracies(
    records: Sequence[AccuracyRecord],
    known_triples: set[str],
) -> dict[str, dict[str, float]]:
    """Index accuracies as model -> triple_id -> accuracy."""
    grouped: dict[str, dict[str, float]] = {}
    for rec in records:
        if rec.triple_id not in known_triples:
            raise DataError(f"accuracy references unknown triple_id {rec.triple_id!r}")
        grouped.setdefault(rec.model, {})[rec.triple_id] = rec.accuracy
    return grouped


def _bin_value(rec: MetricRecord, metric: str) -> float | None:
    """The unnormalized binning coordinate for a record, None if excluded."""
    if metric == "cooccur":
        return rec.cooccur
    if metric in ("mi", "smi"):
        return rec.log_i
    raise InternalError(f"unknown metric key {metric!r}")


def _task_value(rec: MetricRecord, metric: str, model: str) -> float:
    if metric == "cooccur":
        return rec.cooccur
    if metric == "mi":
        return rec.mi_norm
    if metric == "smi":
        return rec.smi[model]
    raise InternalError(f"unknown metric key {metric!r}")


def _bin_x(bins: Sequence[Bin], metric: str, norm: tuple[float, float], param_count: float) -> list[float]:
    """Fit-space x coordinate for each bin.

    Co-occurrence bins are fit on the raw log-count scale.  MI bins are
    fit on the normalized scale, and SMI pushes the same normalized
    means through the size discount.
    """
    if metric == "cooccur":
        return [b.mean_metric for b in bins]
    if metric == "mi":
        return [apply_norm(b.mean_metric, norm) for b in bins]
    if metric == "smi":
        return derive_bin_smi([b.mean_metric for b in bins], norm, param_count)
    raise InternalError(f"unknown metric key {metric!r}")


def _fit_dict(fit: FitResult) -> dict:
    return asdict(fit)


def _metric_block(
    metric: str,
    usable: list[MetricRecord],
    norm: tuple[float, float],
    model: ModelSpec,
    acc_map: Mapping[str, float],
    bin_width: float,
    min_bin_count: int,
    low_fraction: float,
) -> dict:
    missing = sorted(r.triple_id for r in usable if r.triple_id not in acc_map)
    if missing:
        raise DataError(f"model {model.name}: no accuracy for triples {missing[:5]} (and {max(0, len(missing) - 5)} more)")

    def assemble(records: list[MetricRecord]) -> tuple[list[Bin], list[float], list[tuple[float, float]], FitResult]:
        bins = [
            b for b in bin_by_metric({r.triple_id: _bin_value(r, metric) for r in records}, bin_width)
            if b.count >= min_bin_count
        ]
        if len(bins) < 2:
            raise DataError(f"model {model.name}, metric {metric}: fewer than 2 usable bins")
        xs = _bin_x(bins, metric, norm, model.param_count)
        ys = [sum(acc_map[t] for t in b.triple_ids) / b.count for b in bins]
        fit = fit_linear(zip(xs, ys))
        return bins, xs, list(zip(xs, ys)), fit

    bins, xs, _, fit = assemble(usable)
    task_points = [(_task_value(r, metric, model.name), acc_map[r.triple_id]) for r in usable]
    block = {
        "n_triples": len(usable),
        "n_bins": len(bins),
        "bins": [
            {
                "lower": b.lower,
                "upper": b.upper,
                "count": b.count,
                "mean_metric": b.mean_metric,
                "x": x,
                "mean_accuracy": sum(acc_map[t] for t in b.triple_ids) / b.count,
            }
            for b, x in zip(bins, xs)
        ],
        "fit": _fit_dict(fit),
        "mse_per_task": mse_per_task(fit, task_points),
    }

    label = f"low_{int(round(low_fraction * 100))}pct"
    # Rank by co-occurrence count: monotone in the joint probability,
    # and defined for every record that reaches any metric.
    low_ids = set(percentile_filter({r.triple_id: r.cooccur for r in usable}, low_fraction))
    subset = [r for r in usable if r.triple_id in low_ids]
    try:
        if len(subset) < 2:
            raise DataError("subset too small")
        s_bins, s_xs, s_pts, s_fit = assemble(subset)
        block["subset_fits"] = {label: {
            "n_triples": len(subset),
            "n_bins": len(s_bins),
            "fit": _fit_dict(s_fit),
            "mse_per_task": mse_per_task(
                s_fit, [(_task_value(r, metric, model.name), acc_map[r.triple_id]) for r in subset]
            ),
        }}
    except DataError as exc:
        block["subset_fits"] = {label: {"skipped_reason": str(exc)}}
    return block


def build_report(
    records: Sequence[MetricRecord],
    meta: dict,
    models: Sequence[ModelSpec],
    accuracies_by_model: Mapping[str, Mapping[str, float]],
    bin_width: float = DEFAULT_BIN_WIDTH,
    min_bin_count: int = 1,
    low_fraction: float = DEFAULT_LOW_FRACTION,
    config_echo: dict | None = None,
    created_at: str = "",
) -> dict:
    """Assemble the full evaluation report as a JSON-ready dict.

    Deterministic given identical inputs except for ``created_at``,
    which the caller stamps.
    """
    if bin_width <= 0.0:
        raise DataError(f"bin width must be positive, got {bin_width}")
    if min_bin_count < 1:
        raise DataError(f"min_bin_count must be >= 1, got {min_bin_count}")
    if not models:
        raise DataError("no models to report on")
    try:
        norm = (float(meta["norm_min"]), float(meta["norm_max"]))
    except (KeyError, TypeError, ValueError):
        raise DataError("metrics metadata is missing normalization constants") from None

    non_excluded = [r for r in records if r.excluded_reason is None]
    if not non_excluded:
        raise DataError("every record is excluded: nothing to analyze")
    for m in models:
        sample = non_excluded[0]
        if m.name not in sample.smi:
            raise DataError(f"metrics were not computed for model {m.name!r}")
        if m.name not in accuracies_by_model:
            raise DataError(f"no accuracy table for model {m.name!r}")

    excluded_counts: dict[str, int] = {}
    for r in records:
        if r.excluded_reason:
            excluded_counts[r.excluded_reason] = excluded_counts.get(r.excluded_reason, 0) + 1

    model_blocks: dict[str, dict] = {}
    r2_pairs: list[dict] = []
    for m in models:
        acc_map = accuracies_by_model[m.name]
        metrics_block = {}
        for metric in METRIC_KEYS:
            # Excluded triples take no part in any fit, so every metric
            # block covers the same population.
            metrics_block[metric] = _metric_block(
                metric, non_excluded, norm, m, acc_map, bin_width, min_bin_count, low_fraction,
            )
        model_blocks[m.name] = {"param_count": m.param_count, "metrics": metrics_block}
        r2_pairs.append({
            "model": m.name,
            "r2_mi": metrics_block["mi"]["fit"]["r2"],
            "r2_smi": metrics_block["smi"]["fit"]["r2"],
        })

    comparison: dict = {"pairs": r2_pairs}
    if len(r2_pairs) >= 2:
        try:
            tt = paired_t_test([(p["r2_mi"], p["r2_smi"]) for p in r2_pairs])
            comparison["ttest"] = ttest_to_dict(tt)
        except DataError as exc:
            comparison["ttest"] = {"skipped_reason": str(exc)}
    else:
        comparison["ttest"] = {"skipped_reason": "need at least 2 models for a paired comparison"}

    return {
        "meta": {
            "created_at": created_at,
            "tool": {"name": "smikit", "version": __version__},
            "log_base": meta.get("log_base"),
            "n_docs": meta.get("n_docs"),
            "norm_min": norm[0],
            "norm_max": norm[1],
            "bin_width": bin_width,
            "min_bin_count": min_bin_count,
            "low_fraction": low_fraction,
            "n_records": len(records),
            "n_excluded": excluded_counts,
            "conventions": {
                "fit": "ordinary least squares on bin means",
                "mse_per_task": "mean squared per-triple residual against the bin-level line",
            },
            "config": config_echo or {},
        },
        "models": model_blocks,
        "r2_comparison": comparison,
    }


def ttest_to_dict(tt: TTestResult) -> dict:
    return {
        "n_pairs": tt.n_pairs,
        "df": tt.df,
        "mean_diff": tt.mean_diff,
        "sd_diff": tt.sd_diff,
        "t": tt.t,
        "p": tt.p,
        "ci95": [tt.ci_low, tt.ci_high],
    }


REPORT_FILE = "report.json"


def write_report(report: dict, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / REPORT_FILE
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_bins_csv(report: dict, path: str | Path) -> None:
    """Flatten every model/metric bin table into one CSV."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "metric", "bin_lower", "bin_upper", "count", "mean_metric", "x", "mean_accuracy"])
        for model in sorted(report["models"]):
            metrics = report["models"][model]["metrics"]
            for metric in METRIC_KEYS:
                for b in metrics[metric]["bins"]:
                    writer.writerow([
                        model, metric,
                        repr(b["lower"]), repr(b["upper"]), b["count"],
                        repr(b["mean_metric"]), repr(b["x"]), repr(b["mean_accuracy"]),
                    ])
