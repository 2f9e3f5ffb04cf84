"""Co-occurrence and mutual-information metrics over triple counts.

Three predictor families are computed per triple:

* ``cooccur``: log2 of the subject-object co-document count.
* ``mi``: pointwise-mutual-information mass I = p_so * log(p_so / (p_s * p_o)),
  log-transformed and min-max normalized to [0, 1] across the dataset.
* ``smi``: the normalized MI raised to ``1 + 1 / log2(param_count)``,
  a per-model exponent that discounts the score more for smaller
  models and approaches the identity as capacity grows.

Triples with no co-occurrence at all, or with non-positive MI, carry an
``excluded_reason`` instead of downstream values.  Excluded is a value,
not an error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import DataError
from .matcher import EntityCounts

LOG_BASES = {"2": 2.0, "e": math.e}

EXCLUDED_ZERO_COOCCURRENCE = "zero_cooccurrence"
EXCLUDED_NONPOSITIVE_MI = "nonpositive_mi"


@dataclass(frozen=True)
class ModelSpec:
    """A model under evaluation, identified by name and parameter count."""

    name: str
    param_count: float

    def __post_init__(self):
        if not self.name:
            raise DataError("model name must be non-empty")
        if not (self.param_count >= 2.0):
            raise DataError(f"model {self.name}: param_count must be >= 2, got {self.param_count}")


@dataclass
class MetricRecord:
    """All metric values for one triple; absent fields mean excluded."""

    triple_id: str
    cooccur: float | None
    i_raw: float
    log_i: float | None = None
    mi_norm: float | None = None
    smi: dict[str, float] = field(default_factory=dict)
    excluded_reason: str | None = None


def cooccur_metric(counts: EntityCounts) -> float | None:
    """log2(n_so); None when the pair never co-occurs."""
    if counts.n_so == 0:
        return None
    return math.log2(counts.n_so)


def mi_raw(p_s: float, p_o: float, p_so: float, base: float = 2.0) -> float:
    """Pointwise mutual-information mass of the pair event.

    Zero joint probability maps to 0 by continuity.  The value is
    negative when the pair co-occurs less than independence predicts.
    """
    if p_so == 0.0:
        return 0.0
    if p_s <= 0.0 or p_o <= 0.0:
        raise DataError(f"inconsistent probabilities: p_so={p_so} > 0 with p_s={p_s}, p_o={p_o}")
    return p_so * (math.log(p_so / (p_s * p_o)) / math.log(base))


def normalize_mi(log_values: Sequence[float]) -> tuple[list[float], tuple[float, float]]:
    """Min-max normalize log-MI values to [0, 1].

    Returns the normalized list plus the (min, max) pair, which must be
    persisted: any later value (for example a bin mean) has to be
    mapped through the same constants to stay comparable.
    """
    if len(log_values) < 2:
        raise DataError(f"normalization needs at least 2 values, got {len(log_values)}")
    lo = min(log_values)
    hi = max(log_values)
    if lo == hi:
        raise DataError("degenerate normalization: all log-MI values are equal")
    span = hi - lo
    return [(v - lo) / span for v in log_values], (lo, hi)


def apply_norm(value: float, norm: tuple[float, float], tolerance: float = 1e-9) -> float:
    """Map one log-MI value through previously computed min-max constants.

    Values may drift just outside [lo, hi] through float arithmetic on
    aggregates; anything within ``tolerance`` is clamped, anything
    further out is refused.
    """
    lo, hi = norm
    if hi <= lo:
        raise DataError(f"invalid normalization constants: ({lo}, {hi})")
    x = (value - lo) / (hi - lo)
    if x < 0.0:
        if x < -tolerance:
            raise DataError(f"value {value} lies below the normalization range [{lo}, {hi}]")
        return 0.0
    if x > 1.0:
        if x > 1.0 + tolerance:
            raise DataError(f"value {value} lies above the normalization range [{lo}, {hi}]")
        return 1.0
    return x


def smi(mi_norm: float, param_count: float) -> float:
    """Size-discounted MI: mi_norm ** (1 + 1 / log2(param_count)).

    The exponent uses log base 2 regardless of the MI log base; the
    discount is a property of model capacity, not of the MI units.
    Fixed points 0 and 1 are exact, and for any param_count >= 2 the
    result never exceeds the input.
    """
    if not (0.0 <= mi_norm <= 1.0):
        raise DataError(f"smi input must lie in [0, 1], got {mi_norm}")
    if not (param_count >= 2.0):
        raise DataError(f"param_count must be >= 2, got {param_count}")
    return mi_norm ** (1.0 + 1.0 / math.log2(param_count))


def raw_frequency_baseline(counts: EntityCounts) -> float:
    """Unlogged co-document count, the naive baseline predictor."""
    return float(counts.n_so)


def compute_metrics(
    counts: Sequence[EntityCounts],
    n_docs: int,
    models: Sequence[ModelSpec],
    log_base: str = "2",
) -> tuple[list[MetricRecord], dict]:
    """Compute all metrics for a counts table.

    ``log_base`` affects ``i_raw`` and ``log_i`` only; min-max
    normalization absorbs the base change, so ``mi_norm`` and ``smi``
    are identical under either base.  Returns the records plus a
    metadata dict carrying the normalization constants.
    """
    if log_base not in LOG_BASES:
        raise DataError(f"log_base must be one of {sorted(LOG_BASES)}, got {log_base!r}")
    if n_docs < 1:
        raise DataError("n_docs must be >= 1")
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise DataError("duplicate model names")
    base = LOG_BASES[log_base]

    records: list[MetricRecord] = []
    normalizable: list[MetricRecord] = []
    for c in counts:
        c.validate(n_docs)
        co = cooccur_metric(c)
        if co is None:
            records.append(MetricRecord(
                triple_id=c.triple_id, cooccur=None, i_raw=0.0,
                excluded_reason=EXCLUDED_ZERO_COOCCURRENCE,
            ))
            continue
        p_s, p_o, p_so = c.n_s / n_docs, c.n_o / n_docs, c.n_so / n_docs
        i = mi_raw(p_s, p_o, p_so, base)
        rec = MetricRecord(triple_id=c.triple_id, cooccur=co, i_raw=i)
        if i <= 0.0:
            rec.excluded_reason = EXCLUDED_NONPOSITIVE_MI
        else:
            rec.log_i = math.log(i) / math.log(base)
            normalizable.append(rec)
        records.append(rec)

    if not normalizable:
        raise DataError("no triples with positive MI: nothing to normalize")
    try:
        normed, (lo, hi) = normalize_mi([r.log_i for r in normalizable])
    except DataError as exc:
        raise DataError(f"cannot normalize MI values: {exc}") from None
    for rec, v in zip(normalizable, normed):
        rec.mi_norm = v
        rec.smi = {m.name: smi(v, m.param_count) for m in models}

    meta = {
        "log_base": log_base,
        "n_docs": n_docs,
        "norm_min": lo,
        "norm_max": hi,
        "models": [{"name": m.name, "param_count": m.param_count} for m in models],
    }
    return records, meta


METRICS_FILE = "metrics.jsonl"
METRICS_META_FILE = "metrics_meta.json"


def write_metrics(records: Sequence[MetricRecord], meta: dict, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / METRICS_FILE, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({
                "triple_id": r.triple_id,
                "cooccur": r.cooccur,
                "i_raw": r.i_raw,
                "log_i": r.log_i,
                "mi_norm": r.mi_norm,
                "smi": r.smi if r.mi_norm is not None else None,
                "excluded_reason": r.excluded_reason,
            }, ensure_ascii=False) + "\n")
    with open(out_dir / METRICS_META_FILE, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metrics(in_dir: str | Path) -> tuple[list[MetricRecord], dict]:
    in_dir = Path(in_dir)
    metrics_path = in_dir / METRICS_FILE
    meta_path = in_dir / METRICS_META_FILE
    for p in (metrics_path, meta_path):
        if not p.exists():
            raise DataError(f"missing metrics file: {p}")
    with open(meta_path, encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{meta_path}: invalid JSON ({exc})") from None
    records = []
    with open(metrics_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec = MetricRecord(
                    triple_id=str(obj["triple_id"]),
                    cooccur=obj["cooccur"],
                    i_raw=float(obj["i_raw"]),
                    log_i=obj.get("log_i"),
                    mi_norm=obj.get("mi_norm"),
                    smi=obj.get("smi") or {},
                    excluded_reason=obj.get("excluded_reason"),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise DataError(f"{metrics_path}:{lineno}: malformed metrics record") from None
            _check_record_shape(rec, f"{metrics_path}:{lineno}")
            records.append(rec)
    if not records:
        raise DataError(f"{metrics_path}: no metric records")
    return records, meta


def _check_record_shape(rec: MetricRecord, origin: str) -> None:
    """Exactly one exclusion reason, and fields consistent with it."""
    if rec.excluded_reason is None:
        if rec.cooccur is None or rec.log_i is None or rec.mi_norm is None:
            raise DataError(f"{origin}: non-excluded record missing metric values")
    elif rec.excluded_reason == EXCLUDED_ZERO_COOCCURRENCE:
        if rec.cooccur is not None or rec.mi_norm is not None:
            raise DataError(f"{origin}: zero-cooccurrence record carries metric values")
    elif rec.excluded_reason == EXCLUDED_NONPOSITIVE_MI:
        if rec.cooccur is None:
            raise DataError(f"{origin}: nonpositive-MI record must keep its cooccur value")
        if rec.mi_norm is not None or rec.log_i is not None:
            raise DataError(f"{origin}: nonpositive-MI record carries MI values")
    else:
        raise DataError(f"{origin}: unknown excluded_reason {rec.excluded_reason!r}")
