"""Synthetic corpus generation with known ground truth.

Builds a corpus of token-bag documents where each triple's subject and
object tokens appear with chosen marginal probabilities and a tunable
degree of coupling, plus an accuracy table generated from a known
linear law on a chosen metric.  Because every probability is known and
every count is recorded at generation time, end-to-end runs of the
real pipeline can be checked against exact expectations.

Determinism contract: one counter-based generator is seeded from the
spec, and draws happen in a fixed documented order (subject marginals,
object marginals, per-triple noise, then per-triple document arrays in
triple order).  Same spec, same bytes out.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import NormalizationPolicy, corpus_fingerprint
from .errors import DataError
from .matcher import EntityCounts, write_counts
from .metrics import ModelSpec, compute_metrics
from .triples import Triple, write_triples

ACCURACY_TARGETS = ("cooccur", "mi_norm", "smi")


@dataclass(frozen=True)
class AccuracyLaw:
    """Linear accuracy model: acc = intercept + slope * metric + noise."""

    slope: float = 0.3
    intercept: float = 0.1
    noise_sd: float = 0.0
    target: str = "mi_norm"
    model_name: str = "synth"
    param_count: float = float(2 ** 30)
    n_responses: int = 400

    def validate(self) -> None:
        if self.target not in ACCURACY_TARGETS:
            raise DataError(f"accuracy target must be one of {ACCURACY_TARGETS}, got {self.target!r}")
        if self.noise_sd < 0.0:
            raise DataError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.n_responses < 1:
            raise DataError(f"n_responses must be >= 1, got {self.n_responses}")
        if not self.model_name:
            raise DataError("model_name must be non-empty")
        if self.param_count < 2.0:
            raise DataError(f"param_count must be >= 2, got {self.param_count}")


@dataclass(frozen=True)
class SynthSpec:
    """Everything needed to regenerate a synthetic dataset."""

    n_docs: int
    n_triples: int
    seed: int
    p_s_range: tuple[float, float] = (0.02, 0.2)
    p_o_range: tuple[float, float] = (0.02, 0.2)
    coupling: float = 0.5
    relation: str = "linked"
    accuracy: AccuracyLaw = field(default_factory=AccuracyLaw)

    def validate(self) -> None:
        if self.n_docs < 1:
            raise DataError(f"n_docs must be >= 1, got {self.n_docs}")
        if self.n_triples < 1:
            raise DataError(f"n_triples must be >= 1, got {self.n_triples}")
        if self.seed < 0:
            raise DataError(f"seed must be >= 0, got {self.seed}")
        for label, (lo, hi) in (("p_s_range", self.p_s_range), ("p_o_range", self.p_o_range)):
            if not (0.0 < lo <= hi < 1.0):
                raise DataError(f"{label} must satisfy 0 < lo <= hi < 1, got ({lo}, {hi})")
        if not (0.0 <= self.coupling <= 1.0):
            raise DataError(f"coupling must lie in [0, 1], got {self.coupling}")
        self.accuracy.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        try:
            acc = AccuracyLaw(**d.pop("accuracy", {}))
            for key in ("p_s_range", "p_o_range"):
                if key in d:
                    d[key] = tuple(d[key])
            spec = cls(accuracy=acc, **d)
        except TypeError as exc:
            raise DataError(f"invalid synth spec: {exc}") from None
        spec.validate()
        return spec

    @classmethod
    def from_json(cls, path: str | Path) -> "SynthSpec":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise DataError(f"cannot read synth spec {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None


def _token(i: int, which: str) -> str:
    return f"ent_{i}_{which}"


def generate_synth(spec: SynthSpec, out_dir: str | Path) -> dict:
    """Generate corpus, triples, ground-truth counts, and accuracies.

    Per triple and document, the subject token is present when a
    uniform draw falls under its marginal.  With probability
    ``coupling`` the object reuses the subject's draw (pushing the
    joint probability to min(p_s, p_o)); otherwise it uses an
    independent one.  The joint is therefore an exact mixture
    c*min(p_s, p_o) + (1-c)*p_s*p_o.

    Returns the manifest, which is also written to ``manifest.json``.
    """
    spec.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.Philox(key=spec.seed))

    n, t = spec.n_docs, spec.n_triples
    p_s = rng.uniform(spec.p_s_range[0], spec.p_s_range[1], size=t)
    p_o = rng.uniform(spec.p_o_range[0], spec.p_o_range[1], size=t)
    noise = rng.standard_normal(t)

    doc_tokens: list[list[str]] = [[] for _ in range(n)]
    counts: list[EntityCounts] = []
    triples: list[Triple] = []
    width = len(str(t - 1))
    for i in range(t):
        u = rng.random((3, n))
        coupled = u[0] < spec.coupling
        s_present = u[1] < p_s[i]
        o_present = np.where(coupled, u[1] < p_o[i], u[2] < p_o[i])
        tid = f"t{i:0{width}d}"
        s_tok, o_tok = _token(i, "s"), _token(i, "o")
        triples.append(Triple(tid, spec.relation, s_tok, o_tok))
        for d in np.flatnonzero(s_present):
            doc_tokens[d].append(s_tok)
        for d in np.flatnonzero(o_present):
            doc_tokens[d].append(o_tok)
        counts.append(EntityCounts(
            triple_id=tid,
            n_s=int(s_present.sum()),
            n_o=int(o_present.sum()),
            n_so=int((s_present & o_present).sum()),
        ))

    corpus_path = out_dir / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for tokens in doc_tokens:
            fh.write(json.dumps({"text": " ".join(tokens)}) + "\n")
    triples_path = out_dir / "triples.tsv"
    write_triples(triples, triples_path)

    counts_dir = out_dir / "counts_true"
    write_counts(counts, n, NormalizationPolicy(), corpus_fingerprint([corpus_path]), counts_dir)

    law = spec.accuracy
    models = [ModelSpec(law.model_name, law.param_count)] if law.target == "smi" else []
    records, meta = compute_metrics(counts, n, models, log_base="2")

    acc_path = out_dir / "accuracy.jsonl"
    n_written = 0
    with open(acc_path, "w", encoding="utf-8") as fh:
        for rec, eps in zip(records, noise):
            if law.target == "cooccur":
                value = rec.cooccur
            elif law.target == "mi_norm":
                value = rec.mi_norm
            else:
                value = rec.smi.get(law.model_name)
            if value is None:
                continue
            raw = law.intercept + law.slope * value + law.noise_sd * float(eps)
            raw = min(1.0, max(0.0, raw))
            accuracy = round(raw * law.n_responses) / law.n_responses
            fh.write(json.dumps({
                "triple_id": rec.triple_id,
                "model": law.model_name,
                "accuracy": accuracy,
                "n_responses": law.n_responses,
            }) + "\n")
            n_written += 1

    excluded: dict[str, int] = {}
    for rec in records:
        if rec.excluded_reason:
            excluded[rec.excluded_reason] = excluded.get(rec.excluded_reason, 0) + 1
    spec_dict = asdict(spec)
    spec_dict["p_s_range"] = list(spec.p_s_range)
    spec_dict["p_o_range"] = list(spec.p_o_range)
    manifest = {
        "spec": spec_dict,
        "files": {
            "corpus": corpus_path.name,
            "triples": triples_path.name,
            "counts_true": counts_dir.name,
            "accuracy": acc_path.name,
        },
        "n_docs": n,
        "n_triples": t,
        "n_accuracy_rows": n_written,
        "excluded": excluded,
        "normalization": {"norm_min": meta["norm_min"], "norm_max": meta["norm_max"]},
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
