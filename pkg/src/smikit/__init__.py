"""smikit: corpus co-occurrence statistics as predictors of QA accuracy.

The pipeline: scan a corpus for entity pair occurrences, turn counts
into co-occurrence and mutual-information metrics, discount MI by
model size, then regress question-answering accuracy on binned metric
values and compare predictors.
"""

__version__ = "0.1.0"

from .analysis import (
    AccuracyRecord,
    Bin,
    FitResult,
    TTestResult,
    bin_by_metric,
    build_report,
    derive_bin_smi,
    fit_linear,
    group_accuracies,
    load_accuracies,
    mse_per_task,
    paired_t_test,
    percentile_filter,
)
from .corpus import Document, NormalizationPolicy, normalize_text, open_corpus
from .errors import DataError, InternalError, SmikitError
from .matcher import (
    EntityCounts,
    PatternIndex,
    aggregate_counts,
    build_index,
    count_corpus,
    merge_counts,
    to_probabilities,
)
from .metrics import (
    MetricRecord,
    ModelSpec,
    compute_metrics,
    cooccur_metric,
    mi_raw,
    normalize_mi,
    raw_frequency_baseline,
    smi,
)
from .synth import SynthSpec, generate_synth
from .triples import Triple, load_templates, load_triples, render_prompt

__all__ = [
    "AccuracyRecord", "Bin", "Document", "DataError", "EntityCounts", "FitResult",
    "InternalError", "MetricRecord", "ModelSpec", "NormalizationPolicy",
    "PatternIndex", "SmikitError", "SynthSpec", "TTestResult", "Triple",
    "aggregate_counts", "bin_by_metric", "build_index", "build_report",
    "compute_metrics", "cooccur_metric", "count_corpus", "derive_bin_smi",
    "fit_linear", "generate_synth", "group_accuracies", "load_accuracies",
    "load_templates", "load_triples",
    "merge_counts", "mi_raw", "mse_per_task", "normalize_mi", "normalize_text",
    "open_corpus", "paired_t_test", "percentile_filter", "raw_frequency_baseline",
    "render_prompt", "smi", "to_probabilities",
]
