"""Command-line interface.

Subcommands mirror the pipeline stages: ``count`` scans a corpus,
``metrics`` turns counts into metric records, ``fit`` regresses
accuracy on binned metrics and writes the report, ``ttest`` compares
paired R-squared tables, ``synth`` generates a ground-truth dataset,
``validate`` checks input files, and ``report`` re-renders CSV and SVG
from an existing report.

Options resolve as: explicit flag, then JSON config (via ``--config``),
then built-in default.  Exit codes: 0 success, 1 usage error, 2 data
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analysis import (
    build_report,
    group_accuracies,
    load_accuracies,
    paired_t_test,
    ttest_to_dict,
    write_bins_csv,
    write_report,
)
from .corpus import (
    COMPRESSIONS,
    CORPUS_FORMATS,
    NormalizationPolicy,
    corpus_fingerprint,
    open_corpus,
)
from .errors import DataError, InternalError
from .matcher import build_index, count_corpus, read_counts, resolve_triples, write_counts
from .metrics import LOG_BASES, ModelSpec, compute_metrics, read_metrics, write_metrics
from .svg import write_report_svgs
from .synth import SynthSpec, generate_synth
from .triples import check_template_coverage, load_templates, load_triples

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

THREADS_ENV = "SMIKIT_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems via exit code 1."""

    def error(self, message):
        raise UsageError(message)


class Settings:
    """Flag-over-config-over-default option resolution."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: dict = {}
        path = getattr(args, "config", None)
        if path:
            try:
                with open(path, encoding="utf-8") as fh:
                    self.config = json.load(fh)
            except OSError as exc:
                raise DataError(f"cannot read config {path}: {exc}") from None
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON ({exc})") from None
            if not isinstance(self.config, dict):
                raise DataError(f"{path}: config root must be an object")

    def get(self, name: str, default=None, required: bool = False):
        value = getattr(self.args, name, None)
        if value is None:
            value = self.config.get(name, default)
        if required and value is None:
            raise UsageError(f"missing required option: --{name.replace('_', '-')}")
        return value

    def get_flag(self, name: str) -> bool:
        return bool(self.get(name, default=False))


def _parse_models(values, config_models) -> list[ModelSpec]:
    if values:
        models = []
        for item in values:
            name, sep, count = item.partition("=")
            if not sep or not name:
                raise UsageError(f"--model expects NAME=PARAM_COUNT, got {item!r}")
            try:
                models.append(ModelSpec(name, float(count)))
            except ValueError:
                raise UsageError(f"--model {item!r}: param count is not a number") from None
        return models
    if config_models:
        try:
            return [ModelSpec(str(m["name"]), float(m["param_count"])) for m in config_models]
        except (KeyError, TypeError, ValueError):
            raise DataError("config models must be objects with name and param_count") from None
    return []


def _resolve_threads(settings: Settings) -> int:
    value = settings.get("threads")
    if value is None:
        env = os.environ.get(THREADS_ENV)
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if value is None:
        value = 1
    value = int(value)
    if value < 1:
        raise UsageError(f"threads must be >= 1, got {value}")
    return value


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_count(settings: Settings) -> int:
    corpus_paths = settings.get("corpus", required=True)
    if isinstance(corpus_paths, str):
        corpus_paths = [corpus_paths]
    triples_path = settings.get("triples", required=True)
    out_dir = settings.get("out", required=True)
    fmt = settings.get("format", "jsonl-text-field")
    compression = settings.get("compression", "auto")
    text_field = settings.get("text_field", "text")
    policy = NormalizationPolicy(
        case_fold=not settings.get_flag("case_sensitive"),
        word_boundaries=not settings.get_flag("substring"),
    )
    threads = _resolve_threads(settings)

    triples = load_triples(triples_path)
    index = build_index(triples, policy)
    compiled = resolve_triples(index, triples)
    docs = open_corpus(
        corpus_paths, format=fmt, compression=compression,
        text_field=text_field, skip_malformed=settings.get_flag("skip_malformed"),
    )
    counts, n_docs = count_corpus(index, compiled, docs, threads=threads)
    if n_docs == 0:
        raise DataError("corpus contains no documents")
    fingerprint = corpus_fingerprint(corpus_paths)
    write_counts(counts, n_docs, policy, fingerprint, out_dir)
    print(f"scanned {n_docs} documents, wrote counts for {len(counts)} triples to {out_dir}")
    return EXIT_OK


def cmd_metrics(settings: Settings) -> int:
    counts_dir = settings.get("counts", required=True)
    out_dir = settings.get("out", required=True)
    log_base = str(settings.get("log_base", "2"))
    if log_base not in LOG_BASES:
        raise UsageError(f"--log-base must be one of {sorted(LOG_BASES)}, got {log_base!r}")
    models = _parse_models(settings.get("model"), settings.config.get("models"))
    if not models:
        raise UsageError("at least one --model NAME=PARAM_COUNT is required")

    counts, meta = read_counts(counts_dir)
    records, out_meta = compute_metrics(counts, int(meta["n_docs"]), models, log_base=log_base)
    write_metrics(records, out_meta, out_dir)
    n_excluded = sum(1 for r in records if r.excluded_reason)
    print(f"wrote metrics for {len(records)} triples ({n_excluded} excluded) to {out_dir}")
    return EXIT_OK


def cmd_fit(settings: Settings) -> int:
    metrics_dir = settings.get("metrics", required=True)
    accuracy_paths = settings.get("accuracies", required=True)
    if isinstance(accuracy_paths, str):
        accuracy_paths = [accuracy_paths]
    out_dir = Path(settings.get("out", required=True))
    bin_width = float(settings.get("bin_width", 0.2))
    min_bin_count = int(settings.get("min_bin_count", 1))
    low_fraction = float(settings.get("low_fraction", 0.2))

    records, meta = read_metrics(metrics_dir)
    try:
        models = [ModelSpec(str(m["name"]), float(m["param_count"])) for m in meta["models"]]
    except (KeyError, TypeError, ValueError):
        raise DataError("metrics metadata does not list its models") from None
    if not models:
        raise DataError("metrics were computed without any models; re-run the metrics step with --model")
    acc_records = load_accuracies(accuracy_paths)
    grouped = group_accuracies(acc_records, {r.triple_id for r in records})

    config_echo = {
        "metrics": str(metrics_dir),
        "accuracies": [str(p) for p in accuracy_paths],
        "bin_width": bin_width,
        "min_bin_count": min_bin_count,
        "low_fraction": low_fraction,
    }
    report = build_report(
        records, meta, models, grouped,
        bin_width=bin_width, min_bin_count=min_bin_count, low_fraction=low_fraction,
        config_echo=config_echo, created_at=_timestamp(),
    )
    path = write_report(report, out_dir)
    write_bins_csv(report, out_dir / "bins.csv")
    if settings.get_flag("svg"):
        write_report_svgs(report, out_dir)
    print(f"wrote report to {path}")
    return EXIT_OK


def cmd_ttest(settings: Settings) -> int:
    pairs_path = settings.get("pairs", required=True)
    try:
        with open(pairs_path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read pairs file {pairs_path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{pairs_path}: invalid JSON ({exc})") from None
    if isinstance(data, dict) and "pairs" in data:
        data = data["pairs"]
    if not isinstance(data, list):
        raise DataError(f"{pairs_path}: expected a JSON list of pairs")
    pairs = []
    for i, item in enumerate(data):
        try:
            if isinstance(item, dict):
                pairs.append((float(item["r2_mi"]), float(item["r2_smi"])))
            else:
                a, b = item
                pairs.append((float(a), float(b)))
        except (KeyError, TypeError, ValueError):
            raise DataError(
                f"{pairs_path}: entry {i} must be [a, b] or have r2_mi and r2_smi fields"
            ) from None
    result = ttest_to_dict(paired_t_test(pairs))
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    out = settings.get("out")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_synth(settings: Settings) -> int:
    spec_path = settings.get("spec", required=True)
    out_dir = settings.get("out", required=True)
    spec = SynthSpec.from_json(spec_path)
    manifest = generate_synth(spec, out_dir)
    print(f"generated {manifest['n_docs']} documents and {manifest['n_triples']} triples in {out_dir}")
    return EXIT_OK


def cmd_validate(settings: Settings) -> int:
    triples_path = settings.get("triples", required=True)
    triples = load_triples(triples_path)
    print(f"triples: {len(triples)} records ok")
    templates_path = settings.get("templates")
    if templates_path:
        templates = load_templates(templates_path)
        print(f"templates: {sum(len(v) for v in templates.values())} prompts for {len(templates)} relations ok")
        uncovered = check_template_coverage(triples, templates)
        if uncovered:
            print(f"warning: no templates for relations: {', '.join(uncovered)}", file=sys.stderr)
    accuracy_paths = settings.get("accuracies")
    if accuracy_paths:
        if isinstance(accuracy_paths, str):
            accuracy_paths = [accuracy_paths]
        acc = load_accuracies(accuracy_paths)
        group_accuracies(acc, {t.triple_id for t in triples})
        print(f"accuracies: {len(acc)} records ok")
    counts_dir = settings.get("counts")
    if counts_dir:
        counts, meta = read_counts(counts_dir)
        known = {t.triple_id for t in triples}
        stray = sorted(c.triple_id for c in counts if c.triple_id not in known)
        if stray:
            raise DataError(f"counts reference unknown triple ids: {stray[:5]}")
        print(f"counts: {len(counts)} records over {meta['n_docs']} documents ok")
    return EXIT_OK


def cmd_report(settings: Settings) -> int:
    report_path = settings.get("report", required=True)
    out_dir = Path(settings.get("out", required=True))
    try:
        with open(report_path, encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read report {report_path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{report_path}: invalid JSON ({exc})") from None
    if "models" not in report:
        raise DataError(f"{report_path}: not a report file (missing models)")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_bins_csv(report, out_dir / "bins.csv")
    if settings.get_flag("svg"):
        write_report_svgs(report, out_dir)
    print(f"rendered report tables to {out_dir}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="smikit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"smikit {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override its keys")
        return p

    p = add("count", "scan a corpus for entity co-occurrence counts")
    p.add_argument("--corpus", nargs="+", help="corpus files, scanned in order")
    p.add_argument("--triples", help="triples file (TSV or JSONL)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=CORPUS_FORMATS, help="corpus layout (default jsonl-text-field)")
    p.add_argument("--compression", choices=COMPRESSIONS, help="corpus compression (default auto)")
    p.add_argument("--text-field", dest="text_field", help="JSONL field holding the text (default text)")
    p.add_argument("--threads", type=int, help=f"worker threads (default 1, or {THREADS_ENV})")
    p.add_argument("--case-sensitive", dest="case_sensitive", action="store_true", default=None,
                   help="match case exactly instead of casefolding")
    p.add_argument("--substring", action="store_true", default=None,
                   help="count matches inside words instead of requiring word boundaries")
    p.add_argument("--skip-malformed", dest="skip_malformed", action="store_true", default=None,
                   help="drop malformed corpus lines instead of failing")

    p = add("metrics", "compute co-occurrence and MI metrics from counts")
    p.add_argument("--counts", help="directory produced by count")
    p.add_argument("--out", help="output directory")
    p.add_argument("--log-base", dest="log_base", choices=sorted(LOG_BASES), help="MI log base (default 2)")
    p.add_argument("--model", action="append", help="model as NAME=PARAM_COUNT, repeatable")

    p = add("fit", "bin metrics, fit accuracy lines, write the report")
    p.add_argument("--metrics", help="directory produced by metrics")
    p.add_argument("--accuracies", nargs="+", help="accuracy JSONL files")
    p.add_argument("--out", help="output directory")
    p.add_argument("--bin-width", dest="bin_width", type=float, help="bin width (default 0.2)")
    p.add_argument("--min-bin-count", dest="min_bin_count", type=int,
                   help="drop bins with fewer members (default 1)")
    p.add_argument("--low-fraction", dest="low_fraction", type=float,
                   help="fraction for the low-frequency subset fit (default 0.2)")
    p.add_argument("--svg", action="store_true", default=None, help="also write SVG charts")

    p = add("ttest", "paired t-test over an R-squared table")
    p.add_argument("--pairs", help="JSON file with [r2_mi, r2_smi] pairs or objects")
    p.add_argument("--out", help="optional path for the result JSON")

    p = add("synth", "generate a synthetic corpus with known ground truth")
    p.add_argument("--spec", help="synth spec JSON")
    p.add_argument("--out", help="output directory")

    p = add("validate", "check input files without running the pipeline")
    p.add_argument("--triples", help="triples file")
    p.add_argument("--templates", help="templates JSON")
    p.add_argument("--accuracies", nargs="+", help="accuracy JSONL files")
    p.add_argument("--counts", help="counts directory")

    p = add("report", "re-render CSV and SVG outputs from a report")
    p.add_argument("--report", help="report.json path")
    p.add_argument("--out", help="output directory")
    p.add_argument("--svg", action="store_true", default=None, help="also write SVG charts")

    return parser


_COMMANDS = {
    "count": cmd_count,
    "metrics": cmd_metrics,
    "fit": cmd_fit,
    "ttest": cmd_ttest,
    "synth": cmd_synth,
    "validate": cmd_validate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](Settings(args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except BrokenPipeError:
        return EXIT_OK
    except Exception as exc:  # last resort: refuse to die with a misleading code
        print(f"internal error: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())
