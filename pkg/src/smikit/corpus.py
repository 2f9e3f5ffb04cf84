"""Corpus streaming and text normalization.

Documents arrive as plain-text or JSONL files, optionally gzipped, and
are exposed as a flat iterator so downstream code never cares how the
corpus is laid out on disk.  Normalization is the single definition of
"the same text" used everywhere: entity strings and document text go
through the identical function, so matches are stable under case and
Unicode representation differences.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError

CORPUS_FORMATS = ("jsonl-text-field", "one-doc-per-line", "one-doc-per-file")
COMPRESSIONS = ("auto", "none", "gzip")


@dataclass(frozen=True)
class Document:
    """One corpus document with its stable position in scan order."""

    doc_index: int
    text: str


@dataclass(frozen=True)
class NormalizationPolicy:
    """Controls how text is canonicalized before matching.

    ``case_fold`` lowercases aggressively (Unicode casefold).
    ``word_boundaries`` is consumed by the matcher, not here, but it
    travels with the policy because both together define what counts
    as an occurrence and must be recorded next to any counts file.
    """

    case_fold: bool = True
    word_boundaries: bool = True

    def to_dict(self) -> dict:
        return {"case_fold": self.case_fold, "word_boundaries": self.word_boundaries}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationPolicy":
        try:
            return cls(case_fold=bool(d["case_fold"]), word_boundaries=bool(d["word_boundaries"]))
        except KeyError as exc:
            raise DataError(f"normalization policy missing key: {exc}") from None


def normalize_text(text: str, policy: NormalizationPolicy = NormalizationPolicy()) -> str:
    """Canonicalize ``text``: casefold, NFC, collapse runs of whitespace.

    Casefold runs before NFC because casefolding can emit decomposed
    sequences (U+0390 is the classic case); folding first and then
    recomposing makes the function idempotent.
    """
    if policy.case_fold:
        text = text.casefold()
    text = unicodedata.normalize("NFC", text)
    return " ".join(text.split())


def _open_stream(path: Path, compression: str) -> io.TextIOWrapper:
    if compression == "auto":
        compression = "gzip" if path.suffix == ".gz" else "none"
    try:
        if compression == "gzip":
            return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
        return open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open corpus file {path}: {exc}") from None


def open_corpus(
    paths: Iterable[str | Path],
    format: str = "jsonl-text-field",
    compression: str = "auto",
    text_field: str = "text",
    skip_malformed: bool = False,
) -> Iterator[Document]:
    """Stream documents from ``paths`` in order, assigning dense indices.

    Malformed JSONL lines (bad JSON, missing ``text_field``) raise
    :class:`DataError` naming the file and line number, unless
    ``skip_malformed`` is set, in which case they are dropped and the
    document indices stay dense.
    """
    if format not in CORPUS_FORMATS:
        raise DataError(f"unknown corpus format: {format!r} (expected one of {CORPUS_FORMATS})")
    if compression not in COMPRESSIONS:
        raise DataError(f"unknown compression: {compression!r} (expected one of {COMPRESSIONS})")
    paths = [Path(p) for p in paths]
    if not paths:
        raise DataError("no corpus paths given")

    index = 0
    for path in paths:
        if not path.exists():
            raise DataError(f"corpus file does not exist: {path}")
        with _open_stream(path, compression) as stream:
            try:
                if format == "one-doc-per-file":
                    yield Document(index, stream.read())
                    index += 1
                    continue
                for lineno, line in enumerate(stream, start=1):
                    line = line.rstrip("\n").rstrip("\r")
                    if format == "one-doc-per-line":
                        yield Document(index, line)
                        index += 1
                        continue
                    try:
                        obj = json.loads(line)
                    except json.JSONDecodeError:
                        if skip_malformed:
                            continue
                        raise DataError(f"{path}:{lineno}: malformed JSON line") from None
                    if not isinstance(obj, dict) or text_field not in obj:
                        if skip_malformed:
                            continue
                        raise DataError(f"{path}:{lineno}: JSONL record has no {text_field!r} field")
                    text = obj[text_field]
                    if not isinstance(text, str):
                        if skip_malformed:
                            continue
                        raise DataError(f"{path}:{lineno}: field {text_field!r} is not a string")
                    yield Document(index, text)
                    index += 1
            except UnicodeDecodeError as exc:
                raise DataError(f"{path}: not valid UTF-8 ({exc})") from None
            except OSError as exc:
                raise DataError(f"error reading {path}: {exc}") from None


def corpus_fingerprint(paths: Iterable[str | Path]) -> str:
    """SHA-256 over the per-file digests of the raw corpus bytes.

    Hashing digest-of-digests keeps the fingerprint stable for a given
    ordered list of files without holding more than one buffer at a
    time.
    """
    outer = hashlib.sha256()
    for path in paths:
        path = Path(path)
        inner = hashlib.sha256()
        try:
            with open(path, "rb") as fh:
                for chunk in iter(lambda: fh.read(1 << 20), b""):
                    inner.update(chunk)
        except OSError as exc:
            raise DataError(f"cannot fingerprint corpus file {path}: {exc}") from None
        outer.update(inner.digest())
    return outer.hexdigest()
