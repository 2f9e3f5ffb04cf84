"""Loading and writing of relational triples and prompt templates.

A triple is (id, relation, subject, object).  Two interchange formats
are supported: four-column TSV without a header, and JSONL with one
object per line.  Templates map a relation name to a list of prompt
strings, each containing the subject placeholder ``[S]`` exactly once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import DataError

PLACEHOLDER = "[S]"

_TRIPLE_KEYS = ("triple_id", "relation", "subject", "object")


@dataclass(frozen=True)
class Triple:
    triple_id: str
    relation: str
    subject: str
    object: str

    def validate(self) -> None:
        if not self.triple_id:
            raise DataError("triple with empty id")
        if not self.subject:
            raise DataError(f"triple {self.triple_id}: empty subject")
        if not self.object:
            raise DataError(f"triple {self.triple_id}: empty object")


def _check_unique_ids(triples: list[Triple], origin: str) -> None:
    seen: set[str] = set()
    for t in triples:
        if t.triple_id in seen:
            raise DataError(f"{origin}: duplicate triple id {t.triple_id!r}")
        seen.add(t.triple_id)


def load_triples(path: str | Path) -> list[Triple]:
    """Load triples from TSV (``.tsv``) or JSONL (anything else)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"triples file does not exist: {path}")
    loader = _load_tsv if path.suffix == ".tsv" else _load_jsonl
    triples = loader(path)
    if not triples:
        raise DataError(f"{path}: no triples found")
    for t in triples:
        t.validate()
    _check_unique_ids(triples, str(path))
    return triples


def _load_tsv(path: Path) -> list[Triple]:
    triples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 tab-separated columns, got {len(cols)}")
            triples.append(Triple(*cols))
    return triples


def _load_jsonl(path: Path) -> list[Triple]:
    triples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise DataError(f"{path}:{lineno}: malformed JSON line") from None
            missing = [k for k in _TRIPLE_KEYS if k not in obj]
            if missing:
                raise DataError(f"{path}:{lineno}: triple record missing {missing}")
            triples.append(Triple(*(str(obj[k]) for k in _TRIPLE_KEYS)))
    return triples


def write_triples(triples: Iterable[Triple], path: str | Path) -> None:
    """Write triples in the format implied by the file extension."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            if path.suffix == ".tsv":
                for field in (t.triple_id, t.relation, t.subject, t.object):
                    if "\t" in field or "\n" in field:
                        raise DataError(f"triple {t.triple_id}: field contains tab or newline, not representable as TSV")
                fh.write(f"{t.triple_id}\t{t.relation}\t{t.subject}\t{t.object}\n")
            else:
                fh.write(json.dumps({
                    "triple_id": t.triple_id,
                    "relation": t.relation,
                    "subject": t.subject,
                    "object": t.object,
                }, ensure_ascii=False) + "\n")


def load_templates(path: str | Path) -> dict[str, list[str]]:
    """Load the relation-to-prompts map and validate placeholders."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"templates file does not exist: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise DataError(f"{path}: templates root must be an object")
    if not data:
        raise DataError(f"{path}: template map is empty")
    for relation, prompts in data.items():
        if not isinstance(prompts, list) or not prompts:
            raise DataError(f"{path}: relation {relation!r} must map to a non-empty list")
        for p in prompts:
            if not isinstance(p, str):
                raise DataError(f"{path}: relation {relation!r} has a non-string template")
            if p.count(PLACEHOLDER) != 1:
                raise DataError(
                    f"{path}: template {p!r} for relation {relation!r} must contain {PLACEHOLDER} exactly once"
                )
    return data


def render_prompt(template: str, subject: str) -> str:
    """Substitute the subject into a template."""
    if template.count(PLACEHOLDER) != 1:
        raise DataError(f"template {template!r} must contain {PLACEHOLDER} exactly once")
    return template.replace(PLACEHOLDER, subject)


def check_template_coverage(triples: Iterable[Triple], templates: dict[str, list[str]]) -> list[str]:
    """Return relations used by triples but absent from the templates."""
    used = {t.relation for t in triples}
    return sorted(used - set(templates))
