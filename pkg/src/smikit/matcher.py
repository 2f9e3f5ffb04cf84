"""Multi-pattern entity matching and document-frequency counting.

All entity surface forms are compiled into one Aho-Corasick automaton,
so a corpus pass costs O(total text length) regardless of how many
entities are tracked.  Counting is document-level presence: a pattern
either occurs in a document or it does not, and repeated occurrences
inside one document do not matter.  Sharded scans produce partial
counts that merge associatively, which makes threaded scans
bit-identical to a sequential pass.
"""

from __future__ import annotations

import json
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .corpus import Document, NormalizationPolicy, normalize_text
from .errors import DataError, InternalError
from .triples import Triple

# A flanking character in this set blocks a word-boundary match.
# Deliberately ASCII-only: underscores and accented letters act as
# separators, which matches how the entity strings are tokenized.
_ASCII_ALNUM = frozenset("0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")


@dataclass(frozen=True)
class EntityCounts:
    """Document frequencies for one triple over a scanned corpus."""

    triple_id: str
    n_s: int
    n_o: int
    n_so: int

    def validate(self, n_docs: int) -> None:
        ok = 0 <= self.n_so <= min(self.n_s, self.n_o) and max(self.n_s, self.n_o) <= n_docs
        if not ok:
            raise DataError(
                f"counts for {self.triple_id} violate 0 <= n_so <= min(n_s, n_o) <= n_docs: "
                f"n_s={self.n_s} n_o={self.n_o} n_so={self.n_so} n_docs={n_docs}"
            )


class PatternIndex:
    """Aho-Corasick automaton over normalized entity strings.

    Build once with :func:`build_index`, then call
    :meth:`scan_document` with already-normalized text.  Patterns are
    deduplicated; ``pattern_id(s)`` maps a normalized surface form to
    its slot in the automaton.
    """

    def __init__(self, patterns: Sequence[str], policy: NormalizationPolicy):
        self.policy = policy
        self.patterns = list(patterns)
        self._ids = {p: i for i, p in enumerate(self.patterns)}
        if len(self._ids) != len(self.patterns):
            raise InternalError("duplicate patterns passed to PatternIndex")
        self._lengths = [len(p) for p in self.patterns]
        self._goto, self._fail, self._out = _build_automaton(self.patterns)

    def __len__(self) -> int:
        return len(self.patterns)

    def pattern_id(self, normalized: str) -> int:
        try:
            return self._ids[normalized]
        except KeyError:
            raise InternalError(f"pattern not in index: {normalized!r}") from None

    def scan_document(self, text: str) -> set[int]:
        """Return the set of pattern ids present in ``text``.

        ``text`` must already be normalized under this index's policy.
        With word boundaries on, a hit counts only when the characters
        flanking the matched span are absent or non-ASCII-alphanumeric.
        """
        goto = self._goto
        fail = self._fail
        out = self._out
        lengths = self._lengths
        bounded = self.policy.word_boundaries
        n = len(text)
        found: set[int] = set()
        state = 0
        for j in range(n):
            ch = text[j]
            while state and ch not in goto[state]:
                state = fail[state]
            state = goto[state].get(ch, 0)
            hits = out[state]
            if not hits:
                continue
            for pid in hits:
                if pid in found:
                    continue
                if bounded:
                    start = j - lengths[pid] + 1
                    if start > 0 and text[start - 1] in _ASCII_ALNUM:
                        continue
                    if j + 1 < n and text[j + 1] in _ASCII_ALNUM:
                        continue
                found.add(pid)
            if len(found) == len(lengths):
                break
        return found


def _build_automaton(patterns: Sequence[str]) -> tuple[list[dict[str, int]], list[int], list[tuple[int, ...]]]:
    """Standard trie + BFS failure links + output propagation."""
    goto: list[dict[str, int]] = [{}]
    fail = [0]
    out: list[list[int]] = [[]]

    for pid, pattern in enumerate(patterns):
        state = 0
        for ch in pattern:
            nxt = goto[state].get(ch)
            if nxt is None:
                goto.append({})
                fail.append(0)
                out.append([])
                nxt = len(goto) - 1
                goto[state][ch] = nxt
            state = nxt
        out[state].append(pid)

    queue: deque[int] = deque()
    for child in goto[0].values():
        queue.append(child)  # failure of a depth-1 node is the root
    while queue:
        node = queue.popleft()
        for ch, child in goto[node].items():
            queue.append(child)
            f = fail[node]
            while f and ch not in goto[f]:
                f = fail[f]
            fail[child] = goto[f].get(ch, 0)
            # Parents are processed before children, so the failure
            # target's output list is already complete here.
            out[child].extend(out[fail[child]])
    return goto, fail, [tuple(o) for o in out]


def build_index(triples: Sequence[Triple], policy: NormalizationPolicy = NormalizationPolicy()) -> PatternIndex:
    """Compile the deduplicated subject and object strings of ``triples``."""
    patterns: list[str] = []
    seen: set[str] = set()
    for t in triples:
        for surface in (t.subject, t.object):
            norm = normalize_text(surface, policy)
            if not norm:
                raise DataError(f"triple {t.triple_id}: entity {surface!r} is empty after normalization")
            if norm not in seen:
                seen.add(norm)
                patterns.append(norm)
    return PatternIndex(patterns, policy)


@dataclass(frozen=True)
class CompiledTriples:
    """Triples resolved to pattern ids, the unit the counting loop works on."""

    triple_ids: tuple[str, ...]
    subject_pids: tuple[int, ...]
    object_pids: tuple[int, ...]


def resolve_triples(index: PatternIndex, triples: Sequence[Triple]) -> CompiledTriples:
    ids, spids, opids = [], [], []
    for t in triples:
        ids.append(t.triple_id)
        spids.append(index.pattern_id(normalize_text(t.subject, index.policy)))
        opids.append(index.pattern_id(normalize_text(t.object, index.policy)))
    return CompiledTriples(tuple(ids), tuple(spids), tuple(opids))


@dataclass
class PartialCounts:
    """Counts for a contiguous slice of the corpus.

    ``pattern_freq[pid]`` is the number of documents in the slice
    containing that pattern; ``pair_freq[k]`` is the number containing
    both entities of triple ``k``.  ``doc_ranges`` records which
    half-open document-index ranges this partial covers, so merges can
    refuse overlapping shards.
    """

    pattern_freq: list[int]
    pair_freq: list[int]
    n_docs: int
    doc_ranges: tuple[tuple[int, int], ...]

    @classmethod
    def empty(cls, n_patterns: int, n_triples: int) -> "PartialCounts":
        return cls([0] * n_patterns, [0] * n_triples, 0, ())


def scan_shard(
    index: PatternIndex,
    compiled: CompiledTriples,
    documents: Iterable[Document],
) -> PartialCounts:
    """Scan pre-normalized documents into a PartialCounts.

    Documents must arrive in ascending ``doc_index`` order and form a
    contiguous range; that is the normal shape of a corpus slice.
    """
    partial = PartialCounts.empty(len(index), len(compiled.triple_ids))
    pattern_freq = partial.pattern_freq
    pair_freq = partial.pair_freq
    by_subject = _triples_by_subject(compiled)
    first = last = None
    for doc in documents:
        if first is None:
            first = doc.doc_index
        elif doc.doc_index != last + 1:
            raise InternalError("shard documents are not contiguous")
        last = doc.doc_index
        present = index.scan_document(doc.text)
        partial.n_docs += 1
        if not present:
            continue
        for pid in present:
            pattern_freq[pid] += 1
            for k, opid in by_subject.get(pid, ()):
                if opid in present:
                    pair_freq[k] += 1
    if first is not None:
        partial.doc_ranges = ((first, last + 1),)
    return partial


def _triples_by_subject(compiled: CompiledTriples) -> dict[int, list[tuple[int, int]]]:
    """Index triple slots by subject pattern id.

    Lets the per-document pair check touch only triples whose subject
    actually matched, instead of the whole table.
    """
    by_subject: dict[int, list[tuple[int, int]]] = {}
    for k, spid in enumerate(compiled.subject_pids):
        by_subject.setdefault(spid, []).append((k, compiled.object_pids[k]))
    return by_subject


def merge_counts(a: PartialCounts, b: PartialCounts) -> PartialCounts:
    """Field-wise sum of two partials over disjoint document ranges.

    Merging is associative and commutative, and merging with an empty
    partial is the identity, so any merge tree over the same shards
    yields the same totals.
    """
    if len(a.pattern_freq) != len(b.pattern_freq) or len(a.pair_freq) != len(b.pair_freq):
        raise InternalError("cannot merge partial counts with different shapes")
    for lo_a, hi_a in a.doc_ranges:
        for lo_b, hi_b in b.doc_ranges:
            if lo_a < hi_b and lo_b < hi_a:
                raise InternalError(f"overlapping shards: [{lo_a},{hi_a}) and [{lo_b},{hi_b})")
    return PartialCounts(
        [x + y for x, y in zip(a.pattern_freq, b.pattern_freq)],
        [x + y for x, y in zip(a.pair_freq, b.pair_freq)],
        a.n_docs + b.n_docs,
        tuple(sorted(a.doc_ranges + b.doc_ranges)),
    )


def finalize_counts(partial: PartialCounts, compiled: CompiledTriples) -> list[EntityCounts]:
    counts = []
    for k, tid in enumerate(compiled.triple_ids):
        c = EntityCounts(
            triple_id=tid,
            n_s=partial.pattern_freq[compiled.subject_pids[k]],
            n_o=partial.pattern_freq[compiled.object_pids[k]],
            n_so=partial.pair_freq[k],
        )
        try:
            c.validate(partial.n_docs)
        except DataError as exc:
            raise InternalError(f"scan produced impossible counts: {exc}") from None
        counts.append(c)
    return counts


def aggregate_counts(
    match_sets: Iterable[set[int]],
    compiled: CompiledTriples,
    n_patterns: int,
) -> list[EntityCounts]:
    """Fold per-document match sets into per-triple counts.

    Convenience path for callers that already ran
    :meth:`PatternIndex.scan_document` themselves.
    """
    partial = PartialCounts.empty(n_patterns, len(compiled.triple_ids))
    by_subject = _triples_by_subject(compiled)
    for present in match_sets:
        partial.n_docs += 1
        for pid in present:
            partial.pattern_freq[pid] += 1
            for k, opid in by_subject.get(pid, ()):
                if opid in present:
                    partial.pair_freq[k] += 1
    return finalize_counts(partial, compiled)


def _batched(it: Iterator, size: int) -> Iterator[list]:
    while True:
        batch = list(islice(it, size))
        if not batch:
            return
        yield batch


def count_corpus(
    index: PatternIndex,
    compiled: CompiledTriples,
    documents: Iterable[Document],
    threads: int = 1,
    batch_size: int = 256,
) -> tuple[list[EntityCounts], int]:
    """Scan a document stream, optionally across worker threads.

    Documents are normalized here, batched, and scanned; batch partials
    are merged in submission order, so results are identical for any
    thread count.  Returns the per-triple counts and the number of
    documents scanned.
    """
    if threads < 1:
        raise DataError(f"threads must be >= 1, got {threads}")

    def normalized(batch: list[Document]) -> list[Document]:
        return [Document(d.doc_index, normalize_text(d.text, index.policy)) for d in batch]

    total = PartialCounts.empty(len(index), len(compiled.triple_ids))
    doc_iter = iter(documents)
    if threads == 1:
        for batch in _batched(doc_iter, batch_size):
            total = merge_counts(total, scan_shard(index, compiled, normalized(batch)))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pending = deque()
            for batch in _batched(doc_iter, batch_size):
                pending.append(pool.submit(scan_shard, index, compiled, normalized(batch)))
                # Keep a bounded window so huge corpora do not pile up in memory.
                while len(pending) >= threads * 4:
                    total = merge_counts(total, pending.popleft().result())
            while pending:
                total = merge_counts(total, pending.popleft().result())
    return finalize_counts(total, compiled), total.n_docs


def to_probabilities(counts: EntityCounts, n_docs: int) -> tuple[float, float, float]:
    """Maximum-likelihood document probabilities (p_s, p_o, p_so)."""
    if n_docs < 1:
        raise DataError("n_docs must be >= 1 to form probabilities")
    counts.validate(n_docs)
    return counts.n_s / n_docs, counts.n_o / n_docs, counts.n_so / n_docs


COUNTS_FILE = "counts.jsonl"
COUNTS_META_FILE = "counts_meta.json"


def write_counts(
    counts: Sequence[EntityCounts],
    n_docs: int,
    policy: NormalizationPolicy,
    fingerprint: str,
    out_dir: str | Path,
) -> None:
    """Write counts.jsonl plus its sidecar of scan-context metadata."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / COUNTS_FILE, "w", encoding="utf-8") as fh:
        for c in counts:
            fh.write(json.dumps(
                {"triple_id": c.triple_id, "n_s": c.n_s, "n_o": c.n_o, "n_so": c.n_so},
                ensure_ascii=False,
            ) + "\n")
    meta = {
        "n_docs": n_docs,
        "policy": policy.to_dict(),
        "corpus_fingerprint": fingerprint,
    }
    with open(out_dir / COUNTS_META_FILE, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_counts(in_dir: str | Path) -> tuple[list[EntityCounts], dict]:
    """Read counts.jsonl and sidecar, re-validating every record."""
    in_dir = Path(in_dir)
    meta_path = in_dir / COUNTS_META_FILE
    counts_path = in_dir / COUNTS_FILE
    for p in (counts_path, meta_path):
        if not p.exists():
            raise DataError(f"missing counts file: {p}")
    with open(meta_path, encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{meta_path}: invalid JSON ({exc})") from None
    try:
        n_docs = int(meta["n_docs"])
    except (KeyError, TypeError, ValueError):
        raise DataError(f"{meta_path}: missing or invalid n_docs") from None
    counts = []
    with open(counts_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                c = EntityCounts(str(obj["triple_id"]), int(obj["n_s"]), int(obj["n_o"]), int(obj["n_so"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise DataError(f"{counts_path}:{lineno}: malformed counts record") from None
            c.validate(n_docs)
            counts.append(c)
    if not counts:
        raise DataError(f"{counts_path}: no counts records")
    return counts, meta
