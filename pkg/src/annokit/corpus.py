"""Documents, labelled token spans, and the BIO encoding bridge.

A corpus is a set of pre-tokenized documents plus annotation sets: per
(annotator, document) lists of non-overlapping labelled spans, and an
optional gold annotation per document.  Spans use token indices, begin
inclusive and end exclusive.  The default task uses the four category
codes HG, EG, EE and DC; any other closed category set can be configured.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, FormatError, ValidationError

DEFAULT_CATEGORIES = ("HG", "EG", "EE", "DC")

SOURCE_MANUAL = "manual"
SOURCE_ACCEPTED = "accepted_suggestion"
_SOURCES = (SOURCE_MANUAL, SOURCE_ACCEPTED)

OUTSIDE = "O"

CORPUS_FORMAT_VERSION = 1


def bio_labels(categories: Sequence[str] = DEFAULT_CATEGORIES) -> tuple[str, ...]:
    """The BIO label set for a category set, O first.

    Size is 2 * len(categories) + 1; the O label sits at index 0 so that
    decoders with all-zero scores fall back to it deterministically.
    """
    labels = [OUTSIDE]
    for c in categories:
        labels.append(f"B-{c}")
        labels.append(f"I-{c}")
    return tuple(labels)


@dataclass(frozen=True, order=True)
class SpanAnnotation:
    """A labelled token span, begin inclusive, end exclusive."""

    begin: int
    end: int
    category: str

    def __post_init__(self) -> None:
        if self.begin < 0 or self.begin >= self.end:
            raise ValidationError(
                f"begin<end violated: span ({self.begin},{self.end},{self.category})"
            )

    @property
    def length(self) -> int:
        return self.end - self.begin

    def overlaps(self, other: "SpanAnnotation") -> bool:
        return min(self.end, other.end) > max(self.begin, other.begin)


@dataclass(frozen=True)
class Document:
    id: str
    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValidationError(f"document {self.id!r} has no tokens")
        if any(not t for t in self.tokens):
            raise ValidationError(f"document {self.id!r} has an empty token")
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class AnnotationSet:
    """Non-overlapping spans of one annotator on one document.

    ``sources`` is aligned with ``spans`` and records whether each span was
    created manually or by accepting a suggestion.
    """

    annotator_id: str
    doc_id: str
    spans: tuple[SpanAnnotation, ...]
    sources: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        spans = tuple(self.spans)
        sources = tuple(self.sources) if self.sources else (SOURCE_MANUAL,) * len(spans)
        if len(sources) != len(spans):
            raise ValidationError("sources not aligned with spans")
        for s in sources:
            if s not in _SOURCES:
                raise ValidationError(f"unknown span source {s!r}")
        order = sorted(range(len(spans)), key=lambda i: spans[i])
        spans = tuple(spans[i] for i in order)
        sources = tuple(sources[i] for i in order)
        for a, b in zip(spans, spans[1:]):
            if a.overlaps(b):
                raise ValidationError(
                    f"overlapping spans in annotation set "
                    f"({self.annotator_id!r}, {self.doc_id!r}): {a} / {b}"
                )
        object.__setattr__(self, "spans", spans)
        object.__setattr__(self, "sources", sources)

    def with_span(self, span: SpanAnnotation, source: str = SOURCE_MANUAL) -> "AnnotationSet":
        return AnnotationSet(
            self.annotator_id,
            self.doc_id,
            self.spans + (span,),
            self.sources + (source,),
        )


@dataclass
class Corpus:
    documents: dict[str, Document] = field(default_factory=dict)
    annotations: dict[tuple[str, str], AnnotationSet] = field(default_factory=dict)
    gold: dict[str, AnnotationSet] = field(default_factory=dict)

    @property
    def n_documents(self) -> int:
        return len(self.documents)

    @property
    def n_annotation_sets(self) -> int:
        return len(self.annotations)

    @property
    def annotator_ids(self) -> tuple[str, ...]:
        return tuple(sorted({a for (a, _d) in self.annotations}))

    def annotation_sets_for(self, annotator_id: str) -> list[AnnotationSet]:
        return [
            s for (a, _d), s in sorted(self.annotations.items()) if a == annotator_id
        ]


class CorpusBuilder:
    """Single-owner builder; the built Corpus is treated as immutable."""

    def __init__(self, categories: Sequence[str] = DEFAULT_CATEGORIES):
        self._categories = tuple(categories)
        self._corpus = Corpus()

    def add_document(self, doc: Document) -> "CorpusBuilder":
        if doc.id in self._corpus.documents:
            raise ValidationError(f"duplicate document id {doc.id!r}")
        self._corpus.documents[doc.id] = doc
        return self

    def _check(self, aset: AnnotationSet) -> None:
        doc = self._corpus.documents.get(aset.doc_id)
        if doc is None:
            raise ValidationError(f"annotation references unknown document {aset.doc_id!r}")
        for span in aset.spans:
            if span.end > len(doc):
                raise ValidationError(
                    f"span {span} out of bounds in document {doc.id!r} (length {len(doc)})"
                )
            if span.category not in self._categories:
                raise ValidationError(
                    f"unknown category {span.category!r} in document {doc.id!r}"
                )

    def add_annotations(self, aset: AnnotationSet) -> "CorpusBuilder":
        self._check(aset)
        self._corpus.annotations[(aset.annotator_id, aset.doc_id)] = aset
        return self

    def add_gold(self, aset: AnnotationSet) -> "CorpusBuilder":
        self._check(aset)
        self._corpus.gold[aset.doc_id] = aset
        return self

    def build(self) -> Corpus:
        corpus, self._corpus = self._corpus, Corpus()
        return corpus


# ---------------------------------------------------------------------------
# BIO encoding
# ---------------------------------------------------------------------------


def bio_encode(doc_length: int, spans: Iterable[SpanAnnotation]) -> list[str]:
    """Encode non-overlapping spans as one BIO label per token.

    Token i gets B-c at the begin of a c-span, I-c strictly inside one,
    O otherwise.  Overlapping or out-of-bounds spans raise ValidationError;
    resolve overlaps first.
    """
    labels = [OUTSIDE] * doc_length
    ordered = sorted(spans)
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise ValidationError(f"overlapping spans: {a} / {b}")
    for span in ordered:
        if span.end > doc_length:
            raise ValidationError(f"span {span} out of bounds for length {doc_length}")
        labels[span.begin] = f"B-{span.category}"
        for i in range(span.begin + 1, span.end):
            labels[i] = f"I-{span.category}"
    return labels


def bio_decode(labels: Sequence[str]) -> list[SpanAnnotation]:
    """Decode a BIO label sequence into spans.  Total on ill-formed input:
    an I-c without a compatible predecessor starts a new span (as if B-c)."""
    spans: list[SpanAnnotation] = []
    begin = -1
    category = None
    for i, label in enumerate(labels):
        if label == OUTSIDE:
            if category is not None:
                spans.append(SpanAnnotation(begin, i, category))
                category = None
            continue
        mark, cat = label.split("-", 1)
        if mark == "B" or category != cat:
            if category is not None:
                spans.append(SpanAnnotation(begin, i, category))
            begin, category = i, cat
    if category is not None:
        spans.append(SpanAnnotation(begin, len(labels), category))
    return spans


def resolve_overlaps(
    spans: Iterable[SpanAnnotation],
    priority: Sequence[str] = DEFAULT_CATEGORIES,
) -> list[SpanAnnotation]:
    """Make a span set non-overlapping under a category preference order.

    Spans of higher-priority categories are kept whole; lower-priority spans
    keep every maximal run of tokens not claimed by a higher-priority span
    and are dropped when nothing remains.  Within one category, earlier and
    then longer spans win.  The priority list must name every category that
    occurs exactly once.
    """
    spans = list(spans)
    cats = {s.category for s in spans}
    if len(set(priority)) != len(priority) or not cats.issubset(priority):
        raise ConfigError(
            f"priority order {list(priority)!r} does not cover categories {sorted(cats)!r}"
        )
    rank = {c: i for i, c in enumerate(priority)}
    claimed: set[int] = set()
    kept: list[SpanAnnotation] = []
    for span in sorted(spans, key=lambda s: (rank[s.category], s.begin, -s.length, s.end)):
        free = [i for i in range(span.begin, span.end) if i not in claimed]
        if not free:
            continue
        start = prev = free[0]
        for i in free[1:]:
            if i == prev + 1:
                prev = i
                continue
            kept.append(SpanAnnotation(start, prev + 1, span.category))
            start = prev = i
        kept.append(SpanAnnotation(start, prev + 1, span.category))
        claimed.update(free)
    return sorted(kept)


# ---------------------------------------------------------------------------
# Corpus file format (version 1)
# ---------------------------------------------------------------------------
#
# A single UTF-8 JSON object:
#   {"format": 1, "documents": [record, ...]}
# with one record per document:
#   {"id": str, "tokens": [str, ...],
#    "gold": [{"begin": int, "end": int, "category": str}, ...],
#    "annotations": {annotator_id: [{"begin", "end", "category", "source"}]}}
# Token indices are 0-based, "end" exclusive.


def _parse_span(obj, where: str) -> tuple[SpanAnnotation, str]:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: span record is not an object")
    try:
        begin, end, category = obj["begin"], obj["end"], obj["category"]
    except KeyError as exc:
        raise FormatError(f"{where}: span record missing field {exc}") from None
    if not isinstance(begin, int) or not isinstance(end, int):
        raise FormatError(f"{where}: span indices must be integers")
    source = obj.get("source", SOURCE_MANUAL)
    try:
        return SpanAnnotation(begin, end, str(category)), str(source)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def load_corpus(
    path: str | Path,
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> Corpus:
    """Load and validate a corpus file.

    Raises FormatError for malformed payloads (naming the offending record)
    and ValidationError for well-formed records that violate an invariant.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != CORPUS_FORMAT_VERSION:
        raise FormatError(f"{path}: missing or unsupported format version")
    records = payload.get("documents")
    if not isinstance(records, list):
        raise FormatError(f"{path}: 'documents' must be an array")

    builder = CorpusBuilder(categories)
    for k, record in enumerate(records):
        where = f"{path}: document record {k}"
        if not isinstance(record, dict) or "id" not in record or "tokens" not in record:
            raise FormatError(f"{where}: needs 'id' and 'tokens'")
        tokens = record["tokens"]
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise FormatError(f"{where}: 'tokens' must be an array of strings")
        builder.add_document(Document(str(record["id"]), tuple(tokens)))
    for k, record in enumerate(records):
        doc_id = str(record["id"])
        where = f"{path}: document {doc_id!r}"
        gold = record.get("gold", [])
        if gold:
            spans = [_parse_span(o, where)[0] for o in gold]
            builder.add_gold(AnnotationSet("gold", doc_id, tuple(spans)))
        annotations = record.get("annotations", {})
        if not isinstance(annotations, dict):
            raise FormatError(f"{where}: 'annotations' must be an object")
        for annotator_id, span_objs in annotations.items():
            parsed = [_parse_span(o, where) for o in span_objs]
            builder.add_annotations(
                AnnotationSet(
                    str(annotator_id),
                    doc_id,
                    tuple(s for s, _src in parsed),
                    tuple(src for _s, src in parsed),
                )
            )
    return builder.build()


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus file; load_corpus(save_corpus(c)) == c."""
    records = []
    for doc_id in sorted(corpus.documents):
        doc = corpus.documents[doc_id]
        record: dict = {"id": doc.id, "tokens": list(doc.tokens)}
        if doc_id in corpus.gold:
            record["gold"] = [
                {"begin": s.begin, "end": s.end, "category": s.category}
                for s in corpus.gold[doc_id].spans
            ]
        annotators = sorted(a for (a, d) in corpus.annotations if d == doc_id)
        if annotators:
            record["annotations"] = {
                a: [
                    {"begin": s.begin, "end": s.end, "category": s.category, "source": src}
                    for s, src in zip(
                        corpus.annotations[(a, doc_id)].spans,
                        corpus.annotations[(a, doc_id)].sources,
                    )
                ]
                for a in annotators
            }
        records.append(record)
    payload = {"format": CORPUS_FORMAT_VERSION, "documents": records}
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def gold_items(
    corpus: Corpus, doc_ids: Sequence[str] | None = None
) -> list[tuple[Document, list[str]]]:
    """(document, gold BIO labels) pairs, the unit consumed by training."""
    ids = sorted(corpus.gold) if doc_ids is None else list(doc_ids)
    items = []
    for doc_id in ids:
        doc = corpus.documents[doc_id]
        items.append((doc, bio_encode(len(doc), corpus.gold[doc_id].spans)))
    return items
