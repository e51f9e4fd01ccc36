"""Span-level evaluation against gold annotations.

A predicted span counts as a true positive only when an identical
(begin, end, category) span exists in gold.  Ratios with a zero
denominator are defined as 0.  Macro-F1 is the unweighted mean of the
per-category F1 scores over the configured category set.  A token-level
variant is provided for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from ..corpus import DEFAULT_CATEGORIES, SpanAnnotation
from ..errors import ValidationError


@dataclass(frozen=True)
class CategoryScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class F1Report:
    per_category: dict[str, CategoryScore]
    macro_f1: float

    @property
    def micro_precision(self) -> float:
        tp = sum(s.tp for s in self.per_category.values())
        fp = sum(s.fp for s in self.per_category.values())
        return tp / (tp + fp) if tp + fp else 0.0

    @property
    def micro_recall(self) -> float:
        tp = sum(s.tp for s in self.per_category.values())
        fn = sum(s.fn for s in self.per_category.values())
        return tp / (tp + fn) if tp + fn else 0.0


def evaluate_macro_f1(
    predicted: Mapping[str, Iterable[SpanAnnotation]],
    gold: Mapping[str, Iterable[SpanAnnotation]],
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> F1Report:
    """Exact-match span F1 per category plus macro average."""
    if set(predicted) != set(gold):
        raise ValidationError("predicted and gold document id sets differ")
    tp = {c: 0 for c in categories}
    fp = {c: 0 for c in categories}
    fn = {c: 0 for c in categories}
    for doc_id, spans in predicted.items():
        pred = set(spans)
        gol = set(gold[doc_id])
        for s in pred:
            if s.category not in tp:
                raise ValidationError(f"span category {s.category!r} not configured")
            if s in gol:
                tp[s.category] += 1
            else:
                fp[s.category] += 1
        for s in gol - pred:
            fn[s.category] += 1
    scores = {c: CategoryScore(tp[c], fp[c], fn[c]) for c in categories}
    macro = sum(s.f1 for s in scores.values()) / len(categories)
    return F1Report(scores, macro)


def evaluate_token_macro_f1(
    predicted: Mapping[str, Iterable[SpanAnnotation]],
    gold: Mapping[str, Iterable[SpanAnnotation]],
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> F1Report:
    """Token-coverage F1: a token counts for category c when covered by a
    c-span; the same 0/0 := 0 conventions as the span-level report."""
    if set(predicted) != set(gold):
        raise ValidationError("predicted and gold document id sets differ")
    tp = {c: 0 for c in categories}
    fp = {c: 0 for c in categories}
    fn = {c: 0 for c in categories}

    def cover(spans: Iterable[SpanAnnotation]) -> dict[int, str]:
        out: dict[int, str] = {}
        for s in spans:
            for i in range(s.begin, s.end):
                out[i] = s.category
        return out

    for doc_id in predicted:
        pred = cover(predicted[doc_id])
        gol = cover(gold[doc_id])
        for i, c in pred.items():
            if gol.get(i) == c:
                tp[c] += 1
            else:
                fp[c] += 1
        for i, c in gol.items():
            if pred.get(i) != c:
                fn[c] += 1
    scores = {c: CategoryScore(tp[c], fp[c], fn[c]) for c in categories}
    macro = sum(s.f1 for s in scores.values()) / len(categories)
    return F1Report(scores, macro)
