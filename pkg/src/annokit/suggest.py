"""Suggestion lifecycle: generation, accept/reject decisions, replay.

Suggestions are span predictions wrapped with a pending state; a decision
moves them to accepted or rejected exactly once.  Accepted suggestions
materialize as spans with the accepted_suggestion source in the
annotator's annotation set.  The simulated annotator replays sessions
against gold annotations, either requiring exact span identity or
tolerating boundary noise up to an overlap threshold.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .corpus import (
    DEFAULT_CATEGORIES,
    SOURCE_ACCEPTED,
    SOURCE_MANUAL,
    AnnotationSet,
    Document,
    SpanAnnotation,
    resolve_overlaps,
)
from .errors import (
    DecisionStateError,
    ResolutionError,
    UnknownSuggestionError,
    ValidationError,
)
from .metrics import AcceptanceStats, acceptance_rate
from .tagger import TaggerModel, predict_spans, viterbi_margin

PENDING = "pending"
ACCEPTED = "accepted"
REJECTED = "rejected"


@dataclass(frozen=True)
class Suggestion:
    id: str
    annotator_id: str
    doc_id: str
    span: SpanAnnotation
    score: float
    state: str = PENDING
    model_id: str = ""


@dataclass(frozen=True)
class Decision:
    suggestion_id: str
    annotator_id: str
    doc_id: str
    span: SpanAnnotation
    decision: str  # accepted | rejected
    timestamp: float


@dataclass(frozen=True)
class RegisteredModel:
    model: TaggerModel
    model_id: str


@dataclass
class ModelRegistry:
    """Universal model plus optional per-annotator personalised models.

    Every annotator resolves to exactly one active model: the personalised
    one when present and enabled, otherwise the universal model.
    """

    universal: RegisteredModel | None = None
    personalised: dict[str, RegisteredModel] = field(default_factory=dict)
    use_personalised: bool = True
    require_personalised: bool = False

    def resolve(self, annotator_id: str) -> RegisteredModel:
        if self.use_personalised and annotator_id in self.personalised:
            return self.personalised[annotator_id]
        if self.require_personalised:
            raise ResolutionError(
                f"annotator {annotator_id!r} has no personalised model"
            )
        if self.universal is None:
            raise ResolutionError("no universal model registered")
        return self.universal


def generate_suggestions(
    registry: ModelRegistry,
    annotator_id: str,
    doc: Document,
    id_prefix: str = "",
) -> list[Suggestion]:
    """Pending suggestions from the annotator's active model, sorted by
    begin.  The score is the decoder margin between the best and second
    best label sequence of the document (informational)."""
    registered = registry.resolve(annotator_id)
    spans = predict_spans(registered.model, doc)
    margin = viterbi_margin(registered.model, doc) if spans else 0.0
    return [
        Suggestion(
            id=f"{id_prefix}{doc.id}:{k}",
            annotator_id=annotator_id,
            doc_id=doc.id,
            span=span,
            score=margin,
            model_id=registered.model_id,
        )
        for k, span in enumerate(spans)
    ]


class SuggestionStore:
    """Append-only suggestion and decision log for annotation sessions.

    Single writer; decided suggestions are terminal.
    """

    def __init__(self) -> None:
        self._suggestions: dict[str, Suggestion] = {}
        self._decisions: list[Decision] = []
        self._manual: dict[tuple[str, str], list[SpanAnnotation]] = {}

    def add_suggestions(self, suggestions: Iterable[Suggestion]) -> None:
        for s in suggestions:
            if s.id in self._suggestions:
                raise ValidationError(f"duplicate suggestion id {s.id!r}")
            self._suggestions[s.id] = s

    def suggestion(self, suggestion_id: str) -> Suggestion:
        try:
            return self._suggestions[suggestion_id]
        except KeyError:
            raise UnknownSuggestionError(f"unknown suggestion {suggestion_id!r}") from None

    @property
    def decisions(self) -> list[Decision]:
        return list(self._decisions)

    def outcomes(self) -> list[str]:
        return [s.state for s in self._suggestions.values()]

    def apply_decision(self, suggestion_id: str, decision: str) -> Suggestion:
        if decision not in ("accept", "reject"):
            raise ValidationError(f"unknown decision {decision!r}")
        current = self.suggestion(suggestion_id)
        if current.state != PENDING:
            raise DecisionStateError(
                f"suggestion {suggestion_id!r} already {current.state}"
            )
        state = ACCEPTED if decision == "accept" else REJECTED
        updated = replace(current, state=state)
        self._suggestions[suggestion_id] = updated
        self._decisions.append(
            Decision(
                suggestion_id=suggestion_id,
                annotator_id=updated.annotator_id,
                doc_id=updated.doc_id,
                span=updated.span,
                decision=state,
                timestamp=time.time(),
            )
        )
        return updated

    def add_manual_span(self, annotator_id: str, doc_id: str, span: SpanAnnotation) -> None:
        self._manual.setdefault((annotator_id, doc_id), []).append(span)

    def annotation_set(self, annotator_id: str, doc_id: str) -> AnnotationSet:
        """Accepted suggestions plus manual spans for one (annotator, doc)."""
        accepted = [
            s.span
            for s in self._suggestions.values()
            if s.annotator_id == annotator_id and s.doc_id == doc_id and s.state == ACCEPTED
        ]
        manual = self._manual.get((annotator_id, doc_id), [])
        return AnnotationSet(
            annotator_id,
            doc_id,
            tuple(accepted) + tuple(manual),
            (SOURCE_ACCEPTED,) * len(accepted) + (SOURCE_MANUAL,) * len(manual),
        )

    def export_log(self) -> list[dict]:
        return [
            {
                "timestamp": d.timestamp,
                "annotator_id": d.annotator_id,
                "doc_id": d.doc_id,
                "begin": d.span.begin,
                "end": d.span.end,
                "category": d.span.category,
                "decision": d.decision,
            }
            for d in self._decisions
        ]


def apply_decision(store: SuggestionStore, suggestion_id: str, decision: str) -> Suggestion:
    """Module-level convenience over SuggestionStore.apply_decision."""
    return store.apply_decision(suggestion_id, decision)


# ---------------------------------------------------------------------------
# Simulated annotator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnotatorPolicy:
    """exact: accept only suggestions identical to a gold span.
    overlap: accept when some same-category gold span has IoU >= theta."""

    mode: str = "exact"
    theta: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "overlap"):
            raise ValidationError(f"unknown policy mode {self.mode!r}")
        if self.mode == "overlap" and not 0.0 < self.theta <= 1.0:
            raise ValidationError("overlap threshold must be in (0, 1]")


def _iou(a: SpanAnnotation, b: SpanAnnotation) -> float:
    inter = max(0, min(a.end, b.end) - max(a.begin, b.begin))
    union = (a.end - a.begin) + (b.end - b.begin) - inter
    return inter / union if union else 0.0


def simulate_annotator(
    gold: AnnotationSet,
    suggestions: Sequence[Suggestion],
    policy: AnnotatorPolicy = AnnotatorPolicy(),
    priority: Sequence[str] = DEFAULT_CATEGORIES,
) -> tuple[list[Decision], AnnotationSet]:
    """Replay one document's suggestions against its gold annotation.

    In exact mode the final annotation set always equals gold: accepted
    suggestions are exactly the predicted spans present in gold, and every
    other gold span is added manually.  In overlap mode accepted spans keep
    their (possibly wrong) boundaries and gold spans matched by no accepted
    suggestion are added manually, with the category preference order
    resolving any overlap in the union.
    """
    now = time.time()
    decisions: list[Decision] = []
    accepted_spans: list[SpanAnnotation] = []
    gold_spans = list(gold.spans)
    for s in sorted(suggestions, key=lambda s: (s.span, s.id)):
        if s.doc_id != gold.doc_id:
            raise ValidationError(
                f"suggestion {s.id!r} is for {s.doc_id!r}, gold is {gold.doc_id!r}"
            )
        if s.state != PENDING:
            raise ValidationError(f"suggestion {s.id!r} is not pending")
        if policy.mode == "exact":
            ok = s.span in gold_spans
        else:
            ok = any(
                g.category == s.span.category and _iou(s.span, g) >= policy.theta
                for g in gold_spans
            )
        decisions.append(
            Decision(
                suggestion_id=s.id,
                annotator_id=gold.annotator_id,
                doc_id=s.doc_id,
                span=s.span,
                decision=ACCEPTED if ok else REJECTED,
                timestamp=now,
            )
        )
        if ok:
            accepted_spans.append(s.span)

    if policy.mode == "exact":
        accepted = set(accepted_spans)
        final = AnnotationSet(
            gold.annotator_id,
            gold.doc_id,
            tuple(gold_spans),
            tuple(SOURCE_ACCEPTED if g in accepted else SOURCE_MANUAL for g in gold_spans),
        )
        return decisions, final

    matched = [
        any(
            s.category == g.category and _iou(s, g) >= policy.theta
            for s in accepted_spans
        )
        for g in gold_spans
    ]
    manual = [g for g, hit in zip(gold_spans, matched) if not hit]
    merged = resolve_overlaps(list(dict.fromkeys(accepted_spans)) + manual, priority)
    accepted_set = set(accepted_spans)
    final = AnnotationSet(
        gold.annotator_id,
        gold.doc_id,
        tuple(merged),
        tuple(SOURCE_ACCEPTED if sp in accepted_set else SOURCE_MANUAL for sp in merged),
    )
    return decisions, final


@dataclass(frozen=True)
class SessionStats:
    acceptance: AcceptanceStats
    by_category: dict[str, tuple[int, int]]  # category -> (accepted, rejected)
    boundary_only_mismatches: int


def session_stats(
    decisions: Sequence[Decision],
    gold_sets: Mapping[str, AnnotationSet],
) -> SessionStats:
    """Acceptance rate plus the count of rejections whose category matched
    an overlapping gold span (only the boundaries were wrong)."""
    acceptance = acceptance_rate([d.decision for d in decisions])
    by_category: dict[str, tuple[int, int]] = {}
    boundary_only = 0
    for d in decisions:
        acc, rej = by_category.get(d.span.category, (0, 0))
        if d.decision == ACCEPTED:
            by_category[d.span.category] = (acc + 1, rej)
            continue
        by_category[d.span.category] = (acc, rej + 1)
        gold = gold_sets.get(d.doc_id)
        if gold is None:
            continue
        for g in gold.spans:
            if (
                g.category == d.span.category
                and g.overlaps(d.span)
                and (g.begin, g.end) != (d.span.begin, d.span.end)
            ):
                boundary_only += 1
                break
    return SessionStats(acceptance, by_category, boundary_only)
