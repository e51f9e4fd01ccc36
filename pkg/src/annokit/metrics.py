"""Agreement, bias, and suggestion-usefulness measurement.

The central coefficient is Krippendorff's agreement measure for unitized
continua (Krippendorff 1995), alpha = 1 - D_o / D_e, computed here on
discrete token continua.

Data model.  Every annotator partitions a document of length L into an
alternating sequence of labelled units and gaps (a Continuum).  For each
category c, an annotator's record is viewed as c-units versus gap; spans
of other categories count as gap for c.

Distance between intersecting sections of two annotators:

  * both are c-units: (begin difference)^2 + (end difference)^2
  * a c-unit lying wholly inside the other annotator's gap: (unit length)^2
  * anything else: 0

Observed disagreement D_o sums this distance over all annotator pairs,
categories, and intersecting section pairs.  Expected disagreement D_e is
the expectation of the same sum under the chance model that places every
observed unit independently and uniformly at random over its feasible
positions on its continuum.  Documents are aggregated by summing the
observed and expected contributions before the final ratio.

Degenerate inputs: with no units anywhere both sums are zero and the
coefficient is undefined (an error).  When units exist but the chance
model has no freedom (D_e = 0, e.g. every unit covers its whole document
identically), the observed disagreement is provably zero as well and the
coefficient is defined as 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import DEFAULT_CATEGORIES, AnnotationSet, Document, SpanAnnotation
from .errors import UndefinedMetricError, ValidationError

# ---------------------------------------------------------------------------
# Continua
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Section:
    begin: int
    length: int
    category: str | None  # None marks a gap

    @property
    def end(self) -> int:
        return self.begin + self.length

    @property
    def is_unit(self) -> bool:
        return self.category is not None


@dataclass(frozen=True)
class Continuum:
    """Per-annotator unitizations of one document."""

    doc_id: str
    length: int
    by_annotator: dict[str, tuple[Section, ...]]

    def __post_init__(self) -> None:
        for annotator, sections in self.by_annotator.items():
            pos = 0
            for s in sections:
                if s.begin != pos or s.length < 1:
                    raise ValidationError(
                        f"sections of {annotator!r} do not tile [0, {self.length})"
                    )
                pos = s.end
            if pos != self.length:
                raise ValidationError(
                    f"sections of {annotator!r} do not tile [0, {self.length})"
                )

    def units(self, annotator: str, category: str) -> list[tuple[int, int]]:
        return [
            (s.begin, s.end)
            for s in self.by_annotator[annotator]
            if s.category == category
        ]


def _sections_from_spans(length: int, spans: Sequence[SpanAnnotation]) -> tuple[Section, ...]:
    sections: list[Section] = []
    pos = 0
    for span in sorted(spans):
        if span.begin < pos or span.end > length:
            raise ValidationError(f"span {span} does not fit continuum of length {length}")
        if span.begin > pos:
            sections.append(Section(pos, span.begin - pos, None))
        sections.append(Section(span.begin, span.length, span.category))
        pos = span.end
    if pos < length:
        sections.append(Section(pos, length - pos, None))
    return tuple(sections)


def build_continuum(doc: Document, sets: Iterable[AnnotationSet]) -> Continuum:
    """Derive a Continuum from resolved annotation sets on one document."""
    by_annotator: dict[str, tuple[Section, ...]] = {}
    for aset in sets:
        if aset.doc_id != doc.id:
            raise ValidationError(
                f"annotation set for {aset.doc_id!r} does not belong to document {doc.id!r}"
            )
        by_annotator[aset.annotator_id] = _sections_from_spans(len(doc), aset.spans)
    return Continuum(doc.id, len(doc), by_annotator)


# ---------------------------------------------------------------------------
# Unitized alpha
# ---------------------------------------------------------------------------


def _observed_pair(units_a, units_b, length: int) -> float:
    """Disagreement between two annotators' c-unit lists on one document."""
    total = 0.0
    for (b1, e1) in units_a:
        hit = False
        for (b2, e2) in units_b:
            if min(e1, e2) > max(b1, b2):
                total += (b1 - b2) ** 2 + (e1 - e2) ** 2
                hit = True
        if not hit:
            total += (e1 - b1) ** 2  # whole unit inside the other's gap
    for (b2, e2) in units_b:
        if all(min(e1, e2) <= max(b1, b2) for (b1, e1) in units_a):
            total += (e2 - b2) ** 2
    return total


def _pair_count(d: int, pa: int, pb: int) -> int:
    """Number of begin pairs (i, j), i in [0, pa), j in [0, pb), i - j = d."""
    return max(0, min(pa - 1, pb - 1 + d) - max(0, d) + 1)


def _expected_unit_unit(a: int, b: int, length: int) -> float:
    """E[distance * intersects] for two units of lengths a and b placed
    uniformly at random; closed sum over the begin difference d."""
    pa, pb = length - a + 1, length - b + 1
    total = 0
    for d in range(-(a - 1), b):  # intersection iff -a < begin_a - begin_b < b
        cnt = _pair_count(d, pa, pb)
        if cnt:
            total += cnt * (d * d + (d + a - b) ** 2)
    return total / (pa * pb)


def _disjoint_placements(b: int, s: int, e: int, length: int) -> int:
    """Placements of a length-b unit disjoint from the interval [s, e)."""
    return max(0, s - b + 1) + max(0, length - b + 1 - e)


def _expected_containment(a: int, other_lengths: Sequence[int], length: int) -> float:
    """P(a length-a unit intersects none of the independently placed units
    of the other annotator), averaged over the unit's own placements."""
    pa = length - a + 1
    total = 0.0
    for s in range(pa):
        p = 1.0
        for b in other_lengths:
            p *= _disjoint_placements(b, s, s + a, length) / (length - b + 1)
        total += p
    return total / pa


def _expected_pair(lens_a: Sequence[int], lens_b: Sequence[int], length: int, cache: dict) -> float:
    total = 0.0
    for a in lens_a:
        for b in lens_b:
            key = (min(a, b), max(a, b), length)
            if key not in cache:
                cache[key] = _expected_unit_unit(key[0], key[1], length)
            total += cache[key]
    for a in lens_a:
        total += a * a * _expected_containment(a, lens_b, length)
    for b in lens_b:
        total += b * b * _expected_containment(b, lens_a, length)
    return total


@dataclass(frozen=True)
class CategoryAgreement:
    observed: float
    expected: float

    @property
    def value(self) -> float | None:
        if self.expected == 0.0:
            return None
        return 1.0 - self.observed / self.expected


@dataclass(frozen=True)
class AgreementResult:
    value: float
    observed_disagreement: float
    expected_disagreement: float
    per_category: dict[str, CategoryAgreement]
    n_annotators: int
    total_length: int


def alpha_u(
    continua: Sequence[Continuum],
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> AgreementResult:
    """Unitized alpha over one or more documents with a shared annotator set.

    Raises UndefinedMetricError when no annotator marked any unit, and
    ValidationError for fewer than two annotators or mismatched annotator
    sets across documents.
    """
    if not continua:
        raise ValidationError("no continua given")
    annotators = sorted(continua[0].by_annotator)
    m = len(annotators)
    if m < 2:
        raise ValidationError("unitized alpha needs at least two annotators")
    for cont in continua:
        if sorted(cont.by_annotator) != annotators:
            raise ValidationError("continua disagree on the annotator set")

    uu_cache: dict = {}
    observed = {c: 0.0 for c in categories}
    expected = {c: 0.0 for c in categories}
    for cont in continua:
        for c in categories:
            units = {a: cont.units(a, c) for a in annotators}
            lens = {a: [e - b for (b, e) in units[a]] for a in annotators}
            for i in range(m):
                for j in range(i + 1, m):
                    a, b = annotators[i], annotators[j]
                    if units[a] or units[b]:
                        observed[c] += _observed_pair(units[a], units[b], cont.length)
                        expected[c] += _expected_pair(lens[a], lens[b], cont.length, uu_cache)

    o_total = sum(observed.values())
    e_total = sum(expected.values())
    any_units = e_total > 0.0 or o_total > 0.0 or any(
        cont.units(a, c)
        for cont in continua
        for a in annotators
        for c in categories
    )
    if not any_units:
        raise UndefinedMetricError("no units in any continuum, alpha undefined")
    n_pairs = m * (m - 1) / 2
    total_length = sum(c.length for c in continua)
    norm = n_pairs * total_length
    per_category = {
        c: CategoryAgreement(observed[c] / norm, expected[c] / norm) for c in categories
    }
    value = 1.0 if e_total == 0.0 else 1.0 - o_total / e_total
    return AgreementResult(
        value=value,
        observed_disagreement=o_total / norm,
        expected_disagreement=e_total / norm,
        per_category=per_category,
        n_annotators=m,
        total_length=total_length,
    )


# ---------------------------------------------------------------------------
# Corpus-level agreement helpers
# ---------------------------------------------------------------------------


@dataclass
class PairwiseAgreement:
    values: dict[tuple[str, str], float]
    excluded: list[tuple[tuple[str, str], str]] = field(default_factory=list)

    @property
    def mean(self) -> float:
        if not self.values:
            raise UndefinedMetricError("no annotator pair has a defined agreement")
        return sum(self.values.values()) / len(self.values)

    def value(self, a: str, b: str) -> float:
        return self.values[tuple(sorted((a, b)))]

    def group_mean(self, group: Sequence[str]) -> float:
        pairs = [
            v
            for (a, b), v in self.values.items()
            if a in group and b in group
        ]
        if not pairs:
            raise UndefinedMetricError(f"no pairs within group {list(group)!r}")
        return sum(pairs) / len(pairs)

    def cross_group_mean(self, group_a: Sequence[str], group_b: Sequence[str]) -> float:
        pairs = [
            v
            for (a, b), v in self.values.items()
            if (a in group_a and b in group_b) or (a in group_b and b in group_a)
        ]
        if not pairs:
            raise UndefinedMetricError("no pairs across the two groups")
        return sum(pairs) / len(pairs)


def _collect_by_annotator(
    sets: Iterable[AnnotationSet],
) -> dict[str, dict[str, AnnotationSet]]:
    by: dict[str, dict[str, AnnotationSet]] = {}
    for aset in sets:
        by.setdefault(aset.annotator_id, {})[aset.doc_id] = aset
    return by


def pairwise_alpha_u(
    documents: Mapping[str, Document],
    sets: Iterable[AnnotationSet],
    annotators: Sequence[str] | None = None,
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> PairwiseAgreement:
    """Alpha for every annotator pair over their shared documents.

    Pairs without shared documents (or without any unit) are excluded and
    reported instead of raising.
    """
    by = _collect_by_annotator(sets)
    names = sorted(by) if annotators is None else list(annotators)
    if len(names) < 2:
        raise ValidationError("pairwise agreement needs at least two annotators")
    result = PairwiseAgreement(values={})
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = names[i], names[j]
            shared = sorted(set(by.get(a, {})) & set(by.get(b, {})))
            if not shared:
                result.excluded.append(((a, b), "no shared documents"))
                continue
            continua = [
                build_continuum(documents[d], [by[a][d], by[b][d]]) for d in shared
            ]
            try:
                result.values[(a, b)] = alpha_u(continua, categories).value
            except UndefinedMetricError:
                result.excluded.append(((a, b), "no units on shared documents"))
    return result


def intra_agreement(
    documents: Mapping[str, Document],
    first_pass: Iterable[AnnotationSet],
    second_pass: Iterable[AnnotationSet],
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> AgreementResult:
    """Consistency of one annotator across two passes over the same texts,
    computed as alpha with the passes acting as two annotators."""
    first = {s.doc_id: s for s in first_pass}
    second = {s.doc_id: s for s in second_pass}
    if set(first) != set(second):
        raise ValidationError("the two passes cover different documents")
    continua = []
    for doc_id in sorted(first):
        doc = documents[doc_id]
        continua.append(
            Continuum(
                doc_id,
                len(doc),
                {
                    "pass1": _sections_from_spans(len(doc), first[doc_id].spans),
                    "pass2": _sections_from_spans(len(doc), second[doc_id].spans),
                },
            )
        )
    return alpha_u(continua, categories)


@dataclass(frozen=True)
class HumanMachineReport:
    per_annotator: dict[str, float]
    group_means: dict[str, float]
    difference: float | None  # first group mean minus second, if two groups


def human_machine_agreement(
    documents: Mapping[str, Document],
    sets: Iterable[AnnotationSet],
    predictions: Mapping[str, Sequence[SpanAnnotation]],
    groups: Mapping[str, Sequence[str]] | None = None,
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> HumanMachineReport:
    """Alpha between each annotator and the model treated as an annotator."""
    by = _collect_by_annotator(sets)
    per_annotator: dict[str, float] = {}
    for annotator in sorted(by):
        continua = []
        for doc_id in sorted(by[annotator]):
            if doc_id not in predictions:
                raise ValidationError(f"no predictions for document {doc_id!r}")
            doc = documents[doc_id]
            continua.append(
                Continuum(
                    doc_id,
                    len(doc),
                    {
                        annotator: _sections_from_spans(len(doc), by[annotator][doc_id].spans),
                        "@model": _sections_from_spans(
                            len(doc), tuple(predictions[doc_id])
                        ),
                    },
                )
            )
        per_annotator[annotator] = alpha_u(continua, categories).value
    group_means: dict[str, float] = {}
    if groups:
        for name, members in groups.items():
            values = [per_annotator[a] for a in members if a in per_annotator]
            if not values:
                raise ValidationError(f"group {name!r} has no scored annotator")
            group_means[name] = sum(values) / len(values)
    difference = None
    if groups and len(groups) == 2:
        first, second = list(groups)
        difference = group_means[first] - group_means[second]
    return HumanMachineReport(per_annotator, group_means, difference)


# ---------------------------------------------------------------------------
# Label distributions and divergence
# ---------------------------------------------------------------------------


def label_distribution(
    sets: Iterable[AnnotationSet],
    categories: Sequence[str] = DEFAULT_CATEGORIES,
    mode: str = "tokens",
) -> np.ndarray:
    """Category probability vector from annotated mass.

    ``tokens`` weighs each category by the tokens its spans cover (the
    length-sensitive measure used throughout); ``segments`` counts spans.
    Unannotated tokens are excluded; zero annotated mass is undefined.
    """
    if mode not in ("tokens", "segments"):
        raise ValidationError(f"unknown distribution mode {mode!r}")
    mass = {c: 0 for c in categories}
    for aset in sets:
        for span in aset.spans:
            if span.category not in mass:
                raise ValidationError(f"category {span.category!r} not configured")
            mass[span.category] += span.length if mode == "tokens" else 1
    total = sum(mass.values())
    if total == 0:
        raise UndefinedMetricError("no annotated tokens, distribution undefined")
    return np.array([mass[c] / total for c in categories])


def jsd(p: Sequence[float], q: Sequence[float]) -> float:
    """Jensen-Shannon divergence with base-2 logarithms, in [0, 1].

    JSD(p, q) = KL(p || m)/2 + KL(q || m)/2 with m = (p + q)/2 and
    0 * log 0 = 0.  Inputs must be same-length vectors summing to 1.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValidationError("distributions have different support sizes")
    if np.any(p < 0) or np.any(q < 0):
        raise ValidationError("distributions must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise ValidationError("distributions must sum to 1 within 1e-9")
    m = (p + q) / 2.0

    def kl(a: np.ndarray) -> float:
        mask = a > 0.0
        return float(np.sum(a[mask] * np.log2(a[mask] / m[mask])))

    return 0.5 * kl(p) + 0.5 * kl(q)


# ---------------------------------------------------------------------------
# Acceptance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AcceptanceStats:
    rate: float
    n_accepted: int
    n_rejected: int
    n_pending: int


def acceptance_rate(outcomes: Iterable[str]) -> AcceptanceStats:
    """Accepted / decided over suggestion outcomes.

    ``outcomes`` holds "accepted", "rejected" or "pending" markers; pending
    suggestions are excluded from the rate and reported separately.
    """
    counts = {"accepted": 0, "rejected": 0, "pending": 0}
    for outcome in outcomes:
        if outcome not in counts:
            raise ValidationError(f"unknown suggestion outcome {outcome!r}")
        counts[outcome] += 1
    decided = counts["accepted"] + counts["rejected"]
    if decided == 0:
        raise UndefinedMetricError("no decided suggestions, rate undefined")
    return AcceptanceStats(
        rate=counts["accepted"] / decided,
        n_accepted=counts["accepted"],
        n_rejected=counts["rejected"],
        n_pending=counts["pending"],
    )
