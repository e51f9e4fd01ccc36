"""Annotation-quality measurement: unitized agreement, label
distributions, and divergence between annotator groups.

Constructs three annotators with controlled disagreement on a small
document set and walks through the metric suite.
"""

from annokit import (
    AnnotationSet,
    Document,
    SpanAnnotation,
    alpha_u,
    build_continuum,
    human_machine_agreement,
    intra_agreement,
    jsd,
    label_distribution,
    pairwise_alpha_u,
)

docs = {
    "d1": Document("d1", tuple(f"tok{i}" for i in range(14))),
    "d2": Document("d2", tuple(f"tok{i}" for i in range(11))),
}

# a1 is the reference; a2 shifts one boundary; a3 drops a span entirely
sets = [
    AnnotationSet("a1", "d1", (SpanAnnotation(1, 5, "EE"), SpanAnnotation(7, 10, "HG"))),
    AnnotationSet("a2", "d1", (SpanAnnotation(1, 6, "EE"), SpanAnnotation(7, 10, "HG"))),
    AnnotationSet("a3", "d1", (SpanAnnotation(1, 5, "EE"),)),
    AnnotationSet("a1", "d2", (SpanAnnotation(2, 6, "DC"),)),
    AnnotationSet("a2", "d2", (SpanAnnotation(2, 6, "DC"),)),
    AnnotationSet("a3", "d2", (SpanAnnotation(3, 7, "DC"),)),
]

by_ann = {}
for aset in sets:
    by_ann.setdefault(aset.doc_id, []).append(aset)
continua = [build_continuum(docs[d], by_ann[d]) for d in sorted(docs)]
result = alpha_u(continua)
print(f"three-annotator alpha_u over two documents: {result.value:.4f}")
print(f"  observed disagreement {result.observed_disagreement:.4f}, "
      f"expected {result.expected_disagreement:.4f}")
for category, part in result.per_category.items():
    if part.value is not None:
        print(f"  {category}: {part.value:.4f}")

pairs = pairwise_alpha_u(docs, sets)
print("\npairwise values:")
for (a, b), value in sorted(pairs.values.items()):
    print(f"  {a} vs {b}: {value:.4f}")
print(f"  mean: {pairs.mean:.4f}")

# intra-annotator consistency: the same person re-annotates d1
first = [AnnotationSet("a1", "d1", (SpanAnnotation(1, 5, "EE"), SpanAnnotation(7, 10, "HG")))]
second = [AnnotationSet("a1", "d1", (SpanAnnotation(1, 4, "EE"), SpanAnnotation(7, 10, "HG")))]
print(f"\nintra-annotator consistency: {intra_agreement(docs, first, second).value:.4f}")

# model-as-annotator agreement and label-distribution bias
predictions = {
    "d1": [SpanAnnotation(1, 5, "EE"), SpanAnnotation(7, 9, "HG")],
    "d2": [SpanAnnotation(2, 6, "DC")],
}
report = human_machine_agreement(
    docs, sets, predictions, groups={"su": ("a1", "a2"), "st": ("a3",)}
)
print("\nagreement with model predictions:")
for annotator, value in report.per_annotator.items():
    print(f"  {annotator}: {value:.4f}")
print(f"  group means {report.group_means}, difference {report.difference:+.4f}")

dist_su = label_distribution([s for s in sets if s.annotator_id in ("a1", "a2")])
dist_st = label_distribution([s for s in sets if s.annotator_id == "a3"])
print(f"\nlabel distributions (HG, EG, EE, DC): su={dist_su.round(3)}, st={dist_st.round(3)}")
print(f"jsd(su, st) = {jsd(dist_su, dist_st):.4f}  (base 2, 0 = identical)")
