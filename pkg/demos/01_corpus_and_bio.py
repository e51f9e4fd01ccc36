"""Documents, labelled spans, and the BIO encoding bridge.

Builds a two-document corpus by hand, shows encoding/decoding and overlap
resolution, and round-trips the corpus through its file format.
"""

import tempfile
from pathlib import Path

from annokit import (
    AnnotationSet,
    CorpusBuilder,
    Document,
    SpanAnnotation,
    bio_decode,
    bio_encode,
    load_corpus,
    resolve_overlaps,
    save_corpus,
)

doc = Document(
    "report-1",
    ("The", "patient", "reports", "fever", "so", "I", "ordered", "blood", "cultures"),
)
spans = [SpanAnnotation(1, 4, "EE"), SpanAnnotation(5, 9, "EG")]

labels = bio_encode(len(doc), spans)
print("tokens :", " ".join(doc.tokens))
print("labels :", " ".join(labels))
print("decoded:", bio_decode(labels))
assert bio_decode(labels) == spans

# ill-formed sequences decode too: an orphan I-x starts a new span
print("\norphan repair:", bio_decode(["I-DC", "I-DC", "O", "I-HG"]))

# overlapping drafts are resolved by category preference
draft = [SpanAnnotation(0, 5, "HG"), SpanAnnotation(3, 8, "EE")]
print("resolved     :", resolve_overlaps(draft, priority=("HG", "EG", "EE", "DC")))

builder = CorpusBuilder()
builder.add_document(doc)
builder.add_gold(AnnotationSet("gold", doc.id, tuple(spans)))
builder.add_annotations(AnnotationSet("a1", doc.id, (SpanAnnotation(1, 4, "EE"),)))
corpus = builder.build()

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.json"
    save_corpus(corpus, path)
    reloaded = load_corpus(path)
    assert reloaded.gold == corpus.gold
    print(f"\nround-tripped corpus file: {reloaded.n_documents} document(s), "
          f"{reloaded.n_annotation_sets} annotation set(s)")
