import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from annokit import (
    AnnotationSet,
    CorpusBuilder,
    Document,
    SpanAnnotation,
)


@pytest.fixture
def tiny_corpus():
    """Two documents, gold spans, and two annotators."""
    d1 = Document("d1", ("The", "patient", "reports", "fever", "and", "chills", "."))
    d2 = Document("d2", ("Lab", "tests", "show", "low", "lymphocytes", "today"))
    builder = CorpusBuilder()
    builder.add_document(d1).add_document(d2)
    builder.add_gold(AnnotationSet("gold", "d1", (SpanAnnotation(1, 4, "EE"), SpanAnnotation(5, 6, "DC"))))
    builder.add_gold(AnnotationSet("gold", "d2", (SpanAnnotation(0, 3, "EG"), SpanAnnotation(3, 5, "EE"))))
    builder.add_annotations(AnnotationSet("a1", "d1", (SpanAnnotation(1, 4, "EE"),)))
    builder.add_annotations(AnnotationSet("a1", "d2", (SpanAnnotation(0, 3, "EG"),)))
    builder.add_annotations(AnnotationSet("a2", "d1", (SpanAnnotation(1, 3, "EE"), SpanAnnotation(5, 6, "DC"))))
    builder.add_annotations(AnnotationSet("a2", "d2", (SpanAnnotation(0, 2, "EG"), SpanAnnotation(3, 5, "EE"))))
    return builder.build()
