"""Suggestion lifecycle, registry resolution, and simulated annotators."""

import pytest

from annokit import (
    AnnotationSet,
    AnnotatorPolicy,
    Document,
    ModelRegistry,
    RegisteredModel,
    SpanAnnotation,
    Suggestion,
    SuggestionStore,
    apply_decision,
    bio_decode,
    bio_labels,
    generate_suggestions,
    session_stats,
    simulate_annotator,
)
from annokit.adjustment import SyntheticConfig, generate_synthetic_corpus
from annokit.corpus import SOURCE_ACCEPTED, SOURCE_MANUAL, gold_items
from annokit.errors import (
    DecisionStateError,
    ResolutionError,
    UndefinedMetricError,
    UnknownSuggestionError,
    ValidationError,
)
from annokit.suggest import ACCEPTED, PENDING, REJECTED
from annokit.tagger import TaggerModel, TrainConfig, train, viterbi
from oracles import span_micro_precision


def make_suggestion(k, doc_id="d", span=None, state=PENDING):
    return Suggestion(
        id=f"s{k}",
        annotator_id="a1",
        doc_id=doc_id,
        span=span or SpanAnnotation(k, k + 2, "HG"),
        score=1.0,
        state=state,
    )


def trained_model(seed=4, n_docs=30):
    corpus = generate_synthetic_corpus(
        seed, SyntheticConfig(n_docs=n_docs, min_doc_len=10, max_doc_len=18, vocab_size=60, signal=0.9)
    )
    items = gold_items(corpus)
    model = train(items, TrainConfig(max_epochs=10, seed=seed))
    return corpus, model


class TestRegistry:
    def test_universal_fallback(self):
        model = TaggerModel.fresh(bio_labels())
        reg = ModelRegistry(universal=RegisteredModel(model, "univ-v1"))
        assert reg.resolve("anyone").model_id == "univ-v1"

    def test_personalised_preferred(self):
        m1 = TaggerModel.fresh(bio_labels())
        m2 = TaggerModel.fresh(bio_labels())
        reg = ModelRegistry(
            universal=RegisteredModel(m1, "univ"),
            personalised={"a1": RegisteredModel(m2, "pers-a1")},
        )
        assert reg.resolve("a1").model_id == "pers-a1"
        assert reg.resolve("a2").model_id == "univ"

    def test_personalisation_disabled(self):
        m1 = TaggerModel.fresh(bio_labels())
        m2 = TaggerModel.fresh(bio_labels())
        reg = ModelRegistry(
            universal=RegisteredModel(m1, "univ"),
            personalised={"a1": RegisteredModel(m2, "pers-a1")},
            use_personalised=False,
        )
        assert reg.resolve("a1").model_id == "univ"

    def test_required_personalisation_missing(self):
        reg = ModelRegistry(
            universal=RegisteredModel(TaggerModel.fresh(bio_labels()), "univ"),
            require_personalised=True,
        )
        with pytest.raises(ResolutionError):
            reg.resolve("unknown")

    def test_empty_registry(self):
        with pytest.raises(ResolutionError):
            ModelRegistry().resolve("a1")


class TestGenerate:
    def test_empty_prediction_empty_list(self):
        doc = Document("d", ("a", "b", "c"))
        model = TaggerModel.fresh(bio_labels())
        model.feature_ids(doc, grow=True)
        reg = ModelRegistry(universal=RegisteredModel(model, "univ"))
        assert generate_suggestions(reg, "a1", doc) == []

    def test_composition_and_metadata(self):
        corpus, model = trained_model()
        doc = next(iter(corpus.documents.values()))
        reg = ModelRegistry(universal=RegisteredModel(model, "univ-v3"))
        suggestions = generate_suggestions(reg, "a9", doc)
        expected = bio_decode(viterbi(model, doc))
        assert [s.span for s in suggestions] == expected
        assert all(s.state == PENDING for s in suggestions)
        assert all(s.model_id == "univ-v3" for s in suggestions)
        assert all(s.annotator_id == "a9" for s in suggestions)
        begins = [s.span.begin for s in suggestions]
        assert begins == sorted(begins)

    def test_personalised_model_id_attached(self):
        corpus, model = trained_model()
        doc = next(iter(corpus.documents.values()))
        reg = ModelRegistry(
            universal=RegisteredModel(TaggerModel.fresh(bio_labels()), "univ"),
            personalised={"a1": RegisteredModel(model, "pers-a1")},
        )
        for s in generate_suggestions(reg, "a1", doc):
            assert s.model_id == "pers-a1"


class TestDecisions:
    def test_accept_materializes_span(self):
        store = SuggestionStore()
        s = make_suggestion(0)
        store.add_suggestions([s])
        apply_decision(store, "s0", "accept")
        aset = store.annotation_set("a1", "d")
        assert aset.spans == (s.span,)
        assert aset.sources == (SOURCE_ACCEPTED,)

    def test_reject_adds_nothing(self):
        store = SuggestionStore()
        store.add_suggestions([make_suggestion(0)])
        apply_decision(store, "s0", "reject")
        assert store.annotation_set("a1", "d").spans == ()
        assert store.suggestion("s0").state == REJECTED

    def test_double_decision_rejected(self):
        store = SuggestionStore()
        store.add_suggestions([make_suggestion(0)])
        apply_decision(store, "s0", "accept")
        with pytest.raises(DecisionStateError):
            apply_decision(store, "s0", "accept")

    def test_unknown_id(self):
        with pytest.raises(UnknownSuggestionError):
            apply_decision(SuggestionStore(), "nope", "accept")

    def test_manual_spans_merge_into_set(self):
        store = SuggestionStore()
        store.add_suggestions([make_suggestion(0)])
        apply_decision(store, "s0", "accept")
        store.add_manual_span("a1", "d", SpanAnnotation(5, 7, "EE"))
        aset = store.annotation_set("a1", "d")
        assert aset.sources == (SOURCE_ACCEPTED, SOURCE_MANUAL)

    def test_export_log_shape(self):
        store = SuggestionStore()
        store.add_suggestions([make_suggestion(0), make_suggestion(3)])
        apply_decision(store, "s0", "accept")
        apply_decision(store, "s3", "reject")
        log = store.export_log()
        assert [r["decision"] for r in log] == [ACCEPTED, REJECTED]
        assert all(
            set(r) == {"timestamp", "annotator_id", "doc_id", "begin", "end", "category", "decision"}
            for r in log
        )


class TestSimulateExact:
    def test_exact_match_accepted_final_equals_gold(self):
        gold = AnnotationSet("a1", "d", (SpanAnnotation(1, 3, "HG"),))
        decisions, final = simulate_annotator(gold, [make_suggestion(1, span=SpanAnnotation(1, 3, "HG"))])
        assert decisions[0].decision == ACCEPTED
        assert final.spans == gold.spans
        assert final.sources == (SOURCE_ACCEPTED,)

    def test_near_miss_rejected_and_gold_added_manually(self):
        gold = AnnotationSet("a1", "d", (SpanAnnotation(1, 3, "HG"),))
        decisions, final = simulate_annotator(gold, [make_suggestion(0, span=SpanAnnotation(1, 4, "HG"))])
        assert decisions[0].decision == REJECTED
        assert final.spans == gold.spans
        assert final.sources == (SOURCE_MANUAL,)

    def test_final_equals_gold_for_any_model(self):
        corpus, model = trained_model(seed=6)
        reg = ModelRegistry(universal=RegisteredModel(model, "univ"))
        for doc_id in sorted(corpus.gold):
            doc = corpus.documents[doc_id]
            suggestions = generate_suggestions(reg, "a1", doc)
            gold = corpus.gold[doc_id]
            _decisions, final = simulate_annotator(gold, suggestions)
            assert set(final.spans) == set(gold.spans)

    def test_doc_mismatch_rejected(self):
        gold = AnnotationSet("a1", "d", (SpanAnnotation(1, 3, "HG"),))
        with pytest.raises(ValidationError):
            simulate_annotator(gold, [make_suggestion(0, doc_id="other")])

    def test_non_pending_suggestion_rejected(self):
        gold = AnnotationSet("a1", "d", ())
        with pytest.raises(ValidationError):
            simulate_annotator(gold, [make_suggestion(0, state=ACCEPTED)])

    def test_acceptance_rate_equals_micro_precision(self):
        corpus, model = trained_model(seed=7, n_docs=40)
        reg = ModelRegistry(universal=RegisteredModel(model, "univ"))
        decisions = []
        predicted = {}
        for doc_id in sorted(corpus.gold):
            doc = corpus.documents[doc_id]
            suggestions = generate_suggestions(reg, "a1", doc)
            predicted[doc_id] = [s.span for s in suggestions]
            decided, _ = simulate_annotator(corpus.gold[doc_id], suggestions)
            decisions.extend(decided)
        if not decisions:
            pytest.skip("model predicted nothing")
        stats = session_stats(decisions, corpus.gold)
        oracle = span_micro_precision(predicted, {d: corpus.gold[d].spans for d in corpus.gold})
        assert stats.acceptance.rate == pytest.approx(oracle, abs=1e-12)


class TestSimulateOverlap:
    def test_iou_two_thirds_accepted_at_half(self):
        gold = AnnotationSet("a1", "d", (SpanAnnotation(1, 3, "HG"),))
        suggestion = make_suggestion(0, span=SpanAnnotation(1, 4, "HG"))
        decisions, final = simulate_annotator(
            gold, [suggestion], AnnotatorPolicy("overlap", 0.5)
        )
        assert decisions[0].decision == ACCEPTED
        # accepted span keeps its own boundaries; matched gold span not re-added
        assert final.spans == (SpanAnnotation(1, 4, "HG"),)
        assert final.sources == (SOURCE_ACCEPTED,)

    def test_iou_two_thirds_rejected_at_point_seven(self):
        gold = AnnotationSet("a1", "d", (SpanAnnotation(1, 3, "HG"),))
        decisions, _final = simulate_annotator(
            gold,
            [make_suggestion(0, span=SpanAnnotation(1, 4, "HG"))],
            AnnotatorPolicy("overlap", 0.7),
        )
        assert decisions[0].decision == REJECTED

    def test_category_must_match(self):
        gold = AnnotationSet("a1", "d", (SpanAnnotation(1, 3, "HG"),))
        decisions, _ = simulate_annotator(
            gold,
            [make_suggestion(0, span=SpanAnnotation(1, 3, "EE"))],
            AnnotatorPolicy("overlap", 0.5),
        )
        assert decisions[0].decision == REJECTED

    def test_unmatched_gold_added_with_overlap_resolution(self):
        gold = AnnotationSet(
            "a1", "d", (SpanAnnotation(1, 3, "HG"), SpanAnnotation(6, 9, "EE"))
        )
        decisions, final = simulate_annotator(
            gold,
            [make_suggestion(0, span=SpanAnnotation(1, 4, "HG"))],
            AnnotatorPolicy("overlap", 0.5),
        )
        assert set(final.spans) == {SpanAnnotation(1, 4, "HG"), SpanAnnotation(6, 9, "EE")}

    def test_bad_theta(self):
        with pytest.raises(ValidationError):
            AnnotatorPolicy("overlap", 0.0)


class TestSessionStats:
    def test_boundary_only_mismatch_counted(self):
        gold = {"d": AnnotationSet("a1", "d", (SpanAnnotation(1, 3, "HG"),))}
        decisions, _ = simulate_annotator(
            gold["d"], [make_suggestion(0, span=SpanAnnotation(1, 4, "HG"))]
        )
        stats = session_stats(decisions, gold)
        assert stats.boundary_only_mismatches == 1
        assert stats.by_category["HG"] == (0, 1)

    def test_category_mismatch_not_boundary_only(self):
        gold = {"d": AnnotationSet("a1", "d", (SpanAnnotation(1, 3, "HG"),))}
        decisions, _ = simulate_annotator(
            gold["d"], [make_suggestion(0, span=SpanAnnotation(1, 3, "EE"))]
        )
        stats = session_stats(decisions, gold)
        assert stats.boundary_only_mismatches == 0

    def test_mixed_session_rate(self):
        gold_set = AnnotationSet(
            "a1",
            "d",
            tuple(SpanAnnotation(3 * k, 3 * k + 2, "HG") for k in range(10)),
        )
        suggestions = [
            make_suggestion(k, span=SpanAnnotation(3 * k, 3 * k + 2, "HG")) for k in range(6)
        ] + [
            make_suggestion(6 + k, span=SpanAnnotation(3 * (6 + k), 3 * (6 + k) + 3, "HG"))
            for k in range(4)
        ]
        decisions, _ = simulate_annotator(gold_set, suggestions)
        stats = session_stats(decisions, {"d": gold_set})
        assert stats.acceptance.rate == pytest.approx(0.6)

    def test_empty_decisions_undefined(self):
        with pytest.raises(UndefinedMetricError):
            session_stats([], {})

    def test_replay_is_deterministic(self):
        corpus, model = trained_model(seed=9)
        reg = ModelRegistry(universal=RegisteredModel(model, "univ"))
        outcomes = []
        for _ in range(2):
            decisions = []
            for doc_id in sorted(corpus.gold):
                suggestions = generate_suggestions(reg, "a1", corpus.documents[doc_id])
                decided, _ = simulate_annotator(corpus.gold[doc_id], suggestions)
                decisions.extend(decided)
            outcomes.append([(d.suggestion_id, d.decision) for d in decisions])
        assert outcomes[0] == outcomes[1]
