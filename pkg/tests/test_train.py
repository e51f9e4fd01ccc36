"""Trainer determinism, early stopping, warm starts, and span evaluation."""

import numpy as np
import pytest

from annokit import SpanAnnotation
from annokit.adjustment import SyntheticConfig, generate_synthetic_corpus
from annokit.corpus import bio_decode, gold_items
from annokit.errors import ConfigError, ValidationError
from annokit.tagger import (
    TrainConfig,
    evaluate_macro_f1,
    evaluate_token_macro_f1,
    train,
)


def two_category_items(n_docs=20, seed=5):
    corpus = generate_synthetic_corpus(
        seed,
        SyntheticConfig(
            n_docs=n_docs,
            min_doc_len=12,
            max_doc_len=20,
            categories=("HG", "EE"),
            vocab_size=40,
            signal=0.95,
            mean_segment_len=5.0,
        ),
    )
    return gold_items(corpus)


class TestTrainConfig:
    def test_bad_patience(self):
        with pytest.raises(ConfigError):
            TrainConfig(patience=0)

    def test_bad_dev_fraction(self):
        with pytest.raises(ConfigError):
            TrainConfig(dev_fraction=1.0)


class TestTrain:
    def test_empty_docs_rejected(self):
        with pytest.raises(ValidationError):
            train([], TrainConfig())

    def test_warm_start_requires_initial(self):
        items = two_category_items(4)
        with pytest.raises(ValidationError):
            train(items, TrainConfig(warm_start=True))

    def test_seed_determinism_bitwise(self):
        items = two_category_items(12)
        cfg = TrainConfig(max_epochs=4, seed=9)
        m1 = train(items, cfg, categories=("HG", "EE"))
        m2 = train(items, cfg, categories=("HG", "EE"))
        assert np.array_equal(m1.emissions, m2.emissions)
        assert np.array_equal(m1.transitions, m2.transitions)
        assert m1.history == m2.history

    def test_different_seeds_differ(self):
        items = two_category_items(12)
        m1 = train(items, TrainConfig(max_epochs=3, seed=1), categories=("HG", "EE"))
        m2 = train(items, TrainConfig(max_epochs=3, seed=2), categories=("HG", "EE"))
        assert not np.array_equal(m1.emissions, m2.emissions)

    def test_zero_epochs_returns_initial_unchanged(self):
        items = two_category_items(8)
        base = train(items, TrainConfig(max_epochs=3, seed=3), categories=("HG", "EE"))
        out = train(
            items,
            TrainConfig(max_epochs=0, seed=4, warm_start=True),
            initial=base,
            categories=("HG", "EE"),
        )
        assert np.array_equal(out.emissions, base.emissions)
        assert np.array_equal(out.transitions, base.transitions)
        assert out.history == []

    def test_beats_majority_label_baseline(self):
        items = two_category_items(20)
        cfg = TrainConfig(max_epochs=25, patience=12, learning_rate=0.2, lr_decay=0.3, seed=6)
        model = train(items, cfg, categories=("HG", "EE"))
        dev_f1 = max(h.dev_f1 for h in model.history if h.dev_f1 is not None)
        # majority-label tagger: most frequent BIO label at every token
        from collections import Counter

        counts = Counter(lab for _, labels in items for lab in labels)
        majority = counts.most_common(1)[0][0]
        predicted = {
            doc.id: bio_decode([majority] * len(doc)) for doc, _ in items
        }
        gold = {doc.id: bio_decode(labels) for doc, labels in items}
        baseline = evaluate_macro_f1(predicted, gold, ("HG", "EE")).macro_f1
        assert dev_f1 > baseline

    def test_training_loss_non_increasing_small_fixed_lr(self):
        items = two_category_items(5, seed=8)
        cfg = TrainConfig(
            max_epochs=12,
            patience=12,
            learning_rate=0.01,
            lr_decay=0.0,
            seed=2,
        )
        model = train(items, cfg, categories=("HG", "EE"))
        losses = [h.train_loss for h in model.history]
        assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:])), losses

    def test_early_stopping_respects_patience(self):
        items = two_category_items(15)
        cfg = TrainConfig(max_epochs=50, patience=2, seed=11)
        model = train(items, cfg, categories=("HG", "EE"))
        assert len(model.history) < 50
        dev = [h.dev_f1 for h in model.history]
        best = max(dev)
        # training stopped exactly `patience` epochs after the last strict best
        last_best = max(i for i, v in enumerate(dev) if v == best)
        assert len(dev) - 1 - last_best <= 2

    def test_warm_start_grows_vocabulary_append_only(self):
        items = two_category_items(8)
        base = train(items[:4], TrainConfig(max_epochs=2, seed=12), categories=("HG", "EE"))
        names_before = base.vocab.names
        warm = train(
            items, TrainConfig(max_epochs=2, seed=13), initial=base, categories=("HG", "EE")
        )
        assert warm.vocab.names[: len(names_before)] == names_before
        assert len(warm.vocab) >= len(names_before)
        assert base.emissions.shape[0] == len(names_before)  # initial untouched

    def test_history_fields(self):
        items = two_category_items(12)
        model = train(items, TrainConfig(max_epochs=3, seed=14), categories=("HG", "EE"))
        for k, rec in enumerate(model.history):
            assert rec.epoch == k
            assert np.isfinite(rec.train_loss)
            assert rec.dev_f1 is not None

    def test_single_document_trains_without_dev(self):
        items = two_category_items(1)
        model = train(items, TrainConfig(max_epochs=3, seed=15), categories=("HG", "EE"))
        assert len(model.history) == 3
        assert all(h.dev_f1 is None for h in model.history)


class TestMacroF1:
    def test_perfect_match(self):
        # gold exercises all four categories; absent categories would score
        # 0 under the 0/0 := 0 rule (see test_hand_counted_quarter)
        spans = {
            "d": [
                SpanAnnotation(0, 2, "HG"),
                SpanAnnotation(2, 4, "EG"),
                SpanAnnotation(4, 6, "EE"),
                SpanAnnotation(6, 8, "DC"),
            ]
        }
        assert evaluate_macro_f1(spans, spans).macro_f1 == 1.0

    def test_empty_predictions_zero(self):
        gold = {"d": [SpanAnnotation(0, 2, "HG")]}
        assert evaluate_macro_f1({"d": []}, gold).macro_f1 == 0.0

    def test_hand_counted_quarter(self):
        gold = {"d": [SpanAnnotation(0, 2, "HG"), SpanAnnotation(2, 4, "EE")]}
        pred = {"d": [SpanAnnotation(0, 2, "HG"), SpanAnnotation(2, 5, "EE")]}
        report = evaluate_macro_f1(pred, gold)
        assert report.per_category["HG"].f1 == 1.0
        assert report.per_category["EE"].f1 == 0.0
        assert report.macro_f1 == pytest.approx(0.25)

    def test_key_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            evaluate_macro_f1({"a": []}, {"b": []})

    def test_token_level_variant(self):
        gold = {"d": [SpanAnnotation(0, 4, "HG")]}
        pred = {"d": [SpanAnnotation(0, 2, "HG")]}
        report = evaluate_token_macro_f1(pred, gold)
        hg = report.per_category["HG"]
        assert hg.precision == 1.0
        assert hg.recall == 0.5
