"""Bundle schedules, strategy runs, aggregation, and synthetic corpora."""

import math

import numpy as np
import pytest

from annokit.adjustment import (
    CUM,
    INC,
    RETRAIN,
    AdjustmentCurve,
    CurvePoint,
    SyntheticConfig,
    aggregate_runs,
    generate_synthetic_corpus,
    holdout_split,
    make_schedule,
    make_stream,
    run_setup,
    run_strategy,
    write_curve,
)
from annokit.corpus import DEFAULT_CATEGORIES
from annokit.errors import ValidationError
from annokit.tagger import TrainConfig, train


def small_setup(n_docs=46, test_size=6, seed=3):
    corpus = generate_synthetic_corpus(
        seed, SyntheticConfig(n_docs=n_docs, min_doc_len=8, max_doc_len=14, vocab_size=60)
    )
    return holdout_split(corpus, test_size, seed)


FAST = TrainConfig(max_epochs=2, patience=2, seed=5)


class TestSchedule:
    def test_bundle_50_points(self):
        sched = make_schedule(270, 50, 10)
        assert sched.points == (10, 60, 110, 160, 210, 260, 270)

    def test_unit_stride(self):
        sched = make_schedule(270, 1, 10)
        assert sched.points == tuple(range(10, 271))

    def test_single_partial_bundle(self):
        assert make_schedule(15, 10, 10).points == (10, 15)

    def test_exact_multiple_has_no_duplicate_tail(self):
        assert make_schedule(30, 10, 10).points == (10, 20, 30)

    def test_stream_not_longer_than_initial_rejected(self):
        with pytest.raises(ValidationError):
            make_schedule(10, 5, 10)


class TestStream:
    def test_seeded_permutation_reproducible(self):
        pool, _ = small_setup()
        assert make_stream(pool, 4) == make_stream(pool, 4)
        assert make_stream(pool, 4) != make_stream(pool, 5)

    def test_permutation_preserves_items(self):
        pool, _ = small_setup()
        stream = make_stream(pool, 9)
        assert sorted(d.id for d, _ in stream) == sorted(d.id for d, _ in pool)


class TestRunStrategy:
    def test_training_set_sizes_per_strategy(self):
        pool, test = small_setup()
        stream = make_stream(pool, 1)
        sched = make_schedule(len(stream), 10, 10)
        for strategy in (CUM, INC, RETRAIN):
            seen = []
            run_strategy(
                strategy,
                stream,
                test,
                sched,
                FAST,
                on_adjust=lambda p, items, model: seen.append((p, len(items))),
            )
            points = sched.points
            if strategy == INC:
                expected = [(points[0], points[0])] + [
                    (p, p - q) for q, p in zip(points, points[1:])
                ]
            else:
                expected = [(p, p) for p in points]
            assert seen == expected

    def test_cum_trains_on_stream_prefix(self):
        pool, test = small_setup()
        stream = make_stream(pool, 2)
        sched = make_schedule(len(stream), 10, 10)
        prefixes = []
        run_strategy(
            CUM, stream, test, sched, FAST,
            on_adjust=lambda p, items, model: prefixes.append([d.id for d, _ in items]),
        )
        for p, ids in zip(sched.points, prefixes):
            assert ids == [d.id for d, _ in stream[:p]]

    def test_inc_trains_on_newest_bundle_only(self):
        pool, test = small_setup()
        stream = make_stream(pool, 2)
        sched = make_schedule(len(stream), 10, 10)
        bundles = []
        run_strategy(
            INC, stream, test, sched, FAST,
            on_adjust=lambda p, items, model: bundles.append([d.id for d, _ in items]),
        )
        previous = 0
        for p, ids in zip(sched.points, bundles):
            assert ids == [d.id for d, _ in stream[previous:p]]
            previous = p

    def test_retrain_equals_one_shot_training(self):
        pool, test = small_setup()
        stream = make_stream(pool, 3)
        sched = make_schedule(len(stream), 20, 10)
        models = []
        run_strategy(
            RETRAIN, stream, test, sched, FAST,
            on_adjust=lambda p, items, model: models.append((p, model)),
        )
        p_last, final_model = models[-1]
        direct = train(list(stream[:p_last]), FAST)
        assert np.array_equal(final_model.emissions, direct.emissions)
        assert np.array_equal(final_model.transitions, direct.transitions)

    def test_cum_and_retrain_same_document_multiset_at_bundle_one(self):
        pool, test = small_setup(n_docs=18, test_size=4)
        stream = make_stream(pool, 4)
        sched = make_schedule(len(stream), 1, 10)
        sets = {}
        for strategy in (CUM, RETRAIN):
            seen = []
            run_strategy(
                strategy, stream, test, sched, FAST,
                on_adjust=lambda p, items, model: seen.append(
                    tuple(sorted(d.id for d, _ in items))
                ),
            )
            sets[strategy] = seen
        assert sets[CUM] == sets[RETRAIN]

    def test_curves_reproducible_with_same_seed(self):
        pool, test = small_setup()
        stream = make_stream(pool, 6)
        sched = make_schedule(len(stream), 20, 10)
        c1 = run_strategy(CUM, stream, test, sched, FAST)
        c2 = run_strategy(CUM, stream, test, sched, FAST)
        assert [p.f1 for p in c1.points] == [p.f1 for p in c2.points]
        assert [p.epochs for p in c1.points] == [p.epochs for p in c2.points]

    def test_point_count_matches_schedule(self):
        pool, test = small_setup()
        stream = make_stream(pool, 6)
        sched = make_schedule(len(stream), 20, 10)
        curve = run_strategy(INC, stream, test, sched, FAST)
        assert len(curve.points) == len(sched.points)
        assert [p.texts_available for p in curve.points] == list(sched.points)

    def test_train_test_overlap_rejected(self):
        pool, test = small_setup()
        stream = make_stream(pool, 6)
        sched = make_schedule(len(stream), 20, 10)
        with pytest.raises(ValidationError, match="overlap"):
            run_strategy(CUM, stream, stream[:3], sched, FAST)


class TestAggregate:
    def point(self, texts, f1, t=0.5):
        return CurvePoint(texts, f1, t, 3, texts)

    def curve(self, f1s, strategy=CUM, bundle=10, seed=0):
        return AdjustmentCurve(
            strategy, bundle, seed, tuple(self.point(10 * (k + 1), v) for k, v in enumerate(f1s))
        )

    def test_identical_curves_zero_sd(self):
        curves = [self.curve([0.2, 0.4, 0.5]) for _ in range(10)]
        mean = aggregate_runs(curves)
        assert [p.f1_mean for p in mean.points] == pytest.approx([0.2, 0.4, 0.5], abs=1e-15)
        assert all(p.f1_sd == 0.0 for p in mean.points)
        assert mean.runs == 10

    def test_two_point_mean_and_sample_sd(self):
        mean = aggregate_runs([self.curve([0.4]), self.curve([0.6])])
        assert mean.points[0].f1_mean == pytest.approx(0.5)
        assert mean.points[0].f1_sd == pytest.approx(math.sqrt(0.02), abs=1e-12)

    def test_single_curve_sd_zero(self):
        mean = aggregate_runs([self.curve([0.3, 0.7])])
        assert [p.f1_sd for p in mean.points] == [0.0, 0.0]

    def test_schedule_mismatch_rejected(self):
        c1 = self.curve([0.2, 0.4])
        c2 = AdjustmentCurve(CUM, 10, 0, (self.point(10, 0.2), self.point(25, 0.4)))
        with pytest.raises(ValidationError):
            aggregate_runs([c1, c2])


class TestSyntheticCorpus:
    def test_same_seed_identical(self):
        cfg = SyntheticConfig(n_docs=12, vocab_size=40)
        c1 = generate_synthetic_corpus(5, cfg)
        c2 = generate_synthetic_corpus(5, cfg)
        assert c1.documents == c2.documents
        assert c1.gold == c2.gold

    def test_different_seed_differs(self):
        cfg = SyntheticConfig(n_docs=12, vocab_size=40)
        assert generate_synthetic_corpus(5, cfg).documents != generate_synthetic_corpus(6, cfg).documents

    def test_gold_spans_valid_and_non_overlapping(self):
        corpus = generate_synthetic_corpus(8, SyntheticConfig(n_docs=40, vocab_size=40))
        for doc_id, aset in corpus.gold.items():
            doc = corpus.documents[doc_id]
            last_end = 0
            for span in aset.spans:
                assert 0 <= span.begin < span.end <= len(doc)
                assert span.begin >= last_end
                last_end = span.end
            assert span.category in DEFAULT_CATEGORIES

    def test_category_marginals_near_uniform_targets(self):
        corpus = generate_synthetic_corpus(9, SyntheticConfig(n_docs=220))
        mass = {c: 0 for c in DEFAULT_CATEGORIES}
        for aset in corpus.gold.values():
            for span in aset.spans:
                mass[span.category] += span.length
        total = sum(mass.values())
        for c in DEFAULT_CATEGORIES:
            assert abs(mass[c] / total - 0.25) <= 0.05

    def test_holdout_split_disjoint_and_seeded(self):
        corpus = generate_synthetic_corpus(10, SyntheticConfig(n_docs=30, vocab_size=40))
        pool1, test1 = holdout_split(corpus, 5, 2)
        pool2, test2 = holdout_split(corpus, 5, 2)
        assert [d.id for d, _ in test1] == [d.id for d, _ in test2]
        assert not {d.id for d, _ in pool1} & {d.id for d, _ in test1}
        assert len(pool1) + len(test1) == 30


class TestCurveExport:
    def test_header_and_shape(self, tmp_path):
        pool, test = small_setup(n_docs=26, test_size=4)
        mean, _ = run_setup(pool, test, INC, 10, 2, 3, FAST)
        path = tmp_path / "curve.csv"
        write_curve(path, mean)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "texts_available,f1_mean,f1_sd,time_s_mean,time_s_sd,strategy,bundle,runs"
        assert len(lines) == 1 + len(mean.points)
        first = lines[1].split(",")
        assert first[0] == "10"
        assert first[5] == "inc"
        assert first[6] == "10"
        assert first[7] == "2"

    def test_no_timing_writes_zero_times(self, tmp_path):
        pool, test = small_setup(n_docs=26, test_size=4)
        mean, _ = run_setup(pool, test, INC, 10, 1, 3, FAST)
        path = tmp_path / "curve.csv"
        write_curve(path, mean, include_time=False)
        for line in path.read_text().strip().split("\n")[1:]:
            cols = line.split(",")
            assert cols[3] == "0.0" and cols[4] == "0.0"
