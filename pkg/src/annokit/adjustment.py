"""Streamed annotation arrival and continuous model adjustment.

A stream is a seeded random permutation of (document, gold labels) pairs.
Models are adjusted at schedule points 10, 10+j, 10+2j, ... (bundle size
j), with a trailing partial bundle so the last point equals the stream
length.  Three strategies are compared:

  retrain  fresh initialization, trained on the union of all bundles so far
  cum      warm start from the current model, union of all bundles so far
  inc      warm start from the current model, newest bundle only

After every adjustment the model is evaluated on a fixed held-out test
set; wall time is measured around the train call only.  Runs are seeded
(run r uses base_seed + r for both the permutation and the trainer), so
curves are reproducible; wall-clock columns are the one exception.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .corpus import (
    DEFAULT_CATEGORIES,
    AnnotationSet,
    Corpus,
    CorpusBuilder,
    Document,
    SpanAnnotation,
    bio_decode,
    gold_items,
)
from .errors import ValidationError
from .tagger import TaggerModel, TrainConfig, evaluate_macro_f1, predict_spans, train

RETRAIN = "retrain"
CUM = "cum"
INC = "inc"
STRATEGIES = (RETRAIN, CUM, INC)

TrainItem = tuple[Document, list[str]]


# ---------------------------------------------------------------------------
# Schedules and streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BundleSchedule:
    stream_length: int
    bundle_size: int
    initial: int
    points: tuple[int, ...]


def make_schedule(n: int, bundle_size: int, initial: int = 10) -> BundleSchedule:
    """Adjustment points initial, initial+j, ..., capped and terminated at n."""
    if bundle_size < 1:
        raise ValidationError("bundle size must be >= 1")
    if initial < 1 or n <= initial:
        raise ValidationError(
            f"stream length {n} must exceed the initial training size {initial}"
        )
    points = list(range(initial, n, bundle_size))
    points.append(n)
    return BundleSchedule(n, bundle_size, initial, tuple(points))


def make_stream(items: Sequence[TrainItem], seed: int) -> list[TrainItem]:
    """Seeded random arrival order over the item pool."""
    stream = list(items)
    random.Random(seed).shuffle(stream)
    return stream


# ---------------------------------------------------------------------------
# Strategy runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    texts_available: int
    f1: float
    time_s: float
    epochs: int
    n_train_docs: int


@dataclass(frozen=True)
class AdjustmentCurve:
    strategy: str
    bundle_size: int
    seed: int
    points: tuple[CurvePoint, ...]


def _evaluate(model: TaggerModel, test_items: Sequence[TrainItem], categories) -> float:
    predicted = {doc.id: predict_spans(model, doc) for doc, _ in test_items}
    gold = {doc.id: bio_decode(labels) for doc, labels in test_items}
    return evaluate_macro_f1(predicted, gold, categories).macro_f1


def run_strategy(
    strategy: str,
    stream: Sequence[TrainItem],
    test_items: Sequence[TrainItem],
    schedule: BundleSchedule,
    config: TrainConfig,
    categories: Sequence[str] = DEFAULT_CATEGORIES,
    on_adjust: Callable[[int, Sequence[TrainItem], TaggerModel], None] | None = None,
) -> AdjustmentCurve:
    """One run of a strategy over a stream, one curve point per adjustment."""
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}")
    if len(stream) != schedule.stream_length:
        raise ValidationError("stream length does not match the schedule")
    stream_ids = {doc.id for doc, _ in stream}
    test_ids = {doc.id for doc, _ in test_items}
    if stream_ids & test_ids:
        raise ValidationError(
            f"test documents overlap the stream: {sorted(stream_ids & test_ids)[:3]}"
        )

    points: list[CurvePoint] = []
    model: TaggerModel | None = None
    previous = 0
    for p in schedule.points:
        if model is None or strategy == RETRAIN:
            train_items = list(stream[:p])
            initial = None
        elif strategy == CUM:
            train_items = list(stream[:p])
            initial = model
        else:  # INC: newest bundle only
            train_items = list(stream[previous:p])
            initial = model
        started = time.perf_counter()
        model = train(
            train_items,
            config,
            initial=initial,
            categories=tuple(categories),
        )
        elapsed = time.perf_counter() - started
        f1 = _evaluate(model, test_items, categories)
        points.append(
            CurvePoint(
                texts_available=p,
                f1=f1,
                time_s=elapsed,
                epochs=len(model.history),
                n_train_docs=len(train_items),
            )
        )
        if on_adjust is not None:
            on_adjust(p, train_items, model)
        previous = p
    return AdjustmentCurve(strategy, schedule.bundle_size, config.seed, tuple(points))


@dataclass(frozen=True)
class MeanCurvePoint:
    texts_available: int
    f1_mean: float
    f1_sd: float
    time_s_mean: float
    time_s_sd: float


@dataclass(frozen=True)
class MeanCurve:
    strategy: str
    bundle_size: int
    runs: int
    points: tuple[MeanCurvePoint, ...]


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, var ** 0.5


def aggregate_runs(curves: Sequence[AdjustmentCurve]) -> MeanCurve:
    """Pointwise mean and sample standard deviation over runs of one setup."""
    if not curves:
        raise ValidationError("no curves to aggregate")
    first = curves[0]
    schedule = tuple(pt.texts_available for pt in first.points)
    for c in curves[1:]:
        if tuple(pt.texts_available for pt in c.points) != schedule:
            raise ValidationError("curves do not share one schedule")
        if (c.strategy, c.bundle_size) != (first.strategy, first.bundle_size):
            raise ValidationError("curves come from different setups")
    points = []
    for k, texts in enumerate(schedule):
        f1_mean, f1_sd = _mean_sd([c.points[k].f1 for c in curves])
        t_mean, t_sd = _mean_sd([c.points[k].time_s for c in curves])
        points.append(MeanCurvePoint(texts, f1_mean, f1_sd, t_mean, t_sd))
    return MeanCurve(first.strategy, first.bundle_size, len(curves), tuple(points))


def run_setup(
    pool: Sequence[TrainItem],
    test_items: Sequence[TrainItem],
    strategy: str,
    bundle_size: int,
    runs: int,
    base_seed: int,
    config: TrainConfig,
    initial: int = 10,
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> tuple[MeanCurve, list[AdjustmentCurve]]:
    """Average one (strategy, bundle size) setup over seeded runs."""
    schedule = make_schedule(len(pool), bundle_size, initial)
    curves = []
    for r in range(runs):
        seed = base_seed + r
        stream = make_stream(pool, seed)
        run_config = TrainConfig(
            max_epochs=config.max_epochs,
            patience=config.patience,
            learning_rate=config.learning_rate,
            lr_decay=config.lr_decay,
            l2=config.l2,
            seed=seed,
            dev_fraction=config.dev_fraction,
        )
        curves.append(
            run_strategy(strategy, stream, test_items, schedule, run_config, categories)
        )
    return aggregate_runs(curves), curves


def write_curve(
    path: str | Path,
    curve: MeanCurve,
    include_time: bool = True,
) -> None:
    """Tabular export, one row per adjustment point.

    With include_time=False the wall-clock columns are written as 0.0 so
    two runs of the same seeded experiment produce identical bytes.
    """
    lines = ["texts_available,f1_mean,f1_sd,time_s_mean,time_s_sd,strategy,bundle,runs"]
    for pt in curve.points:
        t_mean = pt.time_s_mean if include_time else 0.0
        t_sd = pt.time_s_sd if include_time else 0.0
        lines.append(
            f"{pt.texts_available},{pt.f1_mean!r},{pt.f1_sd!r},"
            f"{t_mean!r},{t_sd!r},{curve.strategy},{curve.bundle_size},{curve.runs}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    """Hidden-Markov segment process: category segments alternate with
    outside gaps, each category emitting from its own token block mixed
    with background noise."""

    n_docs: int = 280
    min_doc_len: int = 12
    max_doc_len: int = 24
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    vocab_size: int = 120
    mean_segment_len: float = 4.0
    mean_gap_len: float = 3.0
    category_weights: tuple[float, ...] | None = None
    signal: float = 0.75

    def __post_init__(self) -> None:
        if self.n_docs < 1 or self.vocab_size < len(self.categories) + 1:
            raise ValidationError("bad synthetic corpus configuration")
        if not 1 <= self.min_doc_len <= self.max_doc_len:
            raise ValidationError("bad document length range")
        if self.category_weights is not None and len(self.category_weights) != len(
            self.categories
        ):
            raise ValidationError("category_weights must match categories")


def _geometric(rng: random.Random, mean: float) -> int:
    p = 1.0 / max(mean, 1.0)
    k = 1
    while rng.random() > p and k < 30:
        k += 1
    return k


def generate_synthetic_corpus(seed: int, config: SyntheticConfig = SyntheticConfig()) -> Corpus:
    """Deterministic synthetic corpus with gold spans, given a seed."""
    rng = random.Random(seed)
    n_blocks = len(config.categories) + 1
    blocks: list[list[str]] = [[] for _ in range(n_blocks)]
    for k in range(config.vocab_size):
        blocks[k % n_blocks].append(f"w{k:03d}")
    vocab = [t for block in blocks for t in block]
    weights = config.category_weights or (1.0,) * len(config.categories)

    def draw(block: int) -> str:
        if rng.random() < config.signal:
            return rng.choice(blocks[block])
        return rng.choice(vocab)

    # Low-discrepancy category assignment: each new segment takes the
    # category with the largest weight deficit (seeded tie-break), so the
    # corpus marginals track the configured targets closely.
    norm = sum(weights)
    targets = [w / norm for w in weights]
    counts = [0] * len(config.categories)

    def next_category() -> int:
        total = sum(counts) + 1
        deficits = [t * total - c for t, c in zip(targets, counts)]
        best = max(deficits)
        choice = rng.choice([i for i, d in enumerate(deficits) if d >= best - 1e-12])
        counts[choice] += 1
        return choice

    builder = CorpusBuilder(config.categories)
    for d in range(config.n_docs):
        doc_id = f"doc{d:04d}"
        length = rng.randint(config.min_doc_len, config.max_doc_len)
        tokens: list[str] = []
        spans: list[SpanAnnotation] = []
        background = len(config.categories)
        while len(tokens) < length:
            gap = min(_geometric(rng, config.mean_gap_len) - 1, length - len(tokens))
            tokens.extend(draw(background) for _ in range(gap))
            if len(tokens) >= length:
                break
            cat_idx = next_category()
            seg = min(_geometric(rng, config.mean_segment_len), length - len(tokens))
            begin = len(tokens)
            tokens.extend(draw(cat_idx) for _ in range(seg))
            spans.append(SpanAnnotation(begin, begin + seg, config.categories[cat_idx]))
        doc = Document(doc_id, tuple(tokens))
        builder.add_document(doc)
        builder.add_gold(AnnotationSet("gold", doc_id, tuple(spans)))
    return builder.build()


def holdout_split(
    corpus: Corpus, test_size: int, seed: int
) -> tuple[list[TrainItem], list[TrainItem]]:
    """Deterministic (stream pool, held-out test) split of a gold corpus."""
    ids = sorted(corpus.gold)
    if not 0 < test_size < len(ids):
        raise ValidationError(f"cannot hold out {test_size} of {len(ids)} documents")
    random.Random(seed).shuffle(ids)
    test_ids = sorted(ids[:test_size])
    pool_ids = sorted(ids[test_size:])
    return gold_items(corpus, pool_ids), gold_items(corpus, test_ids)
