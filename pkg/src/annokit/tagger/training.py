"""SGD training with early stopping, seeded and fully deterministic.

One training call owns its model.  Document order is shuffled with a
seeded generator each epoch; a deterministic dev split (last fraction of
the seeded shuffle) drives early stopping on span macro-F1.  Warm starts
reuse the incoming weights and grow the feature vocabulary append-only on
the new data.  The per-document update is

    w += lr_t * (grad log p(gold | doc) - l2 * w)

with lr_t = learning_rate / (1 + lr_decay * epoch).  The recorded train
loss is mean(-log-likelihood) + (l2 / 2) * ||w||^2, evaluated at epoch end.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from ..corpus import DEFAULT_CATEGORIES, Document, bio_decode, bio_labels
from ..errors import ConfigError, ValidationError
from .crf import EpochRecord, TaggerModel, predict_spans
from .evaluation import evaluate_macro_f1
from .features import FeatureExtractor


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 50
    patience: int = 5
    learning_rate: float = 0.1
    lr_decay: float = 1.0
    l2: float = 1e-4
    seed: int = 0
    dev_fraction: float = 0.1
    warm_start: bool = False

    def __post_init__(self) -> None:
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if not 0.0 < self.dev_fraction < 1.0:
            raise ConfigError("dev_fraction must be in (0, 1)")
        if self.max_epochs < 0 or self.learning_rate <= 0 or self.l2 < 0:
            raise ConfigError("bad training hyperparameters")


class _DocCache:
    """Precomputed index arrays for one training document.

    Feature ids are stored flat; every position has at least one feature,
    so position segments are recovered with reduceat over ``pos_starts``.
    For the weight update the same ids are kept sorted (``order``) with
    segment starts per distinct feature id (``fid_starts``).
    """

    __slots__ = (
        "n", "flat_fids", "pos_idx", "pos_starts",
        "order", "unique_fids", "fid_starts", "y", "emp_tr",
    )

    def __init__(self, model: TaggerModel, doc: Document, labels: list[str]):
        index = model.label_index
        try:
            self.y = np.array([index[lab] for lab in labels], dtype=int)
        except KeyError as exc:
            raise ValidationError(f"unknown label {exc} in document {doc.id!r}") from None
        fids = model.feature_ids(doc, grow=True)
        self.n = len(doc)
        counts = [len(ids) for ids in fids]
        self.flat_fids = np.array([f for ids in fids for f in ids], dtype=np.intp)
        self.pos_idx = np.repeat(np.arange(self.n), counts)
        self.pos_starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.intp)
        self.order = np.argsort(self.flat_fids, kind="stable")
        sorted_fids = self.flat_fids[self.order]
        first = np.concatenate(([True], sorted_fids[1:] != sorted_fids[:-1]))
        self.unique_fids = sorted_fids[first]
        self.fid_starts = np.flatnonzero(first)
        L = len(model.labels)
        self.emp_tr = np.zeros((L, L))
        np.add.at(self.emp_tr, (self.y[:-1], self.y[1:]), 1.0)


def _emission_matrix(em: np.ndarray, cache: _DocCache, n_labels: int) -> np.ndarray:
    return np.add.reduceat(em[cache.flat_fids], cache.pos_starts, axis=0)


def _scaled_forward(E: np.ndarray, tr: np.ndarray):
    """Scaled-probability forward pass; numerically equivalent to the
    log-space recursion in crf.py but built from small matrix products.

    Returns (logz, alpha, expT, expE) with alpha row-normalized.
    """
    n, L = E.shape
    tmax = float(tr.max())
    expT = np.exp(tr - tmax)
    emax = E.max(axis=1)
    expE = np.exp(E - emax[:, None])
    alpha = np.empty((n, L))
    scales = np.empty(n)
    a = expE[0]
    s = a.sum()
    alpha[0] = a / s
    scales[0] = s
    for t in range(1, n):
        a = (alpha[t - 1] @ expT) * expE[t]
        s = a.sum()
        alpha[t] = a / s
        scales[t] = s
    logz = float(np.log(scales).sum()) + float(emax.sum()) + (n - 1) * tmax
    return logz, alpha, expT, expE


def _doc_ll(em: np.ndarray, tr: np.ndarray, cache: _DocCache) -> float:
    E = _emission_matrix(em, cache, tr.shape[0])
    logz, _alpha, _expT, _expE = _scaled_forward(E, tr)
    y = cache.y
    gold = float(E[np.arange(cache.n), y].sum() + tr[y[:-1], y[1:]].sum())
    return gold - logz


def _sgd_step(em: np.ndarray, tr: np.ndarray, cache: _DocCache, lr: float, l2: float) -> None:
    n, L = cache.n, tr.shape[0]
    E = _emission_matrix(em, cache, L)
    _logz, alpha, expT, expE = _scaled_forward(E, tr)

    # scaled backward plus streaming node/edge posteriors
    node = np.empty((n, L))
    exp_tr = np.zeros_like(tr)
    b = np.ones(L)
    node[n - 1] = alpha[n - 1] / alpha[n - 1].sum()
    for t in range(n - 1, 0, -1):
        w = b * expE[t]
        edge = expT * (alpha[t - 1][:, None] * w[None, :])
        exp_tr += edge / edge.sum()
        b = expT @ w
        b /= b.sum()
        prod = alpha[t - 1] * b
        node[t - 1] = prod / prod.sum()

    y = cache.y
    D = -node
    D[np.arange(n), y] += 1.0

    em *= 1.0 - lr * l2
    rows = np.add.reduceat(D[cache.pos_idx[cache.order]], cache.fid_starts, axis=0)
    em[cache.unique_fids] += lr * rows
    tr *= 1.0 - lr * l2
    tr += lr * (cache.emp_tr - exp_tr)


def train(
    docs: list[tuple[Document, list[str]]],
    config: TrainConfig,
    initial: TaggerModel | None = None,
    categories: tuple[str, ...] = DEFAULT_CATEGORIES,
    extractor: FeatureExtractor | None = None,
) -> TaggerModel:
    """Train a tagger on (document, gold BIO labels) pairs.

    ``initial`` warm-starts from an existing model; otherwise training
    begins from zero weights over the BIO label set of ``categories``.
    Returns the snapshot with the best dev macro-F1 (the final weights
    when the split leaves no dev documents).
    """
    if not docs:
        raise ValidationError("no training documents")
    if config.warm_start and initial is None:
        raise ValidationError("warm_start requires an initial model")

    if initial is not None:
        model = initial.copy()
    else:
        model = TaggerModel.fresh(bio_labels(categories), extractor)
    model.history = []
    if config.max_epochs == 0:
        return model

    rng = random.Random(config.seed)
    order = list(range(len(docs)))
    rng.shuffle(order)
    n_dev = min(int(config.dev_fraction * len(docs)), len(docs) - 1)
    train_idx = order[: len(order) - n_dev] if n_dev else order
    dev_idx = order[len(order) - n_dev :] if n_dev else []

    caches = {i: _DocCache(model, docs[i][0], docs[i][1]) for i in train_idx}
    em, tr = model.emissions, model.transitions
    cats = tuple(lab[2:] for lab in model.labels if lab.startswith("B-"))
    dev_gold = {
        f"{i}:{docs[i][0].id}": bio_decode(docs[i][1]) for i in dev_idx
    }

    def dev_f1() -> float:
        predicted = {
            f"{i}:{docs[i][0].id}": predict_spans(model, docs[i][0]) for i in dev_idx
        }
        return evaluate_macro_f1(predicted, dev_gold, cats).macro_f1

    def train_loss() -> float:
        mean_nll = -sum(_doc_ll(em, tr, caches[i]) for i in train_idx) / len(train_idx)
        return mean_nll + 0.5 * config.l2 * (
            float((em * em).sum()) + float((tr * tr).sum())
        )

    # The incoming weights count as the first snapshot candidate, so a
    # warm-started model is never returned with a worse dev score than it
    # arrived with (fresh models start at all-O decoding, dev F1 0).  Dev
    # ties are broken toward the lower training loss; only a strictly
    # better dev score resets the patience counter.
    best_f1 = dev_f1() if dev_idx else -np.inf
    best_loss = train_loss() if dev_idx else np.inf
    best_weights: tuple[np.ndarray, np.ndarray] | None = (
        (em.copy(), tr.copy()) if dev_idx else None
    )
    epochs_since_best = 0
    for epoch in range(config.max_epochs):
        lr = config.learning_rate / (1.0 + config.lr_decay * epoch)
        rng.shuffle(train_idx)
        for i in train_idx:
            _sgd_step(em, tr, caches[i], lr, config.l2)

        loss = train_loss()
        f1 = dev_f1() if dev_idx else None
        model.history.append(EpochRecord(epoch, float(loss), f1))

        if dev_idx:
            if f1 > best_f1 or (f1 == best_f1 and loss < best_loss):
                if f1 > best_f1:
                    epochs_since_best = -1
                best_f1 = f1
                best_loss = loss
                best_weights = (em.copy(), tr.copy())
            epochs_since_best += 1
            if epochs_since_best >= config.patience:
                break

    if best_weights is not None:
        model.emissions, model.transitions = best_weights
    if not np.all(np.isfinite(model.emissions)) or not np.all(
        np.isfinite(model.transitions)
    ):
        raise ValidationError("training produced non-finite weights")
    return model
