"""Linear-chain CRF: potentials, decoding, and likelihood analytics.

The score of a labeling y for a document x is

    score(x, y) = sum_i emission(f_i, y_i) + sum_{i>=1} transition(y_{i-1}, y_i)

where f_i is the feature multiset at position i.  There are no dedicated
start or stop potentials.  The partition function, posteriors and
gradients are computed with log-space forward and backward recursions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import Document, bio_decode, SpanAnnotation
from ..errors import AnnokitError, ValidationError
from .features import FeatureExtractor, FeatureVocabulary


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_f1: float | None


@dataclass
class TaggerModel:
    """CRF parameters plus the feature pipeline that produced them.

    Immutable for inference; training code owns its instance exclusively.
    ``emissions`` has one row per feature id, one column per label;
    ``transitions`` is (label, label), indexed [previous, current].
    """

    labels: tuple[str, ...]
    vocab: FeatureVocabulary
    emissions: np.ndarray
    transitions: np.ndarray
    extractor: FeatureExtractor = field(default_factory=FeatureExtractor)
    history: list[EpochRecord] = field(default_factory=list)

    @classmethod
    def fresh(
        cls,
        labels: tuple[str, ...],
        extractor: FeatureExtractor | None = None,
    ) -> "TaggerModel":
        n = len(labels)
        return cls(
            labels=tuple(labels),
            vocab=FeatureVocabulary(),
            emissions=np.zeros((0, n)),
            transitions=np.zeros((n, n)),
            extractor=extractor or FeatureExtractor(),
        )

    @property
    def label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def copy(self) -> "TaggerModel":
        return TaggerModel(
            labels=self.labels,
            vocab=self.vocab.copy(),
            emissions=self.emissions.copy(),
            transitions=self.transitions.copy(),
            extractor=self.extractor,
            history=list(self.history),
        )

    def grow_features(self, n_features: int) -> None:
        """Extend the emission matrix with zero rows for new feature ids."""
        missing = n_features - self.emissions.shape[0]
        if missing > 0:
            self.emissions = np.vstack(
                [self.emissions, np.zeros((missing, len(self.labels)))]
            )

    def feature_ids(self, doc: Document, grow: bool = False) -> list[list[int]]:
        ids = [
            self.vocab.ids(feats, grow=grow) for feats in self.extractor.extract_all(doc)
        ]
        if grow:
            self.grow_features(len(self.vocab))
        return ids

    def emission_scores(self, fids: list[list[int]]) -> np.ndarray:
        """Per-position label score matrix (n, n_labels) from feature ids."""
        scores = np.zeros((len(fids), len(self.labels)))
        for i, ids in enumerate(fids):
            if ids:
                scores[i] = self.emissions[ids].sum(axis=0)
        return scores


def _logsumexp(a: np.ndarray, axis: int | None = None):
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out.squeeze(axis) if axis is not None else out.item()


def _label_indices(model: TaggerModel, labels: list[str]) -> np.ndarray:
    index = model.label_index
    try:
        return np.array([index[lab] for lab in labels], dtype=int)
    except KeyError as exc:
        raise ValidationError(f"unknown label {exc}") from None


def sequence_score(model: TaggerModel, doc: Document, labels: list[str]) -> float:
    """Unnormalized linear-chain score of one labeling."""
    if len(labels) != len(doc):
        raise ValidationError(
            f"labeling length {len(labels)} != document length {len(doc)}"
        )
    y = _label_indices(model, labels)
    scores = model.emission_scores(model.feature_ids(doc))
    total = float(scores[np.arange(len(y)), y].sum())
    total += float(model.transitions[y[:-1], y[1:]].sum())
    return total


def viterbi(model: TaggerModel, doc: Document) -> list[str]:
    """Argmax labeling.  Ties are broken toward the smallest label index at
    every backtrack step, so the all-zero model decodes to all-O."""
    if len(doc) < 1:
        raise ValidationError("cannot decode an empty document")
    E = model.emission_scores(model.feature_ids(doc))
    n, L = E.shape
    T = model.transitions
    delta = E[0].copy()
    back = np.zeros((n, L), dtype=int)
    for t in range(1, n):
        cand = delta[:, None] + T  # cand[prev, cur]
        back[t] = np.argmax(cand, axis=0)  # first max = smallest prev index
        delta = cand[back[t], np.arange(L)] + E[t]
    path = [int(np.argmax(delta))]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t][path[-1]]))
    path.reverse()
    return [model.labels[i] for i in path]


def viterbi_margin(model: TaggerModel, doc: Document) -> float:
    """Score gap between the best and second-best label sequences."""
    E = model.emission_scores(model.feature_ids(doc))
    n, L = E.shape
    T = model.transitions
    top1 = E[0].copy()
    top2 = np.full(L, -np.inf)
    for t in range(1, n):
        c1 = top1[:, None] + T
        c2 = top2[:, None] + T
        stacked = np.concatenate([c1, c2], axis=0)
        part = np.sort(stacked, axis=0)
        top1 = part[-1] + E[t]
        top2 = part[-2] + E[t]
    best = np.concatenate([top1, top2])
    best.sort()
    second = best[-2]
    return float(best[-1] - second) if np.isfinite(second) else float("inf")


def predict_spans(model: TaggerModel, doc: Document) -> list[SpanAnnotation]:
    """Decoded spans: bio_decode(viterbi(model, doc))."""
    return bio_decode(viterbi(model, doc))


def _forward(E: np.ndarray, T: np.ndarray) -> np.ndarray:
    n, L = E.shape
    alpha = np.zeros((n, L))
    alpha[0] = E[0]
    for t in range(1, n):
        alpha[t] = E[t] + _logsumexp(alpha[t - 1][:, None] + T, axis=0)
    return alpha


def _backward(E: np.ndarray, T: np.ndarray) -> np.ndarray:
    n, L = E.shape
    beta = np.zeros((n, L))
    for t in range(n - 2, -1, -1):
        beta[t] = _logsumexp(T + (E[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def forward_logz(model: TaggerModel, doc: Document) -> float:
    E = model.emission_scores(model.feature_ids(doc))
    return float(_logsumexp(_forward(E, model.transitions)[-1]))


def backward_logz(model: TaggerModel, doc: Document) -> float:
    E = model.emission_scores(model.feature_ids(doc))
    beta = _backward(E, model.transitions)
    return float(_logsumexp(E[0] + beta[0]))


def _posteriors(E: np.ndarray, T: np.ndarray):
    """(logZ, node marginals (n, L), edge marginals (n-1, L, L))."""
    alpha = _forward(E, T)
    beta = _backward(E, T)
    logz = float(_logsumexp(alpha[-1]))
    node = np.exp(alpha + beta - logz)
    n = E.shape[0]
    edge = np.zeros((max(n - 1, 0), T.shape[0], T.shape[1]))
    for t in range(1, n):
        logm = alpha[t - 1][:, None] + T + (E[t] + beta[t])[None, :] - logz
        edge[t - 1] = np.exp(logm)
    if not np.isfinite(logz) or not np.all(np.isfinite(node)):
        raise AnnokitError("non-finite value in forward-backward")
    return logz, node, edge


def log_likelihood_and_gradient(
    model: TaggerModel, doc: Document, gold_labels: list[str]
):
    """log p(gold | doc) and its gradient in the model weights.

    Returns (ll, d_emissions, d_transitions); the gradient is empirical
    minus expected feature counts, without any regularization term.
    """
    if len(gold_labels) != len(doc):
        raise ValidationError(
            f"labeling length {len(gold_labels)} != document length {len(doc)}"
        )
    fids = model.feature_ids(doc)
    E = model.emission_scores(fids)
    T = model.transitions
    y = _label_indices(model, gold_labels)
    logz, node, edge = _posteriors(E, T)
    gold_score = float(E[np.arange(len(y)), y].sum() + T[y[:-1], y[1:]].sum())
    ll = gold_score - logz

    d_em = np.zeros_like(model.emissions)
    for i, ids in enumerate(fids):
        row = -node[i]
        row[y[i]] += 1.0
        for f in ids:
            d_em[f] += row
    d_tr = -edge.sum(axis=0)
    d_tr[y[:-1], y[1:]] += 1.0
    return ll, d_em, d_tr
