"""Linear-chain CRF sequence labeller over BIO labels.

The tagger contract (train, viterbi, predict_spans, warm start) is model
agnostic; this package provides a feature-based implementation.
"""

from .crf import (
    EpochRecord,
    TaggerModel,
    backward_logz,
    forward_logz,
    log_likelihood_and_gradient,
    predict_spans,
    sequence_score,
    viterbi,
    viterbi_margin,
)
from .evaluation import CategoryScore, F1Report, evaluate_macro_f1, evaluate_token_macro_f1
from .features import FeatureExtractor, FeatureVocabulary, token_shape
from .io import load_model, save_model
from .training import TrainConfig, train

__all__ = [
    "CategoryScore",
    "EpochRecord",
    "F1Report",
    "FeatureExtractor",
    "FeatureVocabulary",
    "TaggerModel",
    "TrainConfig",
    "backward_logz",
    "evaluate_macro_f1",
    "evaluate_token_macro_f1",
    "forward_logz",
    "load_model",
    "log_likelihood_and_gradient",
    "predict_spans",
    "save_model",
    "sequence_score",
    "token_shape",
    "train",
    "viterbi",
    "viterbi_margin",
]
