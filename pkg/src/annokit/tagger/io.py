"""Model serialization: a versioned JSON container, round-trip exact.

Floats survive the round trip bit-for-bit because JSON numbers are written
with Python's shortest-repr float formatting.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .crf import EpochRecord, TaggerModel
from .features import FeatureExtractor, FeatureVocabulary

MODEL_FORMAT_VERSION = 1


def save_model(model: TaggerModel, path: str | Path) -> None:
    payload = {
        "format": MODEL_FORMAT_VERSION,
        "labels": list(model.labels),
        "features": model.vocab.names,
        "extractor": {"radius": model.extractor.radius, "max_affix": model.extractor.max_affix},
        "emissions": model.emissions.tolist(),
        "transitions": model.transitions.tolist(),
        "history": [
            {"epoch": h.epoch, "train_loss": h.train_loss, "dev_f1": h.dev_f1}
            for h in model.history
        ],
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TaggerModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT_VERSION:
        raise FormatError(f"{path}: missing or unsupported model format version")
    try:
        labels = tuple(payload["labels"])
        vocab = FeatureVocabulary(payload["features"])
        extractor = FeatureExtractor(**payload["extractor"])
        emissions = np.array(payload["emissions"], dtype=float).reshape(
            len(vocab), len(labels)
        )
        transitions = np.array(payload["transitions"], dtype=float).reshape(
            len(labels), len(labels)
        )
        history = [
            EpochRecord(h["epoch"], h["train_loss"], h["dev_f1"])
            for h in payload["history"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed model container: {exc}") from None
    return TaggerModel(
        labels=labels,
        vocab=vocab,
        emissions=emissions,
        transitions=transitions,
        extractor=extractor,
        history=history,
    )
