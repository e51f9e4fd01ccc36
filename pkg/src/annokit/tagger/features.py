"""Sparse token features for the sequence labeller.

Feature strings are produced deterministically from a token window; the
model maps them to dense integer ids through an append-only vocabulary,
assigned first-seen.  Tokens outside the document map to boundary
sentinels so every position yields a full window.  Extraction is pure in
(extractor, document), so whole-document feature lists are memoized.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from ..corpus import Document
from ..errors import ValidationError

BOS = "<s>"
EOS = "</s>"


def token_shape(token: str) -> str:
    """Collapsed character-class shape, e.g. 'Abc12.' -> 'Xx9.'."""
    out = []
    for ch in token:
        if ch.isdigit():
            cls = "9"
        elif ch.isalpha():
            cls = "X" if ch.isupper() else "x"
        else:
            cls = "."
        if not out or out[-1] != cls:
            out.append(cls)
    return "".join(out)


@dataclass(frozen=True)
class FeatureExtractor:
    """Window features: identity, lowercase and shape for every offset in
    [-radius, radius], prefixes and suffixes up to ``max_affix`` for the
    centre token, and a begin/middle/end position bucket."""

    radius: int = 2
    max_affix: int = 3

    def extract(self, doc: Document, position: int) -> list[str]:
        n = len(doc)
        if position < 0 or position >= n:
            raise ValidationError(f"position {position} out of range for length {n}")
        feats: list[str] = []
        for off in range(-self.radius, self.radius + 1):
            j = position + off
            tok = BOS if j < 0 else EOS if j >= n else doc.tokens[j]
            feats.append(f"{off}:id={tok}")
            feats.append(f"{off}:low={tok.lower()}")
            feats.append(f"{off}:shape={token_shape(tok)}")
        tok = doc.tokens[position]
        for k in range(1, min(self.max_affix, len(tok)) + 1):
            feats.append(f"pre{k}={tok[:k]}")
            feats.append(f"suf{k}={tok[-k:]}")
        feats.append(f"bucket={('B', 'M', 'E')[3 * position // n]}")
        return feats

    def extract_all(self, doc: Document) -> tuple[tuple[str, ...], ...]:
        """Feature strings for every position, memoized per document."""
        return _extract_all_cached(self, doc)


@lru_cache(maxsize=8192)
def _extract_all_cached(
    extractor: FeatureExtractor, doc: Document
) -> tuple[tuple[str, ...], ...]:
    return tuple(
        tuple(extractor.extract(doc, i)) for i in range(len(doc))
    )


class FeatureVocabulary:
    """Append-only feature string to dense id mapping."""

    def __init__(self, feature_strings: list[str] | None = None):
        self._by_name: dict[str, int] = {}
        self._names: list[str] = []
        for name in feature_strings or []:
            self.add(name)

    def __len__(self) -> int:
        return len(self._names)

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def add(self, name: str) -> int:
        idx = self._by_name.get(name)
        if idx is None:
            idx = len(self._names)
            self._by_name[name] = idx
            self._names.append(name)
        return idx

    def get(self, name: str) -> int | None:
        return self._by_name.get(name)

    def ids(self, names, grow: bool = False) -> list[int]:
        """Map feature strings to ids; unseen strings are added when
        ``grow`` else skipped (inference on unknown features)."""
        if grow:
            return [self.add(n) for n in names]
        get = self._by_name.get
        return [idx for idx in map(get, names) if idx is not None]

    def copy(self) -> "FeatureVocabulary":
        return FeatureVocabulary(self._names)
