"""Lexicon-based feature vectors for comments."""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from ..ingest import Label
from ..lexicon import BIGRAM, SentimentLexicon
from ..persian_text import Stemmer, Token, extract_ngrams


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    term_features: Mapping[str, float]
    comment_score: float | None = None
    label: Label | None = None
    n_tokens: int = 0
    counts: Mapping[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "term_features", MappingProxyType(dict(self.term_features)))
        object.__setattr__(self, "counts", MappingProxyType(dict(self.counts)))

    def with_label(self, label: Label | None) -> "FeatureVector":
        return FeatureVector(self.term_features, self.comment_score, label, self.n_tokens, self.counts)

    def without_score(self) -> "FeatureVector":
        return FeatureVector(self.term_features, None, self.label, self.n_tokens, self.counts)


def match_terms(
    tokens: Sequence[Token], lexicon: SentimentLexicon, stemmer: Stemmer | None = None
) -> Counter:
    """Count lexicon hits scanning left to right, bigrams before unigrams.

    A token consumed by a matched bigram is not counted again as a unigram.
    """
    unigrams, bigrams = extract_ngrams(tokens, stemmer)
    counts: Counter = Counter()
    i, n = 0, len(unigrams)
    while i < n:
        if i + 1 < n:
            entry = lexicon.get(bigrams[i])
            if entry is not None and entry.kind == BIGRAM:
                counts[bigrams[i]] += 1
                i += 2
                continue
        if unigrams[i] in lexicon:
            counts[unigrams[i]] += 1
        i += 1
    return counts


def featurize(
    tokens: Sequence[Token],
    lexicon: SentimentLexicon,
    include_score: bool = True,
    *,
    stemmer: Stemmer | None = None,
    label: Label | None = None,
) -> FeatureVector:
    """Feature value per matched term = occurrences x lexicon score.

    The comment score is the sum of matched scores divided by the comment's
    token count (0 for an empty comment).
    """
    counts = match_terms(tokens, lexicon, stemmer)
    features = {t: c * lexicon[t].score for t, c in counts.items()}
    n = len(tokens)
    comment_score = None
    if include_score:
        comment_score = sum(features.values()) / n if n else 0.0
    return FeatureVector(features, comment_score, label, n, counts)


@dataclass(frozen=True)
class FeatureSchema:
    terms: tuple[str, ...]
    include_score: bool = True

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], include_score: bool | None = None) -> "FeatureSchema":
        terms = sorted({t for v in vectors for t in v.term_features}, key=lambda t: t.encode("utf-8"))
        if include_score is None:
            include_score = bool(vectors) and vectors[0].comment_score is not None
        return cls(tuple(terms), include_score)

    @classmethod
    def from_lexicon(cls, lexicon: SentimentLexicon, include_score: bool = True) -> "FeatureSchema":
        return cls(tuple(lexicon.terms()), include_score)

    @property
    def width(self) -> int:
        return len(self.terms) + int(self.include_score)

    def densify(self, vectors: Sequence[FeatureVector]) -> np.ndarray:
        index = {t: i for i, t in enumerate(self.terms)}
        X = np.zeros((len(vectors), self.width))
        for r, v in enumerate(vectors):
            for term, value in v.term_features.items():
                col = index.get(term)
                if col is None:
                    raise SchemaError(f"vector {r} has term {term!r} outside the model schema")
                X[r, col] = value
            if self.include_score:
                if v.comment_score is None:
                    raise SchemaError(f"vector {r} lacks the comment score the schema expects")
                X[r, -1] = v.comment_score
            elif v.comment_score is not None:
                raise SchemaError(f"vector {r} carries a comment score but the schema has none")
        return X
