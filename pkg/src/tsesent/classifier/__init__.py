"""Bullish/bearish comment classification over lexicon features."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..ingest import Label
from .features import FeatureSchema, FeatureVector, SchemaError, featurize, match_terms
from .learners import Bagging, C45Tree, GaussianNB, added_errors, bootstrap_indices

__all__ = [
    "ALGORITHMS", "EvalMetrics", "FeatureSchema", "FeatureVector", "SchemaError", "TrainedClassifier",
    "Bagging", "C45Tree", "GaussianNB", "added_errors", "bootstrap_indices",
    "cross_validate", "encode_labels", "featurize", "load_model", "match_terms", "predict",
    "predict_many", "save_model", "stratified_folds", "train",
]

ALGORITHMS = ("naive_bayes", "decision_tree", "bagging")
MODEL_FORMAT_VERSION = 1


class TrainingError(ValueError):
    pass


def encode_labels(labels: Sequence[Label]) -> np.ndarray:
    out = np.empty(len(labels), dtype=np.int8)
    for i, lab in enumerate(labels):
        if lab is Label.BULLISH:
            out[i] = 1
        elif lab is Label.BEARISH:
            out[i] = 0
        else:
            raise TrainingError(f"example {i} has no bullish/bearish label")
    return out


def _decode(code: int) -> Label:
    return Label.BULLISH if code == 1 else Label.BEARISH


def _make_learner(algorithm: str, seed: int, params: dict):
    if algorithm == "naive_bayes":
        return GaussianNB(**params)
    if algorithm == "decision_tree":
        return C45Tree(**params)
    if algorithm == "bagging":
        return Bagging(seed=seed, **params)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


@dataclass
class TrainedClassifier:
    algorithm: str
    schema: FeatureSchema
    seed: int
    params: dict
    learner: object = field(repr=False)

    def predict_codes(self, vectors: Sequence[FeatureVector]) -> np.ndarray:
        return self.learner.predict(self.schema.densify(vectors))


def train(
    vectors: Sequence[FeatureVector],
    algorithm: str = "bagging",
    seed: int = 0,
    *,
    schema: FeatureSchema | None = None,
    **params,
) -> TrainedClassifier:
    """Fit one of ``ALGORITHMS`` on labeled vectors.

    The schema defaults to every term seen in ``vectors``; pass the lexicon's
    schema when the model must accept any lexicon term at prediction time.
    """
    if schema is None:
        schema = FeatureSchema.from_vectors(vectors)
    y = encode_labels([v.label for v in vectors])
    if len(np.unique(y)) < 2:
        raise TrainingError("training data must contain both bullish and bearish examples")
    X = schema.densify(vectors)
    learner = _make_learner(algorithm, seed, dict(params))
    learner.fit(X, y)
    return TrainedClassifier(algorithm, schema, seed, dict(params), learner)


def predict(model: TrainedClassifier, vector: FeatureVector) -> Label:
    return _decode(int(model.predict_codes([vector])[0]))


def predict_many(model: TrainedClassifier, vectors: Sequence[FeatureVector]) -> list[Label]:
    if not vectors:
        return []
    return [_decode(int(c)) for c in model.predict_codes(vectors)]


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    recall: float
    f_measure: float
    per_class: dict
    confusion: tuple[tuple[int, int], tuple[int, int]]
    n: int

    @classmethod
    def from_predictions(cls, y_true: np.ndarray, y_pred: np.ndarray) -> "EvalMetrics":
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        confusion = [[int(np.sum((y_true == t) & (y_pred == p))) for p in (0, 1)] for t in (0, 1)]
        per_class = {}
        for code, label in ((1, Label.BULLISH), (0, Label.BEARISH)):
            tp = confusion[code][code]
            support = sum(confusion[code])
            predicted = confusion[0][code] + confusion[1][code]
            precision = tp / predicted if predicted else 0.0
            recall = tp / support if support else 0.0
            f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            per_class[label.value] = {"precision": precision, "recall": recall, "f_measure": f1, "support": support}
        n = len(y_true)
        accuracy = (confusion[0][0] + confusion[1][1]) / n if n else 0.0
        recall = float(np.mean([c["recall"] for c in per_class.values()]))
        f_measure = float(np.mean([c["f_measure"] for c in per_class.values()]))
        return cls(accuracy, recall, f_measure, per_class, (tuple(confusion[0]), tuple(confusion[1])), n)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "per_class": self.per_class,
            "confusion": [list(r) for r in self.confusion],
            "n": self.n,
        }


def stratified_folds(labels: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold id per example; each class is shuffled and dealt round-robin."""
    rng = np.random.default_rng(seed)
    folds = np.empty(len(labels), dtype=np.intp)
    offset = 0
    for code in (1, 0):
        members = np.flatnonzero(labels == code)
        members = members[rng.permutation(len(members))]
        folds[members] = (np.arange(len(members)) + offset) % k
        offset += len(members)
    return folds


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def cross_validate(
    vectors: Sequence[FeatureVector],
    algorithm: str = "bagging",
    k: int = 10,
    seed: int = 0,
    *,
    schema: FeatureSchema | None = None,
    **params,
) -> EvalMetrics:
    """Stratified k-fold evaluation with metrics pooled over all held-out predictions."""
    n = len(vectors)
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise ValueError(f"{n} examples cannot fill {k} folds")
    if schema is None:
        schema = FeatureSchema.from_vectors(vectors)
    y = encode_labels([v.label for v in vectors])
    X = schema.densify(vectors)
    folds = stratified_folds(y, k, seed)
    pred = np.empty(n, dtype=np.int8)
    for f in range(k):
        test = folds == f
        if not test.any():
            continue
        train_y = y[~test]
        if len(np.unique(train_y)) < 2:
            raise TrainingError(f"fold {f}: training part holds a single class")
        learner = _make_learner(algorithm, _fold_seed(seed, f), dict(params))
        learner.fit(X[~test], train_y)
        pred[test] = learner.predict(X[test])
    return EvalMetrics.from_predictions(y, pred)


def save_model(model: TrainedClassifier, path: str | Path, extra: dict | None = None) -> None:
    doc = {
        "format": "tsesent-classifier",
        "version": MODEL_FORMAT_VERSION,
        "algorithm": model.algorithm,
        "seed": model.seed,
        "params": model.params,
        "schema": {"terms": list(model.schema.terms), "include_score": model.schema.include_score},
        "learner": model.learner.to_dict(),
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> TrainedClassifier:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a model file ({exc.msg})") from None
    if doc.get("format") != "tsesent-classifier" or doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format/version")
    cls = {"naive_bayes": GaussianNB, "decision_tree": C45Tree, "bagging": Bagging}[doc["algorithm"]]
    schema = FeatureSchema(tuple(doc["schema"]["terms"]), doc["schema"]["include_score"])
    return TrainedClassifier(doc["algorithm"], schema, doc["seed"], doc["params"], cls.from_dict(doc["learner"]))
