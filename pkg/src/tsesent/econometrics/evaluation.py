"""Rolling one-step evaluation: MAPE and direction accuracy."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from datetime import date

import numpy as np

from .models import RegressionModel, predict_one_step
from .series import Series, SeriesError


class EvaluationError(ValueError):
    pass


def mape(y_true: Sequence[float], y_pred: Sequence[float]) -> tuple[float, int]:
    """Mean absolute percentage error (in percent) and the number of points skipped.

    Points whose true value is exactly zero are left out.
    """
    t = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if t.shape != p.shape:
        raise ValueError("true and predicted values differ in length")
    keep = t != 0
    skipped = int(np.sum(~keep))
    if not keep.any():
        raise EvaluationError("every true value is zero; MAPE is undefined")
    return float(np.mean(np.abs((t[keep] - p[keep]) / t[keep])) * 100.0), skipped


def direction_hits(y_true: Sequence[float], y_pred: Sequence[float]) -> np.ndarray:
    t = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if t.shape != p.shape:
        raise ValueError("true and predicted values differ in length")
    if len(t) < 2:
        raise EvaluationError("direction accuracy needs at least two test points")
    return np.sign(np.diff(p)) * np.sign(np.diff(t)) > 0


def direction_accuracy(y_true: Sequence[float], y_pred: Sequence[float]) -> float:
    """Share of consecutive pairs whose predicted and real changes agree in sign.

    A flat change on either side counts as a miss.
    """
    return float(np.mean(direction_hits(y_true, y_pred)))


@dataclass(frozen=True)
class EvalReport:
    mape: float
    direction_accuracy: float
    n_test: int
    n_skipped: int
    dates: tuple[date, ...]
    actual: tuple[float, ...]
    predicted: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "mape": self.mape,
            "direction_accuracy": self.direction_accuracy,
            "n_test": self.n_test,
            "mape_skipped_zero": self.n_skipped,
            "points": [
                {"date": d.isoformat(), "actual": a, "predicted": p}
                for d, a, p in zip(self.dates, self.actual, self.predicted)
            ],
        }


def split_index(n: int, train_fraction: float = 0.9) -> int:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    return int(math.floor(n * train_fraction))


def evaluate(
    model: RegressionModel,
    target: Series,
    candidates: Sequence[Series] | Mapping[str, Series] = (),
    train_fraction: float = 0.9,
) -> EvalReport:
    """Predict each held-out point from all data before it, chronologically."""
    if isinstance(candidates, Mapping):
        candidates = list(candidates.values())
    if model.target != target.name:
        raise ValueError(f"model predicts {model.target!r}, not {target.name!r}")
    n = len(target)
    data = {target.name: target.values}
    for c in candidates:
        if c.dates != target.dates:
            raise SeriesError(f"candidate {c.name} is not aligned with {target.name}")
        data[c.name] = c.values
    n_train = split_index(n, train_fraction)
    if n - n_train < 2:
        raise EvaluationError(f"test segment of {n - n_train} point(s) is too short")
    preds = []
    for t in range(n_train, n):
        history = {k: v[:t] for k, v in data.items()}
        preds.append(predict_one_step(model, history))
    actual = target.values[n_train:]
    m, skipped = mape(actual, preds)
    da = direction_accuracy(actual, preds)
    return EvalReport(m, da, n - n_train, skipped, target.dates[n_train:],
                      tuple(float(a) for a in actual), tuple(float(p) for p in preds))
