"""Time-series side: returns, correlograms, Granger tests and the M0/M1 models."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .evaluation import EvalReport, EvaluationError, direction_accuracy, evaluate, mape, split_index
from .models import (
    FLAG_NO_CANDIDATE, FLAG_NO_LAGS, FLAG_NOT_WHITE, INTERCEPT, CandidateScreen, PredictionError,
    RegressionModel, Term, build_m1, fit_m0, predict_one_step, screen_candidates,
)
from .series import Series, SeriesError, align, daily_return
from .stats import (
    DegenerateError, GrangerResult, LagCorrelation, OLSResult, RankError, acf, band, ccf, fit_ols,
    granger_test, ljung_box,
)

__all__ = [
    "CandidateScreen", "Comparison", "DegenerateError", "EvalReport", "EvaluationError", "FLAG_NO_CANDIDATE",
    "FLAG_NO_LAGS", "FLAG_NOT_WHITE", "GrangerResult", "INTERCEPT", "LagCorrelation", "OLSResult",
    "PredictionError", "RankError", "RegressionModel", "Series", "SeriesError", "Term", "acf", "align",
    "band", "build_m1", "ccf", "compare_models", "daily_return", "direction_accuracy", "evaluate",
    "fit_m0", "fit_ols", "granger_test", "ljung_box", "mape", "predict_one_step", "screen_candidates",
    "split_index",
]


@dataclass(frozen=True)
class Comparison:
    m0: RegressionModel
    m1: RegressionModel
    m0_eval: EvalReport
    m1_eval: EvalReport


def compare_models(target: Series, candidates: Sequence[Series], max_lag: int = 5, alpha: float = 0.05,
                   train_fraction: float = 0.9, correction: str = "bonferroni") -> Comparison:
    """Fit M0 and M1 on the training head, then score both on the held-out tail."""
    aligned = align(target, *candidates)
    target, candidates = aligned[0], aligned[1:]
    n_train = split_index(len(target), train_fraction)
    head = target.head(n_train)
    heads = [c.head(n_train) for c in candidates]
    m0 = fit_m0(head, max_lag, alpha)
    m1 = build_m1(m0, head, heads, max_lag, alpha, correction)
    return Comparison(
        m0, m1,
        evaluate(m0, target, candidates, train_fraction),
        evaluate(m1, target, candidates, train_fraction),
    )
