"""Correlograms, OLS and Granger F-tests."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg, stats

from .series import Series

BAND_Z = 1.96


class DegenerateError(ValueError):
    pass


class RankError(DegenerateError):
    def __init__(self, columns: Sequence[str]):
        self.columns = tuple(columns)
        super().__init__(f"design matrix is rank deficient; collinear column(s): {', '.join(self.columns)}")


class LagCorrelation(NamedTuple):
    lag: int
    r: float
    significant: bool


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, Series) else np.asarray(x, dtype=float)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    # written symmetrically so corr(a, b) and corr(b, a) agree bit for bit
    da = a - a.mean()
    db = b - b.mean()
    saa = float(np.dot(da, da))
    sbb = float(np.dot(db, db))
    if saa == 0.0 or sbb == 0.0:
        return 0.0
    return float(np.dot(da, db)) / math.sqrt(saa * sbb)


def band(n: int) -> float:
    """Half-width of the 95% white-noise band."""
    return BAND_Z / math.sqrt(n)


def acf(series, max_lag: int) -> list[LagCorrelation]:
    """Lag-k autocorrelations for k = 1..max_lag.

    Each value is the Pearson correlation of the series with its k-step lag over
    the overlapping segment; significance uses the band for the full length.
    """
    x = _values(series)
    n = len(x)
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    if n <= max_lag + 2:
        raise ValueError(f"series of length {n} is too short for {max_lag} lags")
    if np.ptp(x) == 0:
        raise DegenerateError("autocorrelation of a constant series is undefined")
    b = band(n)
    out = []
    for k in range(1, max_lag + 1):
        r = _pearson(x[k:], x[:-k])
        out.append(LagCorrelation(k, r, abs(r) > b))
    return out


def ccf(x, y, max_lag: int) -> list[LagCorrelation]:
    """corr(x[t+k], y[t]) for k in -max_lag..max_lag; k < 0 means x leads y."""
    xv, yv = _values(x), _values(y)
    n = len(xv)
    if len(yv) != n:
        raise ValueError("ccf needs equal-length aligned series")
    if max_lag < 0 or n <= max_lag + 2:
        raise ValueError(f"series of length {n} is too short for {max_lag} lags")
    if np.ptp(xv) == 0 or np.ptp(yv) == 0:
        raise DegenerateError("cross-correlation with a constant series is undefined")
    b = band(n)
    out = []
    for k in range(-max_lag, max_lag + 1):
        if k < 0:
            r = _pearson(xv[:n + k], yv[-k:])
        elif k > 0:
            r = _pearson(xv[k:], yv[:n - k])
        else:
            r = _pearson(xv, yv)
        out.append(LagCorrelation(k, r, abs(r) > b))
    return out


def ljung_box(resid, lags: int = 10, dof_used: int = 0) -> tuple[float, float]:
    x = _values(resid)
    n = len(x)
    if n <= lags + 1:
        raise ValueError("too few residuals for the portmanteau test")
    d = x - x.mean()
    denom = float(np.dot(d, d))
    if denom == 0.0:
        return 0.0, 1.0
    q = 0.0
    for k in range(1, lags + 1):
        rk = float(np.dot(d[k:], d[:-k])) / denom
        q += rk * rk / (n - k)
    q *= n * (n + 2)
    df = max(lags - dof_used, 1)
    return q, float(stats.chi2.sf(q, df))


@dataclass(frozen=True)
class OLSResult:
    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    tstat: np.ndarray
    pvalues: np.ndarray
    residuals: np.ndarray
    rss: float
    df_resid: int

    @property
    def sigma(self) -> float:
        return math.sqrt(self.rss / self.df_resid)


def fit_ols(X, y, names: Sequence[str] | None = None, rank_tol: float = 1e-10) -> OLSResult:
    """Least squares via Householder QR with two-sided t-test p-values."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: design {X.shape}, target {y.shape}")
    n, p = X.shape
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(p))
    if len(names) != p:
        raise ValueError("one name per column required")
    if n <= p:
        raise DegenerateError(f"{n} rows cannot support {p} coefficients")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DegenerateError("design and target must be finite")

    _, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rank_tol * diag[0])) if diag[0] > 0 else 0
    if rank < p:
        raise RankError([names[j] for j in sorted(piv[rank:])])

    Q, R = np.linalg.qr(X)
    coef = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ coef
    rss = float(np.dot(resid, resid))
    df = n - p
    Rinv = linalg.solve_triangular(R, np.eye(p))
    se = np.sqrt(rss / df * np.sum(Rinv * Rinv, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = coef / se
    zero_se = se == 0
    t = np.where(zero_se, np.where(coef == 0, 0.0, np.copysign(np.inf, coef)), t)
    pv = 2.0 * stats.t.sf(np.abs(t), df)
    return OLSResult(names, coef, se, t, pv, resid, rss, df)


def lag_matrix(columns: Iterable[tuple[np.ndarray, int]], start: int, stop: int) -> np.ndarray:
    """Stack ``values[t - lag]`` for t in [start, stop) per (values, lag) column."""
    cols = [v[start - lag:stop - lag] for v, lag in columns]
    if not cols:
        return np.empty((stop - start, 0))
    return np.column_stack(cols)


class GrangerResult(NamedTuple):
    causal: bool
    f_stat: float
    p_value: float
    df_num: int
    df_den: int


def granger_test(x, y, lags: Iterable[int], alpha: float = 0.05, own_lags: int | None = None) -> GrangerResult:
    """F-test of whether x at ``lags`` adds to y's own history.

    Restricted model: intercept plus y at lags 1..own_lags (default max(lags)).
    Both models share the same sample.
    """
    xv, yv = _values(x), _values(y)
    lags = sorted(set(int(k) for k in lags))
    if not lags or lags[0] < 1:
        raise ValueError("lags must be a non-empty set of positive integers")
    if len(xv) != len(yv):
        raise ValueError("granger_test needs equal-length aligned series")
    p_own = lags[-1] if own_lags is None else own_lags
    start = max(lags[-1], p_own)
    n = len(yv)
    target = yv[start:]
    ones = np.ones((n - start, 1))
    own = lag_matrix(((yv, k) for k in range(1, p_own + 1)), start, n)
    extra = lag_matrix(((xv, k) for k in lags), start, n)
    restricted = np.hstack([ones, own])
    full = np.hstack([restricted, extra])
    q = len(lags)
    df_den = len(target) - full.shape[1]
    if df_den < 1:
        raise DegenerateError("too few observations for the requested lags")
    rss_r = fit_ols(restricted, target).rss
    rss_u = fit_ols(full, target).rss
    if rss_u <= 0.0:
        if rss_r <= 0.0:
            raise DegenerateError("target is fitted exactly by its own history")
        return GrangerResult(True, math.inf, 0.0, q, df_den)
    f = max(rss_r - rss_u, 0.0) / q / (rss_u / df_den)
    p = float(stats.f.sf(f, q, df_den))
    return GrangerResult(p < alpha, f, p, q, df_den)
