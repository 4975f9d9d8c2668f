"""Autoregressive baseline (M0) and indicator-augmented (M1) regressions."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .series import Series, SeriesError
from .stats import DegenerateError, acf, ccf, fit_ols, granger_test, lag_matrix, ljung_box

INTERCEPT = "(intercept)"
WHITENESS_LAGS = 10

FLAG_NO_LAGS = "no-significant-lags"
FLAG_NO_CANDIDATE = "no-candidate-survived"
FLAG_NOT_WHITE = "residuals-not-white"


class PredictionError(KeyError):
    def __init__(self, series: str, lag: int, reason: str = "missing"):
        self.series, self.lag = series, lag
        super().__init__(f"history {reason} for ({series}, lag {lag})")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class Term:
    series: str
    lag: int
    coef: float
    se: float = math.nan
    p_value: float = math.nan

    def __post_init__(self):
        if self.lag < 1:
            raise ValueError(f"term ({self.series}, {self.lag}): lags must be at least 1")

    @property
    def key(self) -> tuple[str, int]:
        return (self.series, self.lag)


@dataclass(frozen=True)
class RegressionModel:
    target: str
    intercept: float = 0.0
    terms: tuple[Term, ...] = ()
    residual_sd: float = math.nan
    residuals_white: bool = False
    has_intercept: bool = True
    intercept_se: float = math.nan
    intercept_p: float = math.nan
    flags: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    diagnostics: Mapping = field(default_factory=dict)
    n_obs: int = 0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "flags", tuple(self.flags))
        object.__setattr__(self, "notes", tuple(self.notes))

    def keys(self) -> list[tuple[str, int]]:
        return [t.key for t in self.terms]

    def coefficient(self, series: str, lag: int) -> float:
        for t in self.terms:
            if t.key == (series, lag):
                return t.coef
        raise KeyError((series, lag))

    def max_lag(self) -> int:
        return max((t.lag for t in self.terms), default=0)

    def scaled(self, factor: float) -> "RegressionModel":
        return replace(self, intercept=self.intercept * factor,
                       terms=tuple(replace(t, coef=t.coef * factor) for t in self.terms))

    def describe(self) -> str:
        parts = [f"{self.intercept:.4g}"] if self.has_intercept else []
        parts += [f"{t.coef:.4g}*{t.series}[t-{t.lag}]" for t in self.terms]
        return f"{self.target}[t] = " + (" + ".join(parts) if parts else "0")

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "intercept": self.intercept,
            "has_intercept": self.has_intercept,
            "intercept_se": _num(self.intercept_se),
            "intercept_p": _num(self.intercept_p),
            "terms": [
                {"series": t.series, "lag": t.lag, "coef": t.coef, "se": _num(t.se), "p_value": _num(t.p_value)}
                for t in self.terms
            ],
            "residual_sd": _num(self.residual_sd),
            "residuals_white": self.residuals_white,
            "flags": list(self.flags),
            "notes": list(self.notes),
            "diagnostics": dict(self.diagnostics),
            "n_obs": self.n_obs,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RegressionModel":
        terms = tuple(
            Term(t["series"], int(t["lag"]), float(t["coef"]), _den(t.get("se")), _den(t.get("p_value")))
            for t in d.get("terms", ())
        )
        return cls(
            target=d["target"],
            intercept=float(d.get("intercept", 0.0)),
            terms=terms,
            residual_sd=_den(d.get("residual_sd")),
            residuals_white=bool(d.get("residuals_white", False)),
            has_intercept=bool(d.get("has_intercept", True)),
            intercept_se=_den(d.get("intercept_se")),
            intercept_p=_den(d.get("intercept_p")),
            flags=tuple(d.get("flags", ())),
            notes=tuple(d.get("notes", ())),
            diagnostics=dict(d.get("diagnostics", {})),
            n_obs=int(d.get("n_obs", 0)),
        )


def _num(x: float):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def _den(x) -> float:
    return math.nan if x is None else float(x)


def predict_one_step(model: RegressionModel, history: Mapping[str, Sequence[float]]) -> float:
    """Next value from the model given past observations, newest last."""
    total = model.intercept if model.has_intercept else 0.0
    for t in model.terms:
        if t.series not in history:
            raise PredictionError(t.series, t.lag)
        past = history[t.series]
        if t.lag > len(past):
            raise PredictionError(t.series, t.lag, "too short")
        v = float(past[-t.lag])
        if not math.isfinite(v):
            raise PredictionError(t.series, t.lag, "not finite")
        total += t.coef * v
    return total


# -- fitting ---------------------------------------------------------------

def _fit_terms(data: Mapping[str, np.ndarray], target: str, keys: Sequence[tuple[str, int]],
               intercept: bool, start: int):
    y = data[target]
    n = len(y)
    X = lag_matrix(((data[s], k) for s, k in keys), start, n)
    names = [f"{s}@{k}" for s, k in keys]
    if intercept:
        X = np.hstack([np.ones((n - start, 1)), X])
        names = [INTERCEPT] + names
    return fit_ols(X, y[start:], names)


def _eliminate(data, target, keys, intercept, start, alpha, droppable):
    """Backward elimination over ``droppable`` keys (INTERCEPT allowed).

    Returns (keys, intercept, fit); terms outside ``droppable`` are never removed.
    """
    keys = list(keys)
    while True:
        if not keys and not intercept:
            return keys, intercept, None
        fit = _fit_terms(data, target, keys, intercept, start)
        offset = 1 if intercept else 0
        worst, worst_p = None, -1.0
        for j, p in enumerate(fit.pvalues):
            key = INTERCEPT if (intercept and j == 0) else keys[j - offset]
            if key in droppable and p >= alpha and p > worst_p:
                worst, worst_p = key, p
        if worst is None:
            return keys, intercept, fit
        if worst == INTERCEPT:
            intercept = False
        else:
            keys.remove(worst)


def _whiteness(resid: np.ndarray, alpha: float) -> tuple[bool, dict]:
    lags = min(WHITENESS_LAGS, len(resid) - 3)
    if lags < 1:
        return False, {"ljung_box_q": None, "ljung_box_p": None, "acf_outside_band": None}
    if np.ptp(resid) == 0:
        return True, {"ljung_box_q": 0.0, "ljung_box_p": 1.0, "acf_outside_band": 0, "whiteness_lags": lags}
    q, p = ljung_box(resid, lags)
    outside = sum(1 for r in acf(resid, lags) if r.significant)
    return p >= alpha, {"ljung_box_q": q, "ljung_box_p": p, "acf_outside_band": outside, "whiteness_lags": lags}


def _assemble(target, keys, intercept, fit, alpha, start, flags=(), notes=(), extra_diag=None) -> RegressionModel:
    offset = 1 if intercept else 0
    terms = tuple(
        Term(s, k, float(fit.coef[j + offset]), float(fit.se[j + offset]), float(fit.pvalues[j + offset]))
        for j, (s, k) in enumerate(keys)
    )
    white, diag = _whiteness(fit.residuals, alpha)
    diag["sample_start"] = start
    if extra_diag:
        diag.update(extra_diag)
    flags = tuple(flags) + (() if white else (FLAG_NOT_WHITE,))
    return RegressionModel(
        target=target,
        intercept=float(fit.coef[0]) if intercept else 0.0,
        terms=terms,
        residual_sd=fit.sigma,
        residuals_white=white,
        has_intercept=intercept,
        intercept_se=float(fit.se[0]) if intercept else math.nan,
        intercept_p=float(fit.pvalues[0]) if intercept else math.nan,
        flags=flags,
        notes=tuple(notes),
        diagnostics=diag,
        n_obs=len(fit.residuals),
    )


def fit_m0(target: Series, max_lag: int, alpha: float = 0.05) -> RegressionModel:
    """Autoregression on the target's ACF-significant lags, pruned by backward elimination.

    The intercept competes for inclusion like any lag.  If no lag survives the
    result is the intercept-only model flagged ``no-significant-lags``.
    """
    y = target.values
    data = {target.name: y}
    lags = [r.lag for r in acf(y, max_lag) if r.significant]
    keys = [(target.name, k) for k in lags]
    droppable = set(keys) | {INTERCEPT}
    keys, intercept, fit = _eliminate(data, target.name, keys, True, max_lag, alpha, droppable)
    if not keys:
        fit = _fit_terms(data, target.name, [], True, max_lag)
        return _assemble(target.name, [], True, fit, alpha, max_lag, flags=(FLAG_NO_LAGS,),
                         notes=("no autoregressive lag is significant; intercept-only baseline",))
    return _assemble(target.name, keys, intercept, fit, alpha, max_lag)


@dataclass(frozen=True)
class CandidateScreen:
    name: str
    lead_lags: tuple[int, ...]
    strength: float
    granger_p: float | None
    causal: bool


def screen_candidates(target: Series, candidates: Sequence[Series], max_lag: int, alpha: float = 0.05,
                      correction: str = "bonferroni") -> list[CandidateScreen]:
    """CCF lead-lag screen followed by a joint Granger test per candidate.

    With ``correction="bonferroni"`` each Granger test runs at alpha divided by
    the number of candidates, which keeps the chance of admitting pure noise
    near alpha for the whole family.
    """
    if correction not in ("bonferroni", "none"):
        raise ValueError("correction must be 'bonferroni' or 'none'")
    level = alpha / len(candidates) if candidates and correction == "bonferroni" else alpha
    out = []
    for c in candidates:
        if len(c) != len(target):
            raise SeriesError(f"candidate {c.name} is not aligned with {target.name}")
        try:
            cc = ccf(c.values, target.values, max_lag)
        except DegenerateError:
            out.append(CandidateScreen(c.name, (), 0.0, None, False))
            continue
        lead = [r for r in cc if r.lag < 0 and r.significant]
        lags = tuple(sorted(-r.lag for r in lead))
        strength = max((abs(r.r) for r in lead), default=0.0)
        if not lags:
            out.append(CandidateScreen(c.name, (), strength, None, False))
            continue
        try:
            g = granger_test(c.values, target.values, lags, level)
        except DegenerateError:
            out.append(CandidateScreen(c.name, lags, strength, None, False))
            continue
        out.append(CandidateScreen(c.name, lags, strength, g.p_value, g.causal))
    return out


def build_m1(m0: RegressionModel, target: Series, candidates: Sequence[Series], max_lag: int,
             alpha: float = 0.05, correction: str = "bonferroni") -> RegressionModel:
    """Grow M0 with lagged indicator terms.

    Screened candidates are inserted strongest first.  After each insertion the
    new lags, the target's own lags and the intercept are pruned by backward
    elimination; if a previously inserted indicator term loses significance
    the insertion is undone.
    """
    if m0.target != target.name:
        raise ValueError(f"M0 models {m0.target!r}, not {target.name!r}")
    names = [c.name for c in candidates]
    if target.name in names or len(set(names)) != len(names):
        raise ValueError("candidate names must be unique and differ from the target")
    screens = screen_candidates(target, candidates, max_lag, alpha, correction)
    diag = {"screen": [
        {"name": s.name, "lead_lags": list(s.lead_lags), "strength": s.strength,
         "granger_p": s.granger_p, "causal": s.causal} for s in screens
    ]}
    admitted = sorted((s for s in screens if s.causal), key=lambda s: (-s.strength, s.name))
    start = max(max_lag, m0.max_lag(), int(m0.diagnostics.get("sample_start", 0)))
    data = {target.name: target.values}
    data.update({c.name: c.values for c in candidates})

    accepted = m0.keys()
    intercept = m0.has_intercept
    notes = []
    fit = None
    for s in admitted:
        new = [(s.name, k) for k in s.lead_lags]
        own = {key for key in accepted if key[0] == target.name}
        keys, icpt, trial = _eliminate(data, target.name, accepted + new, True, start, alpha,
                                       set(new) | own | {INTERCEPT})
        added = [k for k in keys if k in new]
        if not added:
            notes.append(f"{s.name}: no lag stayed significant after insertion")
            continue
        offset = 1 if icpt else 0
        protected = set(accepted) - own
        broken = [keys[j - offset] for j, p in enumerate(trial.pvalues)
                  if j >= offset and keys[j - offset] in protected and p >= alpha]
        if broken:
            notes.append(f"{s.name}: insertion undone, it made {', '.join(f'{a}@{b}' for a, b in broken)} insignificant")
            continue
        dropped = [k for k in own if k not in keys]
        accepted, intercept, fit = keys, icpt, trial
        msg = f"{s.name}: kept lag(s) {', '.join(str(k) for _, k in added)}"
        if dropped:
            msg += f"; own lag(s) {', '.join(str(k) for _, k in sorted(dropped))} no longer significant"
        notes.append(msg)

    if fit is None:
        reason = ("no candidate passed the correlation and causality screens" if not admitted
                  else "no candidate stayed significant once inserted")
        return replace(m0, flags=tuple(dict.fromkeys(m0.flags + (FLAG_NO_CANDIDATE,))),
                       notes=m0.notes + tuple(notes) + (f"M1 equals M0: {reason}",),
                       diagnostics={**m0.diagnostics, **diag})
    return _assemble(target.name, accepted, intercept, fit, alpha, start, notes=notes, extra_diag=diag)
