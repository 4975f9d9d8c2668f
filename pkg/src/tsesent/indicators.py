"""User trust coefficients and the daily bullishness indices."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from types import MappingProxyType

from .ingest import Comment, DailyBuckets, Label, MarketBar

DEFAULT_TC = 0.5
FILL_POLICIES = ("neutral", "carry-forward", "leave-missing")
INDEX_NAMES = ("index1", "index2", "index3", "index4")
INDICATOR_FIELDS = (
    "date", "index1", "index2", "index3", "index4",
    "count", "count_with_likes", "bullish", "bearish", "missing_flag",
)


class IndicatorError(ValueError):
    pass


class _Closes:
    def __init__(self, bars: Sequence[MarketBar]):
        self.calendar = [b.date for b in bars]
        self.pos = {d: i for i, d in enumerate(self.calendar)}
        self.close = [b.close for b in bars]

    def next_move(self, day: date) -> tuple[float, float]:
        i = self.pos.get(day)
        if i is None:
            raise IndicatorError(f"{day} is not a trading date")
        if i + 1 >= len(self.close):
            raise IndicatorError(f"no next-day close after {day}")
        return self.close[i], self.close[i + 1]


def comment_correct(label: Comment | Label, day: date, bars: Sequence[MarketBar] | _Closes) -> bool:
    """Did the comment call the direction of the next close correctly?

    An unchanged close counts as a miss for both labels.
    """
    if isinstance(label, Comment):
        label = label.label
    closes = bars if isinstance(bars, _Closes) else _Closes(bars)
    today, tomorrow = closes.next_move(day)
    if label is Label.BULLISH:
        return tomorrow > today
    if label is Label.BEARISH:
        return tomorrow < today
    raise IndicatorError("an unlabeled comment cannot be scored")


@dataclass(frozen=True)
class TrustTable:
    coefficients: Mapping[tuple[str, str], float]
    default_tc: float = DEFAULT_TC
    window: tuple[date, date] | None = None
    avg_comment_count: float = 0.0
    comment_counts: Mapping[tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", MappingProxyType(dict(self.coefficients)))
        object.__setattr__(self, "comment_counts", MappingProxyType(dict(self.comment_counts)))

    def get(self, user: str, stock: str) -> float:
        return self.coefficients.get((user, stock), self.default_tc)

    @classmethod
    def uniform(cls, value: float = 1.0) -> "TrustTable":
        return cls({}, default_tc=value)


def _label_of(c: Comment, labels: Mapping[str, Label] | None) -> Label:
    if labels is not None and c.id in labels:
        return labels[c.id]
    return c.label


def compute_trust(
    buckets: DailyBuckets,
    bars: Sequence[MarketBar],
    window: tuple[date, date] | None = None,
    *,
    labels: Mapping[str, Label] | None = None,
    default_tc: float = DEFAULT_TC,
    min_tc: float = 1e-6,
) -> TrustTable:
    """Per-user reliability for one stock over a window of trading days.

    For each day the user posted, their hit rate is divided by the crowd's hit
    rate; the coefficient is the mean of these ratios over the user's active
    days (days the crowd got nothing right are skipped).  Users with no more
    comments than the average user fall back to ``default_tc``.
    """
    closes = _Closes(bars)
    if window is None:
        window = (buckets.calendar[0], buckets.calendar[-1])
    days = [d for d in buckets.calendar if window[0] <= d <= window[1] and closes.pos.get(d, -1) + 1 < len(closes.close)]
    if not days:
        raise IndicatorError(f"trust window {window[0]}..{window[1]} holds no scorable trading day")
    stock = buckets.stock_symbol
    user_total: dict[str, int] = defaultdict(int)
    ratios: dict[str, list[float]] = defaultdict(list)
    for day in days:
        per_user: dict[str, list[int]] = defaultdict(lambda: [0, 0])
        crowd_correct = crowd_total = 0
        for c in buckets[day]:
            label = _label_of(c, labels)
            if label is Label.UNLABELED:
                continue
            hit = comment_correct(label, day, closes)
            per_user[c.user][0] += hit
            per_user[c.user][1] += 1
            crowd_correct += hit
            crowd_total += 1
        for user, (_, total) in per_user.items():
            user_total[user] += total
        if crowd_correct == 0:
            continue
        for user, (correct, total) in per_user.items():
            ratios[user].append((correct / total) * (crowd_total / crowd_correct))
    avg = sum(user_total.values()) / len(user_total) if user_total else 0.0
    coefficients = {}
    for user, total in user_total.items():
        if total > avg and ratios[user]:
            coefficients[(user, stock)] = max(math.fsum(ratios[user]) / len(ratios[user]), min_tc)
    counts = {(u, stock): n for u, n in user_total.items()}
    return TrustTable(coefficients, default_tc, (window[0], window[1]), avg, counts)


@dataclass(frozen=True)
class DailyIndicatorRow:
    date: date
    index1: float | None
    index2: float | None
    index3: float | None
    index4: float | None
    comment_count: int
    count_with_likes: int
    bullish_count: int
    bearish_count: int
    missing: tuple[str, ...] = ()

    @property
    def missing_flag(self) -> bool:
        return bool(self.missing)

    def value(self, name: str) -> float | None:
        if name == "count":
            return float(self.comment_count)
        if name == "count_with_likes":
            return float(self.count_with_likes)
        return getattr(self, name)


def _ratio(bull: float, bear: float) -> float | None:
    total = bull + bear
    if total <= 0:
        return None
    return bull / total


def compute_daily_indices(
    buckets: DailyBuckets,
    labels: Mapping[str, Label] | None = None,
    scores: Mapping[str, float] | None = None,
    trust: TrustTable | None = None,
    fill: str = "neutral",
) -> list[DailyIndicatorRow]:
    """Four bullishness ratios plus volume features for every trading day.

    ``labels`` overrides a comment's own label (classifier output); comments
    left unlabeled are counted in the volume features only.  Score-based
    indices use the magnitude of each comment score.  Undefined ratios are
    filled per ``fill`` and reported in ``missing``.
    """
    if fill not in FILL_POLICIES:
        raise ValueError(f"fill must be one of {FILL_POLICIES}")
    scores = scores or {}
    trust = trust or TrustTable.uniform(1.0)
    stock = buckets.stock_symbol
    rows: list[DailyIndicatorRow] = []
    last: dict[str, float] = {}
    for day in buckets.calendar:
        comments = buckets[day]
        n_bull = n_bear = 0
        tc_bull = tc_bear = sc_bull = sc_bear = sct_bull = sct_bear = 0.0
        likes = sum(c.likes for c in comments)
        classified = [(c, _label_of(c, labels)) for c in comments]
        classified = [(c, lab, trust.get(c.user, stock)) for c, lab in classified if lab is not Label.UNLABELED]
        # ratios are scale-free in TC; dividing by the day's largest makes equal TCs exactly 1.0
        top = max((tc for _, _, tc in classified), default=1.0)
        for c, label, tc in classified:
            tc = tc / top
            mag = abs(scores.get(c.id, 0.0))
            if label is Label.BULLISH:
                n_bull += 1
                tc_bull += tc
                sc_bull += mag
                sct_bull += mag * tc
            else:
                n_bear += 1
                tc_bear += tc
                sc_bear += mag
                sct_bear += mag * tc
        values = {
            "index1": _ratio(n_bull, n_bear),
            "index2": _ratio(tc_bull, tc_bear),
            "index3": _ratio(sc_bull, sc_bear),
            "index4": _ratio(sct_bull, sct_bear),
        }
        missing = tuple(k for k in INDEX_NAMES if values[k] is None)
        for k in missing:
            if fill == "neutral":
                values[k] = 0.5
            elif fill == "carry-forward":
                values[k] = last.get(k, 0.5)
        for k in INDEX_NAMES:
            if values[k] is not None:
                last[k] = values[k]
        rows.append(DailyIndicatorRow(
            day, values["index1"], values["index2"], values["index3"], values["index4"],
            len(comments), len(comments) + likes, n_bull, n_bear, missing,
        ))
    return rows


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_indicators(rows: Sequence[DailyIndicatorRow], path: str | Path, header_comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDICATOR_FIELDS)
        for r in rows:
            w.writerow([
                r.date.isoformat(), _fmt(r.index1), _fmt(r.index2), _fmt(r.index3), _fmt(r.index4),
                r.comment_count, r.count_with_likes, r.bullish_count, r.bearish_count, int(r.missing_flag),
            ])


def read_indicators(path: str | Path) -> list[DailyIndicatorRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for rec in reader:
            vals = {k: (float(rec[k]) if rec[k] != "" else None) for k in INDEX_NAMES}
            flagged = rec["missing_flag"] == "1"
            missing = tuple(k for k in INDEX_NAMES if vals[k] is None) or (("unknown",) if flagged else ())
            rows.append(DailyIndicatorRow(
                date.fromisoformat(rec["date"]), vals["index1"], vals["index2"], vals["index3"], vals["index4"],
                int(rec["count"]), int(rec["count_with_likes"]), int(rec["bullish"]), int(rec["bearish"]), missing,
            ))
    return rows


def write_trust(table: TrustTable, path: str | Path, header_comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user", "stock", "tc", "comments"])
        keys = sorted(set(table.comment_counts) | set(table.coefficients))
        for key in keys:
            w.writerow([key[0], key[1], repr(table.get(*key)), table.comment_counts.get(key, 0)])
        w.writerow(["*", "*", repr(table.default_tc), ""])


def read_trust(path: str | Path) -> TrustTable:
    coefficients, counts = {}, {}
    default_tc = DEFAULT_TC
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(line for line in fh if not line.startswith("#")):
            if rec["user"] == "*":
                default_tc = float(rec["tc"])
                continue
            key = (rec["user"], rec["stock"])
            counts[key] = int(rec["comments"] or 0)
            coefficients[key] = float(rec["tc"])
    return TrustTable(coefficients, default_tc, None, 0.0, counts)
