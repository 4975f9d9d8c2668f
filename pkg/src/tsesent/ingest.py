"""Loading comment corpora and market closes, and aligning comments to trading days."""

from __future__ import annotations

import bisect
import csv
import itertools
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from datetime import date, datetime, time, timezone
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from zoneinfo import ZoneInfo

DEFAULT_TZ = "Asia/Tehran"
DEFAULT_CUTOFF = time(12, 30)

COMMENT_FIELDS = ("id", "timestamp", "user", "text", "label", "likes")
MARKET_FIELDS = ("date", "close")


class IngestError(ValueError):
    """Raised for malformed or inconsistent input files."""


class Label(str, Enum):
    BULLISH = "bullish"
    BEARISH = "bearish"
    UNLABELED = "unlabeled"

    @classmethod
    def parse(cls, raw: str) -> "Label":
        value = raw.strip().lower()
        if value in ("none", "unlabeled"):
            return cls.UNLABELED
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown label {raw!r}") from None

    @property
    def file_value(self) -> str:
        return "none" if self is Label.UNLABELED else self.value


@dataclass(frozen=True)
class Comment:
    id: str
    timestamp: datetime
    user: str
    text: str
    label: Label = Label.UNLABELED
    likes: int = 0

    def __post_init__(self):
        if self.timestamp.tzinfo is None:
            raise ValueError("timestamp must be timezone-aware")
        if self.likes < 0:
            raise ValueError("likes must be non-negative")
        if not self.text.strip():
            raise ValueError("text is empty")

    @property
    def is_labeled(self) -> bool:
        return self.label is not Label.UNLABELED


@dataclass(frozen=True)
class MarketBar:
    date: date
    close: float


@dataclass(frozen=True)
class CommentCorpus:
    stock_symbol: str
    comments: tuple[Comment, ...]

    def __len__(self) -> int:
        return len(self.comments)

    def __iter__(self):
        return iter(self.comments)

    def label_counts(self) -> dict[Label, int]:
        counts = {label: 0 for label in Label}
        for c in self.comments:
            counts[c.label] += 1
        return counts

    def labeled(self) -> list[Comment]:
        return [c for c in self.comments if c.is_labeled]


@dataclass(frozen=True)
class DailyBuckets:
    stock_symbol: str
    calendar: tuple[date, ...]
    buckets: Mapping[date, tuple[Comment, ...]]

    def __getitem__(self, day: date) -> tuple[Comment, ...]:
        return self.buckets[day]

    def items(self):
        return ((d, self.buckets[d]) for d in self.calendar)

    def day_of(self) -> dict[str, date]:
        """Map comment id to its assigned trading date."""
        return {c.id: d for d, comments in self.buckets.items() for c in comments}

    def total(self) -> int:
        return sum(len(v) for v in self.buckets.values())


def _parse_timestamp(raw: str, tz: ZoneInfo) -> datetime:
    ts = datetime.fromisoformat(raw.strip().replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=tz)
    return ts.astimezone(timezone.utc)


def _comment_from_record(rec: Mapping, row: int, tz: ZoneInfo) -> Comment:
    missing = [f for f in COMMENT_FIELDS if f not in rec or rec[f] is None]
    if missing:
        raise IngestError(f"row {row}: missing field {missing[0]!r}")

    def fail(field: str, why: str):
        raise IngestError(f"row {row}: field {field!r}: {why}")

    cid = str(rec["id"]).strip()
    if not cid:
        fail("id", "empty id")
    try:
        ts = _parse_timestamp(str(rec["timestamp"]), tz)
    except ValueError as exc:
        fail("timestamp", str(exc))
    text = str(rec["text"])
    if not text.strip():
        fail("text", "empty text")
    try:
        label = Label.parse(str(rec["label"]))
    except ValueError as exc:
        fail("label", str(exc))
    try:
        likes = int(str(rec["likes"]).strip() or 0)
    except ValueError:
        fail("likes", f"not an integer: {rec['likes']!r}")
    if likes < 0:
        fail("likes", "negative like count")
    return Comment(cid, ts, str(rec["user"]).strip(), text, label, likes)


def _skip_preamble(fh) -> tuple[Iterable[str], int]:
    """Drop leading ``#`` lines; returns the remaining lines and how many were skipped."""
    skipped = 0
    for line in fh:
        if line.startswith("#"):
            skipped += 1
            continue
        return itertools.chain([line], fh), skipped
    return iter(()), skipped


def _records(path: Path, fmt: str) -> Iterable[tuple[int, Mapping]]:
    with open(path, encoding="utf-8", newline="") as raw:
        fh, skipped = _skip_preamble(raw)
        if fmt == "csv":
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return
            absent = [f for f in COMMENT_FIELDS if f not in reader.fieldnames]
            if absent:
                raise IngestError(f"header: missing column(s) {', '.join(absent)}")
            # row numbers count the header as row 1
            for i, rec in enumerate(reader, start=2 + skipped):
                yield i, rec
        elif fmt == "jsonl":
            for i, line in enumerate(fh, start=1 + skipped):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestError(f"row {i}: invalid JSON ({exc.msg})") from None
                if not isinstance(rec, dict):
                    raise IngestError(f"row {i}: expected a JSON object")
                yield i, rec
        else:
            raise ValueError(f"unsupported format {fmt!r}")


def load_comments(
    path: str | Path,
    format: str | None = None,
    *,
    stock_symbol: str | None = None,
    tz: str = DEFAULT_TZ,
) -> CommentCorpus:
    """Read a comment file (CSV or JSON Lines) into a validated, time-sorted corpus.

    Naive timestamps are interpreted in ``tz``; everything is stored in UTC.
    """
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv")
    zone = ZoneInfo(tz)
    comments: list[Comment] = []
    seen: dict[str, int] = {}
    for row, rec in _records(path, fmt):
        comment = _comment_from_record(rec, row, zone)
        if comment.id in seen:
            raise IngestError(
                f"row {row}: field 'id': duplicate id {comment.id!r} (first seen row {seen[comment.id]})"
            )
        seen[comment.id] = row
        comments.append(comment)
    comments.sort(key=lambda c: (c.timestamp, c.id))
    return CommentCorpus(stock_symbol or path.stem, tuple(comments))


def write_comments(corpus: CommentCorpus | Iterable[Comment], path: str | Path,
                   header_comment: str | None = None) -> None:
    path = Path(path)
    comments = corpus.comments if isinstance(corpus, CommentCorpus) else tuple(corpus)
    preamble = f"# {header_comment}\n" if header_comment else ""
    if path.suffix.lower() == ".jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(preamble)
            for c in comments:
                fh.write(json.dumps(_comment_record(c), ensure_ascii=False) + "\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(preamble)
        writer = csv.DictWriter(fh, fieldnames=COMMENT_FIELDS, quoting=csv.QUOTE_NONNUMERIC)
        writer.writeheader()
        for c in comments:
            writer.writerow(_comment_record(c))


def _comment_record(c: Comment) -> dict:
    return {
        "id": c.id,
        "timestamp": c.timestamp.isoformat(),
        "user": c.user,
        "text": c.text,
        "label": c.label.file_value,
        "likes": c.likes,
    }


def load_market(path: str | Path) -> list[MarketBar]:
    bars: list[MarketBar] = []
    seen: set[date] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        if reader.fieldnames is None:
            return bars
        absent = [f for f in MARKET_FIELDS if f not in reader.fieldnames]
        if absent:
            raise IngestError(f"header: missing column(s) {', '.join(absent)}")
        for row, rec in enumerate(reader, start=2):
            try:
                day = date.fromisoformat(rec["date"].strip())
            except (ValueError, AttributeError):
                raise IngestError(f"row {row}: field 'date': expected YYYY-MM-DD, got {rec['date']!r}") from None
            try:
                close = float(rec["close"])
            except (TypeError, ValueError):
                raise IngestError(f"row {row}: field 'close': not a number: {rec['close']!r}") from None
            if not close > 0:
                raise IngestError(f"row {row}: field 'close': non-positive close {close} on {day}")
            if day in seen:
                raise IngestError(f"row {row}: duplicate date {day.isoformat()}")
            seen.add(day)
            bars.append(MarketBar(day, close))
    bars.sort(key=lambda b: b.date)
    return bars


def write_market(bars: Sequence[MarketBar], path: str | Path, header_comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MARKET_FIELDS)
        for b in bars:
            writer.writerow([b.date.isoformat(), repr(float(b.close))])


def bucket_by_trading_day(
    corpus: CommentCorpus,
    bars: Sequence[MarketBar],
    cutoff: time = DEFAULT_CUTOFF,
    tz: str = DEFAULT_TZ,
) -> DailyBuckets:
    """Assign every comment to the trading day whose close it can inform.

    A comment posted on a trading day strictly before ``cutoff`` (local time)
    belongs to that day; anything later, or on a non-trading day, rolls
    forward to the next trading date.
    """
    if not bars:
        raise IngestError("no market bars to align against")
    calendar = tuple(b.date for b in bars)
    zone = ZoneInfo(tz)
    assigned: dict[date, list[Comment]] = {d: [] for d in calendar}
    orphans: list[str] = []
    for c in corpus.comments:
        local = c.timestamp.astimezone(zone)
        day = local.date()
        pos = bisect.bisect_left(calendar, day)
        if pos < len(calendar) and calendar[pos] == day and local.time() >= cutoff:
            pos += 1
        if pos >= len(calendar):
            orphans.append(c.id)
            continue
        assigned[calendar[pos]].append(c)
    if orphans:
        shown = ", ".join(orphans[:20]) + (" ..." if len(orphans) > 20 else "")
        raise IngestError(
            f"{len(orphans)} comment(s) fall after the last trading date {calendar[-1]}: {shown}"
        )
    frozen = MappingProxyType({d: tuple(v) for d, v in assigned.items()})
    return DailyBuckets(corpus.stock_symbol, calendar, frozen)
