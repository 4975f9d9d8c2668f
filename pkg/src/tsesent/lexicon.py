"""Domain sentiment lexicon: document frequencies and PMI polarity scores."""

from __future__ import annotations

import json
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .ingest import Label
from .persian_text import NEGATION_MARK, Stemmer, Token, bigram_parts, extract_ngrams

FORMAT_VERSION = 1
DEFAULT_DF_THRESHOLD = 3
DEFAULT_SMOOTHING = 0.5

UNIGRAM = "unigram"
BIGRAM = "bigram"


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class ContingencyCounts:
    n_bullish_docs: int
    n_bearish_docs: int
    df_bullish: Mapping[str, int]
    df_bearish: Mapping[str, int]
    kinds: Mapping[str, str] = field(default_factory=dict)
    negative: frozenset[str] = frozenset()

    def df(self, term: str) -> int:
        return self.df_bullish.get(term, 0) + self.df_bearish.get(term, 0)

    def terms(self) -> list[str]:
        return sorted(set(self.df_bullish) | set(self.df_bearish))

    def swapped(self) -> "ContingencyCounts":
        return ContingencyCounts(
            self.n_bearish_docs, self.n_bullish_docs, self.df_bearish, self.df_bullish,
            self.kinds, self.negative,
        )


def _as_tokens(tokens: Sequence[Token | str]) -> list[Token]:
    return [t if isinstance(t, Token) else Token(t, t, t.startswith(NEGATION_MARK)) for t in tokens]


def count_contingency(
    documents: Iterable[tuple[Sequence[Token | str], Label | str]],
    stemmer: Stemmer | None = None,
) -> ContingencyCounts:
    """Per-class document frequencies of unigram stems and bigram keys.

    Each document contributes at most one count per term.  Plain strings are
    accepted in place of tokens and taken to be stems already.
    """
    n = {Label.BULLISH: 0, Label.BEARISH: 0}
    df = {Label.BULLISH: Counter(), Label.BEARISH: Counter()}
    kinds: dict[str, str] = {}
    negative: set[str] = set()
    for i, (tokens, label) in enumerate(documents):
        label = Label.parse(label) if isinstance(label, str) and not isinstance(label, Label) else label
        if label not in n:
            raise LexiconError(f"document {i} is unlabeled; lexicon building needs bullish/bearish labels")
        toks = _as_tokens(tokens)
        unigrams, bigrams = extract_ngrams(toks, stemmer)
        for t in toks:
            if t.is_negative_verb:
                negative.add(t.stem)
        for term in unigrams:
            kinds.setdefault(term, UNIGRAM)
        for term in bigrams:
            kinds.setdefault(term, BIGRAM)
            if any(part.startswith(NEGATION_MARK) for part in bigram_parts(term)):
                negative.add(term)
        n[label] += 1
        df[label].update(set(unigrams) | set(bigrams))
    if n[Label.BULLISH] + n[Label.BEARISH] == 0:
        raise LexiconError("no documents")
    return ContingencyCounts(
        n[Label.BULLISH], n[Label.BEARISH],
        dict(df[Label.BULLISH]), dict(df[Label.BEARISH]),
        kinds, frozenset(negative),
    )


def pmi(term: str, label: Label | str, counts: ContingencyCounts, smoothing: float = DEFAULT_SMOOTHING) -> float:
    """log p(term, class) / (p(term) p(class)) from the smoothed 2x2 presence table.

    ``smoothing`` is added to all four cells.  With zero smoothing a zero cell
    makes the value undefined and raises.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    label = Label(label)
    a = counts.df_bullish.get(term, 0)
    c = counts.df_bearish.get(term, 0)
    cells = (
        a + smoothing,                           # present, bullish
        counts.n_bullish_docs - a + smoothing,   # absent, bullish
        c + smoothing,                           # present, bearish
        counts.n_bearish_docs - c + smoothing,   # absent, bearish
    )
    if min(cells) < 0:
        raise LexiconError(f"document frequency of {term!r} exceeds its class size")
    total = sum(cells)
    joint = cells[0] if label is Label.BULLISH else cells[2]
    p_term = (cells[0] + cells[2]) / total
    p_class = (cells[0] + cells[1]) / total if label is Label.BULLISH else (cells[2] + cells[3]) / total
    if joint == 0 or p_term == 0 or p_class == 0:
        raise LexiconError(f"PMI of {term!r} is undefined without smoothing")
    return math.log((joint / total) / (p_term * p_class))


def score(term: str, counts: ContingencyCounts, smoothing: float = DEFAULT_SMOOTHING) -> float:
    """Polarity score: PMI with the bullish class minus PMI with the bearish class."""
    return pmi(term, Label.BULLISH, counts, smoothing) - pmi(term, Label.BEARISH, counts, smoothing)


@dataclass(frozen=True)
class LexiconEntry:
    term: str
    kind: str
    score: float
    df: int
    is_negative_verb: bool = False


@dataclass(frozen=True)
class SentimentLexicon:
    entries: Mapping[str, LexiconEntry]
    df_threshold: float = DEFAULT_DF_THRESHOLD
    smoothing: float = DEFAULT_SMOOTHING
    log_base: float = math.e

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term: str) -> bool:
        return term in self.entries

    def __getitem__(self, term: str) -> LexiconEntry:
        return self.entries[term]

    def get(self, term: str) -> LexiconEntry | None:
        return self.entries.get(term)

    def terms(self) -> list[str]:
        """Terms in byte-lexicographic order (the serialization order)."""
        return sorted(self.entries, key=lambda t: t.encode("utf-8"))

    def score_of(self, term: str) -> float:
        entry = self.entries.get(term)
        return entry.score if entry is not None else 0.0

    def __eq__(self, other):
        if not isinstance(other, SentimentLexicon):
            return NotImplemented
        return (
            dict(self.entries) == dict(other.entries)
            and self.df_threshold == other.df_threshold
            and self.smoothing == other.smoothing
            and self.log_base == other.log_base
        )

    __hash__ = None


def build_lexicon(
    documents: Iterable[tuple[Sequence[Token | str], Label | str]] | ContingencyCounts,
    df_threshold: float = DEFAULT_DF_THRESHOLD,
    smoothing: float = DEFAULT_SMOOTHING,
    stemmer: Stemmer | None = None,
) -> SentimentLexicon:
    """Select terms by combined document frequency and score them.

    Unigrams need DF > ``df_threshold``.  A DF-qualified bigram is kept only if
    its score is strictly greater than the sum of its constituents' lexicon
    scores (a constituent that did not make the lexicon counts as 0).
    """
    counts = documents if isinstance(documents, ContingencyCounts) else count_contingency(documents, stemmer)
    if counts.n_bullish_docs == 0 or counts.n_bearish_docs == 0:
        raise LexiconError(
            f"need documents of both classes (bullish={counts.n_bullish_docs}, bearish={counts.n_bearish_docs})"
        )
    entries: dict[str, LexiconEntry] = {}
    bigrams = []
    for term in counts.terms():
        df = counts.df(term)
        if not df > df_threshold:
            continue
        if counts.kinds.get(term, UNIGRAM) == BIGRAM:
            bigrams.append(term)
            continue
        entries[term] = LexiconEntry(term, UNIGRAM, score(term, counts, smoothing), df, term in counts.negative)
    for term in bigrams:
        s = score(term, counts, smoothing)
        parts = sum(entries[p].score if p in entries and entries[p].kind == UNIGRAM else 0.0 for p in bigram_parts(term))
        if s > parts:
            entries[term] = LexiconEntry(term, BIGRAM, s, counts.df(term), term in counts.negative)
    return SentimentLexicon(entries, df_threshold, smoothing, math.e)


def _json_number(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def save_lexicon(lexicon: SentimentLexicon, path: str | Path, extra: Mapping | None = None) -> None:
    header = {
        "version": FORMAT_VERSION,
        "df_threshold": _json_number(lexicon.df_threshold),
        "smoothing": lexicon.smoothing,
        "log_base": lexicon.log_base,
        "n_entries": len(lexicon),
    }
    if extra:
        header.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for term in lexicon.terms():
            e = lexicon.entries[term]
            rec = {"term": e.term, "kind": e.kind, "score": e.score, "df": e.df, "neg": e.is_negative_verb}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_lexicon(path: str | Path) -> SentimentLexicon:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().split("\n") if line.strip()]
    if not lines:
        raise LexiconError(f"{path}: empty lexicon file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{path}: malformed header ({exc.msg})") from None
    if header.get("version") != FORMAT_VERSION:
        raise LexiconError(f"{path}: unsupported lexicon version {header.get('version')!r}")
    entries: dict[str, LexiconEntry] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
            entry = LexiconEntry(str(rec["term"]), rec["kind"], float(rec["score"]), int(rec["df"]), bool(rec["neg"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise LexiconError(f"{path}:{lineno}: malformed entry") from None
        if entry.kind not in (UNIGRAM, BIGRAM):
            raise LexiconError(f"{path}:{lineno}: unknown kind {entry.kind!r}")
        if entry.term in entries:
            raise LexiconError(f"{path}:{lineno}: duplicate term {entry.term!r}")
        entries[entry.term] = entry
    expected = header.get("n_entries")
    if expected is not None and expected != len(entries):
        raise LexiconError(f"{path}: truncated file ({len(entries)} of {expected} entries)")
    try:
        df_threshold = float(header["df_threshold"])
        if df_threshold.is_integer():
            df_threshold = int(df_threshold)
        return SentimentLexicon(entries, df_threshold, float(header["smoothing"]), float(header["log_base"]))
    except (KeyError, TypeError, ValueError):
        raise LexiconError(f"{path}: header lacks lexicon parameters") from None
