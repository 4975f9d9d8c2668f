"""Seeded generators for synthetic corpora and stocks with known structure.

Used by the acceptance suite, the benchmark and the bundled fixture.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from zoneinfo import ZoneInfo

import numpy as np

from .ingest import DEFAULT_TZ, Comment, CommentCorpus, Label, MarketBar

# letters that none of the colloquial rewrites or negation handling touch
_SAFE_LETTERS = "بپتثجچحخدذرزژسشصضطظعغفقکگلم"
_WEEKEND = (3, 4)  # Thursday, Friday


def make_words(n: int, rng: np.random.Generator, exclude: set[str] | None = None) -> list[str]:
    """Distinct pseudo-Persian words of 4 to 6 letters."""
    taken = set(exclude or ())
    out: list[str] = []
    while len(out) < n:
        length = int(rng.integers(4, 7))
        w = "".join(_SAFE_LETTERS[i] for i in rng.integers(0, len(_SAFE_LETTERS), length))
        if any(w[i] == w[i + 1] == w[i + 2] for i in range(len(w) - 2)) or w in taken:
            continue
        taken.add(w)
        out.append(w)
    return out


@dataclass(frozen=True)
class Vocabulary:
    bullish: tuple[str, ...]
    bearish: tuple[str, ...]
    neutral: tuple[str, ...]

    @classmethod
    def generate(cls, rng: np.random.Generator, n_polar: int, n_neutral: int) -> "Vocabulary":
        words = make_words(2 * n_polar + n_neutral, rng)
        return cls(tuple(words[:n_polar]), tuple(words[n_polar:2 * n_polar]), tuple(words[2 * n_polar:]))


def planted_corpus(
    n_docs: int = 2000,
    seed: int = 0,
    n_polar: int = 25,
    n_neutral: int = 150,
    polar_per_doc: tuple[int, int] = (1, 3),
    neutral_per_doc: tuple[int, int] = (4, 9),
    cross_rate: float = 0.3,
) -> tuple[list[tuple[str, Label]], Vocabulary]:
    """Balanced labeled texts whose class is carried by a few planted words.

    Each document mixes neutral filler with one to three words from its own
    class list; with probability ``cross_rate`` one word from the other list
    is added as well.
    """
    rng = np.random.default_rng(seed)
    vocab = Vocabulary.generate(rng, n_polar, n_neutral)
    docs = []
    for i in range(n_docs):
        label = Label.BULLISH if i % 2 == 0 else Label.BEARISH
        own, other = (vocab.bullish, vocab.bearish) if label is Label.BULLISH else (vocab.bearish, vocab.bullish)
        words = list(rng.choice(vocab.neutral, int(rng.integers(*neutral_per_doc, endpoint=True))))
        words += list(rng.choice(own, int(rng.integers(*polar_per_doc, endpoint=True))))
        if rng.random() < cross_rate:
            words.append(str(rng.choice(other)))
        rng.shuffle(words)
        docs.append((" ".join(words), label))
    order = rng.permutation(n_docs)
    return [docs[i] for i in order], vocab


def polarity_corpus(
    n_docs: int = 300,
    seed: int = 0,
    n_polar: int = 80,
    n_neutral: int = 40,
    polar_per_doc: int = 9,
    lean: float = 0.64,
) -> tuple[list[tuple[str, Label]], Vocabulary]:
    """Texts whose class shows only in the balance of many weak polar words.

    Every document draws ``polar_per_doc`` words from a large pool; each is
    bullish with probability ``lean`` for bullish documents and ``1 - lean``
    otherwise.  Any single word says little, the aggregate says a lot.
    """
    rng = np.random.default_rng(seed)
    vocab = Vocabulary.generate(rng, n_polar, n_neutral)
    docs = []
    for i in range(n_docs):
        label = Label.BULLISH if i % 2 == 0 else Label.BEARISH
        p_bull = lean if label is Label.BULLISH else 1.0 - lean
        words = [str(rng.choice(vocab.bullish if rng.random() < p_bull else vocab.bearish))
                 for _ in range(polar_per_doc)]
        words += list(rng.choice(vocab.neutral, int(rng.integers(1, 4))))
        rng.shuffle(words)
        docs.append((" ".join(words), label))
    return docs, vocab


def trading_calendar(start: date, n_days: int) -> list[date]:
    days = []
    d = start
    while len(days) < n_days:
        if d.weekday() not in _WEEKEND:
            days.append(d)
        d += timedelta(days=1)
    return days


@dataclass(frozen=True)
class SyntheticStock:
    corpus: CommentCorpus
    bars: list[MarketBar]
    count_with_likes: np.ndarray
    returns: np.ndarray
    beta: float
    vocab: Vocabulary


def synthetic_stock(
    n_days: int = 400,
    seed: int = 0,
    symbol: str = "SYNTH",
    planted: bool = True,
    mean_comments: float = 12.0,
    like_scale: float = 6.0,
    drift: float = 0.02,
    phi: float = 0.3,
    beta: float = 0.008,
    noise_sd: float = 0.002,
    labeled_share: float = 0.5,
    n_users: int = 40,
    start: date = date(2021, 1, 2),
    tz: str = DEFAULT_TZ,
) -> SyntheticStock:
    """A stock whose daily return leans on the previous day's count-with-likes.

    return[t] = drift + phi * (return[t-1] - drift) + beta * z[t-1] + noise, where
    z is the standardized count-with-likes.  With ``planted=False`` the beta
    term is dropped and the comment stream is independent of the price.
    """
    rng = np.random.default_rng(seed)
    vocab = Vocabulary.generate(rng, 20, 60)
    zone = ZoneInfo(tz)
    calendar = trading_calendar(start, n_days)
    users = [f"u{j:03d}" for j in range(n_users)]
    user_weights = rng.dirichlet(np.full(n_users, 0.7))

    counts = rng.poisson(mean_comments, n_days) + 1
    comments: list[Comment] = []
    cwl = np.zeros(n_days)
    k = 0
    for t, day in enumerate(calendar):
        likes = rng.geometric(1.0 / (1.0 + like_scale), counts[t]) - 1
        cwl[t] = counts[t] + likes.sum()
        for j in range(counts[t]):
            label = Label.BULLISH if rng.random() < 0.5 else Label.BEARISH
            own = vocab.bullish if label is Label.BULLISH else vocab.bearish
            words = list(rng.choice(vocab.neutral, int(rng.integers(2, 6)))) + list(rng.choice(own, int(rng.integers(1, 3))))
            rng.shuffle(words)
            minute = int(rng.integers(8 * 60, 12 * 60))
            local = datetime.combine(day, time(minute // 60, minute % 60, int(rng.integers(0, 60))), zone)
            shown = label if rng.random() < labeled_share else Label.UNLABELED
            comments.append(Comment(
                f"c{k:06d}", local.astimezone(ZoneInfo("UTC")), str(rng.choice(users, p=user_weights)),
                " ".join(words), shown, int(likes[j]),
            ))
            k += 1

    z = (cwl - cwl.mean()) / cwl.std()
    b = beta if planted else 0.0
    r = np.empty(n_days)
    r[0] = drift
    eps = rng.normal(0.0, noise_sd, n_days)
    for t in range(1, n_days):
        r[t] = drift + phi * (r[t - 1] - drift) + b * z[t - 1] + eps[t]
    closes = 1000.0 * np.cumprod(1.0 + r)
    # closes rounded to a price tick keep written files short and exact
    bars = [MarketBar(d, round(float(c), 6)) for d, c in zip(calendar, closes)]
    return SyntheticStock(CommentCorpus(symbol, tuple(comments)), bars, cwl, r, b, vocab)
