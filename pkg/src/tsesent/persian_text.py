"""Normalization, tokenization and stemming for colloquial Persian forum text."""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Protocol

ZWNJ = "\u200c"
POSITIVE_WORD = "مثبت"
NEGATIVE_WORD = "منفی"
NEGATION_MARK = "!"
BIGRAM_SEP = "_"

_CHAR_MAP = {
    "ي": "ی",  # Arabic yeh
    "ى": "ی",  # alef maksura
    "ك": "ک",  # Arabic kaf
    "ة": "ه",  # teh marbuta
    "ۀ": "ه",  # heh with yeh above
    "أ": "ا",
    "إ": "ا",
    "\u00a0": " ",
    "\u200d": "",
    "\u200e": "",
    "\u200f": "",
    "ـ": "",  # tatweel
}
_CHAR_MAP.update({chr(0x0660 + i): str(i) for i in range(10)})
_CHAR_MAP.update({chr(0x06F0 + i): str(i) for i in range(10)})
_CHAR_MAP.update({chr(c): "" for c in range(0x064B, 0x0653)})  # harakat
_CHAR_MAP.update({"\u0670": "", "\u0654": "", "\u0655": ""})
_TRANSLATE = str.maketrans(_CHAR_MAP)

# Present stems used to recognise a glued «می»/«نمی» verb prefix.  Single-letter
# colloquial stems only count when followed by a personal ending.
_PRESENT_STEMS = (
    "رو", "خور", "خر", "فروش", "کن", "شو", "ده", "گیر", "رس", "زن", "ریز",
    "خواه", "دار", "بین", "گذار", "کش", "افت", "گرد", "مون", "مان", "گو", "دو",
    "پر", "خوان", "خون", "ساز", "بر", "آور", "کوب", "چرخ", "ترک",
)
_SHORT_STEMS = ("ر", "ش", "د", "گ")
_ENDINGS = ("ند", "ید", "یم", "ین", "م", "ی", "د", "ه", "ن", "یم")
_GLUED_PREFIX = re.compile(
    r"(?<![^\s])(ن?می)(?=(?:(?:{long})(?:{end})?|(?:{short})(?:{end}))(?![\w\u200c]))".format(
        long="|".join(sorted(_PRESENT_STEMS, key=len, reverse=True)),
        short="|".join(_SHORT_STEMS),
        end="|".join(sorted(set(_ENDINGS), key=len, reverse=True)),
    )
)
_SPACED_PREFIX = re.compile(r"(?<![^\s])(ن?می)\s+(?=[ء-ۿ])")
_MENTION_TAG = re.compile(r"[@#]\S*")
_PLUS_RUN = re.compile(r"\++")
_MINUS_RUN = re.compile(r"-+")
_REPEATS = re.compile(r"([^\d\s])\1{2,}")
_ZWNJ_RUN = re.compile(ZWNJ + "{2,}")
_ZWNJ_EDGE = re.compile(r"(?:(?<=\s)|^)" + ZWNJ + "|" + ZWNJ + r"(?=\s|$)")
_SPACES = re.compile(r"\s+")
_TOKEN = re.compile(r"[^\W_](?:[^\W_]|\u200c)*")


def _normalize_once(text: str) -> str:
    text = text.translate(_TRANSLATE)
    text = _MENTION_TAG.sub(" ", text)
    text = _PLUS_RUN.sub(f" {POSITIVE_WORD} ", text)
    text = _MINUS_RUN.sub(f" {NEGATIVE_WORD} ", text)
    text = _REPEATS.sub(r"\1\1", text)
    text = _ZWNJ_RUN.sub(ZWNJ, text)
    text = _SPACES.sub(" ", text).strip()
    text = _ZWNJ_EDGE.sub("", text)
    text = _SPACED_PREFIX.sub(r"\1" + ZWNJ, text)
    text = _GLUED_PREFIX.sub(r"\1" + ZWNJ, text)
    return text


def normalize(text: str) -> str:
    """Canonicalize a raw comment.

    Drops mentions and hashtags, spells out runs of ``+``/``-``, collapses
    letters repeated three or more times to two (digits are left alone so
    prices survive), unifies Arabic/Persian character variants and writes the
    continuous-verb prefix with a half-space.
    """
    for _ in range(8):
        out = _normalize_once(text)
        if out == text:
            break
        text = out
    return text


def tokenize(text: str) -> list[str]:
    out = []
    for tok in _TOKEN.findall(text):
        tok = tok.strip(ZWNJ)
        if tok:
            out.append(tok)
    return out


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        raw = resources.files("tsesent.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(normalize(line))
    return frozenset(words)


def remove_stopwords(tokens: Sequence[str], stoplist: Iterable[str]) -> list[str]:
    stop = stoplist if isinstance(stoplist, (set, frozenset)) else set(stoplist)
    return [t for t in tokens if t not in stop]


# colloquial-to-formal rewriting ------------------------------------------------

_POSSESSIVE = (("مون", "مان"), ("تون", "تان"), ("شون", "شان"))
_PRESENT_PREFIXES = ("می", "نمی", "ب", "ن")


@dataclass(frozen=True)
class TransformRule:
    rule_id: str
    pattern: str
    replacement: str
    applicability: str = ""


TRANSFORM_RULES = (
    TransformRule("1", "ا$", "", "colloquial plural"),
    TransformRule("2", "و$", "", "object marker"),
    TransformRule("3", "(مون|تون|شون)$", "مان|تان|شان", "possessive plural pronoun"),
    TransformRule("4a", "ین$", "ید", "past/present, 2nd person plural"),
    TransformRule("4b", "ن$", "ند", "past/present, 3rd person plural"),
    TransformRule("4c", "ه$", "د", "present simple/subjunctive, 3rd person singular"),
)


def _rewrites(word: str) -> list[str]:
    out: list[str] = []
    n = len(word)
    # 1: colloquial plural «ا» for «ها»/«ان»
    if n > 2 and word.endswith("ا"):
        out.append(word[:-1])
    # 2: «و» glued in place of the object marker «را»
    if n > 2 and word.endswith("و"):
        out.append(word[:-1])
    # 3: possessive «مون/تون/شون»: formal spelling first, then the bare noun
    for coll, formal in _POSSESSIVE:
        if n > len(coll) + 1 and word.endswith(coll):
            out.append(word[: -len(coll)] + formal)
            out.append(word[: -len(coll)].rstrip(ZWNJ))
            break
    # 4: verb person/number endings
    if n > 3 and word.endswith("ین"):
        out.append(word[:-2] + "ید")
    elif n > 2 and word.endswith("ن"):
        out.append(word + "د")
    if n > 3 and word.endswith("ه") and word.startswith(_PRESENT_PREFIXES):
        out.append(word[:-1] + "د")
    return out


def colloquial_to_formal(word: str, depth: int = 3) -> list[str]:
    """Candidate formal spellings of ``word``, ending with ``word`` itself.

    Rules run in their fixed order; rewrites of rewrites (stacked suffixes
    such as plural + possessive + object marker) follow, breadth first, up to
    ``depth`` levels.
    """
    seen = {word}
    out: list[str] = []
    frontier = [word]
    for _ in range(depth):
        nxt = []
        for w in frontier:
            for cand in _rewrites(w):
                if cand and cand not in seen:
                    seen.add(cand)
                    out.append(cand)
                    nxt.append(cand)
        frontier = nxt
    out.append(word)
    return out


# stemming ------------------------------------------------------------------------


class StemEntry(NamedTuple):
    stem: str
    negative: bool = False
    category: str = ""


class Stemmer(Protocol):
    def lookup(self, word: str) -> StemEntry | None: ...


def _dict_key(word: str) -> str:
    return word.translate(_TRANSLATE).replace(ZWNJ, "").strip()


class DictionaryStemmer:
    """Flat surface-to-stem table read from a TSV file.

    Keys ignore half-spaces, so the glued, spaced and half-spaced spellings of
    a verb share one entry.  The first row for a surface form wins.
    """

    def __init__(self, entries: Mapping[str, StemEntry] | None = None):
        self._table: dict[str, StemEntry] = {}
        for surface, entry in (entries or {}).items():
            self._table.setdefault(_dict_key(surface), entry)

    @classmethod
    def from_file(cls, path: str | Path) -> "DictionaryStemmer":
        return cls._parse(Path(path).read_text(encoding="utf-8"), str(path))

    @classmethod
    def default(cls) -> "DictionaryStemmer":
        raw = resources.files("tsesent.data").joinpath("stemmer.tsv").read_text(encoding="utf-8")
        return cls._parse(raw, "stemmer.tsv")

    @classmethod
    def _parse(cls, raw: str, origin: str) -> "DictionaryStemmer":
        entries: dict[str, StemEntry] = {}
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4 or parts[2] not in ("0", "1") or not parts[1]:
                raise ValueError(f"{origin}:{lineno}: expected surface<TAB>stem<TAB>0|1<TAB>category")
            entries.setdefault(parts[0], StemEntry(parts[1], parts[2] == "1", parts[3]))
        return cls(entries)

    def lookup(self, word: str) -> StemEntry | None:
        return self._table.get(_dict_key(word))

    def __len__(self) -> int:
        return len(self._table)


@dataclass(frozen=True)
class Token:
    surface: str
    stem: str
    is_negative_verb: bool = False

    def __post_init__(self):
        if not self.stem:
            raise ValueError("empty stem")


def _marked(entry: StemEntry) -> str:
    if entry.negative and not entry.stem.startswith(NEGATION_MARK):
        return NEGATION_MARK + entry.stem
    return entry.stem


def _lookup_any(word: str, stemmer: Stemmer) -> StemEntry | None:
    for cand in colloquial_to_formal(word):
        hit = stemmer.lookup(cand)
        if hit is not None:
            return hit
    return None


def _affirmative(word: str) -> str | None:
    if word.startswith("نمی") and len(word) > 3:
        return word[1:]
    if word.startswith("ن") and len(word) > 2:
        return word[1:]
    return None


def stem(word: str, stemmer: Stemmer) -> Token:
    """Stem one word: direct lookup, then colloquial rewrites, then negation stripping.

    A negated verb gets the stem of its affirmative form prefixed with ``!`` so
    it stays a separate lexicon item. Unknown words are their own stem.
    """
    # colloquial_to_formal yields the word itself last, after its rewrites
    direct = stemmer.lookup(word)
    hit = direct if direct is not None else _lookup_any(word, stemmer)
    if hit is not None:
        return Token(word, _marked(hit), hit.negative)
    base = _affirmative(word)
    if base is not None:
        hit = _lookup_any(base, stemmer)
        if hit is not None and hit.category.upper().startswith("V"):
            return Token(word, NEGATION_MARK + hit.stem.lstrip(NEGATION_MARK), True)
    return Token(word, word, word.startswith("نمی"))


def bigram_key(left: str, right: str) -> str:
    return f"{left}{BIGRAM_SEP}{right}"


def bigram_parts(key: str) -> tuple[str, ...]:
    return tuple(key.split(BIGRAM_SEP))


def extract_ngrams(
    tokens: Sequence[Token], stemmer: Stemmer | None = None
) -> tuple[list[str], list[str]]:
    """Unigram stems and adjacent-pair bigram keys.

    With a stemmer, each pair is first looked up as a whole phrase; otherwise
    the constituent stems are joined.
    """
    unigrams = [t.stem for t in tokens]
    bigrams = []
    for a, b in zip(tokens, tokens[1:]):
        hit = stemmer.lookup(f"{a.surface} {b.surface}") if stemmer is not None else None
        if hit is not None:
            bigrams.append(_marked(hit).replace(" ", BIGRAM_SEP))
        else:
            bigrams.append(bigram_key(a.stem, b.stem))
    return unigrams, bigrams


@dataclass
class TextPipeline:
    """normalize -> tokenize -> stopword filter -> stem, with a per-word stem cache."""

    stemmer: Stemmer = field(default_factory=DictionaryStemmer.default)
    stopwords: frozenset[str] = field(default_factory=load_stopwords)
    _cache: dict[str, Token] = field(default_factory=dict, repr=False)

    def tokens(self, text: str) -> list[Token]:
        words = remove_stopwords(tokenize(normalize(text)), self.stopwords)
        out = []
        for w in words:
            tok = self._cache.get(w)
            if tok is None:
                tok = self._cache[w] = stem(w, self.stemmer)
            out.append(tok)
        return out

    def ngrams(self, text: str) -> tuple[list[str], list[str]]:
        return extract_ngrams(self.tokens(text), self.stemmer)
