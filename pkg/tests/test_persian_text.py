import pytest
from hypothesis import given, settings, strategies as st

from tsesent.persian_text import (
    NEGATION_MARK, ZWNJ, DictionaryStemmer, StemEntry, TextPipeline, Token, bigram_key, colloquial_to_formal,
    extract_ngrams, load_stopwords, normalize, remove_stopwords, stem, tokenize,
)

STEMMER = DictionaryStemmer.default()


@pytest.mark.parametrize("raw, expected", [
    ("سهم عالیه +++ @ali", "سهم عالیه مثبت"),
    ("", ""),
    ("عااااالی", "عاالی"),
    ("افت ---", "افت منفی"),
    ("#نماد سهم", "سهم"),
    ("مي رود", "می" + ZWNJ + "رود"),
    ("میرود", "می" + ZWNJ + "رود"),
    ("۱۲۳۴ سهم", "1234 سهم"),
    ("كتاب", "کتاب"),
])
def test_normalize_examples(raw, expected):
    assert normalize(raw) == expected


def test_digits_are_not_collapsed():
    assert normalize("1000000") == "1000000"


@pytest.mark.parametrize("raw, expected", [
    ("می‌رود بالا", ["می‌رود", "بالا"]),
    ("", []),
    ("صف خرید!", ["صف", "خرید"]),
])
def test_tokenize_examples(raw, expected):
    assert tokenize(raw) == expected


def test_remove_stopwords():
    assert remove_stopwords(["این", "سهم", "خوبه"], {"این"}) == ["سهم", "خوبه"]
    assert remove_stopwords(["این", "سهم"], set()) == ["این", "سهم"]
    assert remove_stopwords(["این", "سهم"], {"این", "سهم"}) == []


def test_bundled_stopwords_load():
    assert "این" in load_stopwords()


@pytest.mark.parametrize("word, expected", [("رفتین", "رفتید"), ("رفتن", "رفتند")])
def test_colloquial_verb_endings(word, expected):
    assert expected in colloquial_to_formal(word)


def test_colloquial_identity():
    assert colloquial_to_formal("کتاب") == ["کتاب"]


def test_negative_colloquial_verb_is_distinct():
    neg = stem("نمیره", STEMMER)
    pos = stem("میره", STEMMER)
    assert neg.is_negative_verb and not pos.is_negative_verb
    assert neg.stem != pos.stem and neg.stem.startswith(NEGATION_MARK)


def test_stem_delegates_and_falls_back():
    custom = DictionaryStemmer({"خوبه": StemEntry("خوب", False, "ADJ")})
    assert stem("خوبه", custom).stem == "خوب"
    assert stem("زرتیکس", STEMMER) == Token("زرتیکس", "زرتیکس", False)


def test_spelling_variants_share_a_stem():
    stems = {stem(w, STEMMER).stem for w in ("میرود", "می رود".replace(" ", ZWNJ), "میره")}
    assert len(stems) == 1


def test_extract_ngrams_examples():
    toks = [Token(s, s) for s in "abc"]
    assert extract_ngrams(toks) == (["a", "b", "c"], [bigram_key("a", "b"), bigram_key("b", "c")])
    assert extract_ngrams(toks[:1]) == (["a"], [])
    assert extract_ngrams([]) == ([], [])


def test_phrase_lookup_beats_constituents():
    s = DictionaryStemmer({"صف خرید": StemEntry("صف خرید", False, "NP")})
    _, bigrams = extract_ngrams([Token("صف", "صف"), Token("خرید", "خرید")], s)
    assert bigrams == [bigram_key("صف", "خرید")]


def test_stemmer_file_validation(tmp_path):
    p = tmp_path / "bad.tsv"
    p.write_text("سهم\tسهم\t2\tN\n", encoding="utf-8")
    with pytest.raises(ValueError, match="bad.tsv:1"):
        DictionaryStemmer.from_file(p)


forum_text = st.text(
    alphabet=st.sampled_from(list("سهمخوبافتمیرونهای") + [" ", ZWNJ, "+", "-", "@", "#", "!", "ي", "ك", "۱", "a", "\n"]),
    max_size=40,
)


@settings(max_examples=300, deadline=None)
@given(forum_text)
def test_normalize_idempotent(text):
    once = normalize(text)
    assert normalize(once) == once


@settings(max_examples=300, deadline=None)
@given(forum_text)
def test_tokens_are_clean(text):
    for tok in tokenize(normalize(text)):
        assert not set(tok) & set("@#+-")


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("سهمخوبافتمیرونهایشتو")), min_size=1, max_size=10))
def test_word_always_among_candidates(word):
    assert word in colloquial_to_formal(word)
    assert stem(word, STEMMER).stem


@settings(max_examples=200, deadline=None)
@given(forum_text)
def test_bigram_count(text):
    pipe = TextPipeline()
    toks = pipe.tokens(text)
    uni, bi = extract_ngrams(toks, pipe.stemmer)
    assert len(uni) == len(toks)
    assert len(bi) == max(0, len(toks) - 1)
