import math

import pytest
from hypothesis import given, settings, strategies as st

from tsesent.ingest import Label
from tsesent.lexicon import (
    BIGRAM, UNIGRAM, ContingencyCounts, LexiconEntry, LexiconError, SentimentLexicon, build_lexicon,
    count_contingency, load_lexicon, pmi, save_lexicon, score,
)
from tsesent.persian_text import bigram_key

B, R = Label.BULLISH, Label.BEARISH


def oracle_score(term, docs, s):
    """Direct-probability PMI difference, enumerating documents one by one."""
    cell = {(True, B): s, (False, B): s, (True, R): s, (False, R): s}
    for toks, label in docs:
        present = term in toks or term in {bigram_key(a, b) for a, b in zip(toks, toks[1:])}
        cell[(present, label)] += 1
    total = sum(cell.values())
    p_term = (cell[(True, B)] + cell[(True, R)]) / total

    def one(c):
        p_class = (cell[(True, c)] + cell[(False, c)]) / total
        return math.log(cell[(True, c)] / total / (p_term * p_class))

    return one(B) - one(R)


words = st.sampled_from(list("abcdef"))
doc = st.tuples(st.lists(words, min_size=0, max_size=6), st.sampled_from([B, R]))
corpus = st.lists(doc, min_size=2, max_size=10).filter(lambda d: {lab for _, lab in d} == {B, R})


@settings(max_examples=300, deadline=None)
@given(corpus, st.sampled_from([0.5, 1.0, 0.1]))
def test_scores_match_oracle(docs, s):
    counts = count_contingency(docs)
    for term in counts.terms():
        assert score(term, counts, s) == pytest.approx(oracle_score(term, docs, s), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(corpus)
def test_label_swap_negates(docs):
    flipped = [(t, R if lab is B else B) for t, lab in docs]
    a, b = count_contingency(docs), count_contingency(flipped)
    for term in a.terms():
        assert score(term, a) == -score(term, b)


@settings(max_examples=100, deadline=None)
@given(corpus, st.integers(2, 5))
def test_duplication_keeps_unsmoothed_scores(docs, k):
    a, b = count_contingency(docs), count_contingency(docs * k)
    for term in a.terms():
        if 0 < a.df_bullish.get(term, 0) < a.n_bullish_docs and 0 < a.df_bearish.get(term, 0) < a.n_bearish_docs:
            assert score(term, b, 0.0) == pytest.approx(score(term, a, 0.0), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(corpus, st.integers(0, 4), st.integers(0, 4))
def test_threshold_monotone(docs, t1, dt):
    lo = build_lexicon(docs, df_threshold=t1)
    hi = build_lexicon(docs, df_threshold=t1 + dt)
    assert set(hi.terms()) <= set(lo.terms())


def test_presence_counting():
    docs = [(["x", "x"], B), (["x"], B), (["x"], B), (["x"], B), (["y"], B), (["z"], R)]
    counts = count_contingency(docs)
    assert counts.df_bullish["x"] == 4
    assert counts.df("absent") == 0


def test_empty_corpus_and_unlabeled():
    with pytest.raises(LexiconError):
        count_contingency([])
    with pytest.raises(LexiconError, match="unlabeled"):
        count_contingency([(["a"], Label.UNLABELED)])


def test_ln4_example():
    counts = ContingencyCounts(100, 100, {"t": 40}, {"t": 10})
    assert score("t", counts, 0.0) == pytest.approx(math.log(4), abs=1e-12)
    assert abs(score("t", counts, 0.5) - math.log(4)) < 0.05


def test_independent_and_symmetric_terms():
    counts = ContingencyCounts(10000, 20000, {"t": 3000}, {"t": 6000})
    assert abs(pmi("t", B, counts)) < 1e-3 and abs(pmi("t", R, counts)) < 1e-3
    assert score("t", ContingencyCounts(50, 50, {"t": 7}, {"t": 7})) == 0.0


def test_single_class_signs():
    counts = ContingencyCounts(20, 20, {"up": 5}, {"down": 5})
    assert score("up", counts) > 0 > score("down", counts)
    with pytest.raises(LexiconError):
        score("up", counts, 0.0)


def lexicon_from(counts, kinds):
    return build_lexicon(ContingencyCounts(counts[0], counts[1], counts[2], counts[3], kinds), df_threshold=0)


def test_bigram_admission_rule():
    # hand-pick counts so the bigram score lands above or below the constituent sum
    uni = {"a": 6, "b": 6}
    kinds = {"a": UNIGRAM, "b": UNIGRAM, "a_b": BIGRAM}
    strong = lexicon_from((20, 20, {**uni, "a_b": 6}, {"a": 2, "b": 2}), kinds)
    weak = lexicon_from((20, 20, {**uni, "a_b": 3}, {"a": 2, "b": 2, "a_b": 2}), kinds)
    parts = strong["a"].score + strong["b"].score
    assert strong["a_b"].score > parts
    assert "a_b" in strong
    assert score("a_b", ContingencyCounts(20, 20, {"a_b": 3}, {"a_b": 2})) < parts
    assert "a_b" not in weak


def test_bigram_with_absent_constituents_needs_positive_score():
    kinds = {"p_q": BIGRAM}
    assert "p_q" in lexicon_from((20, 20, {"p_q": 5}, {}), kinds)
    assert "p_q" not in lexicon_from((20, 20, {}, {"p_q": 5}), kinds)


def test_infinite_threshold_is_empty(tmp_path):
    lex = build_lexicon([(["a"], B), (["a"], R)], df_threshold=math.inf)
    assert len(lex) == 0
    save_lexicon(lex, tmp_path / "l.jsonl")
    assert load_lexicon(tmp_path / "l.jsonl") == lex


def test_one_class_rejected():
    with pytest.raises(LexiconError, match="both classes"):
        build_lexicon([(["a"], B)])


def test_round_trip_and_order(tmp_path):
    docs = [(list("abca"), B), (list("bcd"), R), (list("ab"), B), (list("dd"), R)] * 3
    lex = build_lexicon(docs, df_threshold=1)
    p = tmp_path / "l.jsonl"
    save_lexicon(lex, p)
    back = load_lexicon(p)
    assert back == lex
    lines = p.read_text(encoding="utf-8").splitlines()
    assert len(lines) == len(lex) + 1
    terms = [line.split('"term": "')[1].split('"')[0] for line in lines[1:]]
    assert terms == sorted(terms, key=lambda t: t.encode())


def test_truncated_and_versioned_files(tmp_path):
    lex = SentimentLexicon({"a": LexiconEntry("a", UNIGRAM, 1.0, 4, False),
                            "b": LexiconEntry("b", UNIGRAM, -1.0, 4, False)}, 3, 0.5, math.e)
    p = tmp_path / "l.jsonl"
    save_lexicon(lex, p)
    full = p.read_text(encoding="utf-8").splitlines()
    p.write_text("\n".join(full[:-1]) + "\n", encoding="utf-8")
    with pytest.raises(LexiconError, match="truncated"):
        load_lexicon(p)
    p.write_text(full[0].replace('"version": 1', '"version": 99') + "\n", encoding="utf-8")
    with pytest.raises(LexiconError, match="version"):
        load_lexicon(p)
    p.write_text(full[0] + "\n{not json\n", encoding="utf-8")
    with pytest.raises(LexiconError, match=":2"):
        load_lexicon(p)
