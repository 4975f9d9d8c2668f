import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.naive_bayes import GaussianNB as SkGaussianNB

from tsesent.classifier import (
    ALGORITHMS, Bagging, C45Tree, FeatureSchema, FeatureVector, GaussianNB, SchemaError, added_errors,
    cross_validate, featurize, load_model, predict, predict_many, save_model, stratified_folds, train,
)
from tsesent.ingest import Label
from tsesent.lexicon import BIGRAM, UNIGRAM, LexiconEntry, SentimentLexicon
from tsesent.persian_text import Token, bigram_key

B, R = Label.BULLISH, Label.BEARISH


def lex(**scores):
    entries = {}
    for term, s in scores.items():
        term = term.replace("__", "_")
        kind = BIGRAM if "_" in term else UNIGRAM
        entries[term] = LexiconEntry(term, kind, s, 5, False)
    return SentimentLexicon(entries, 3, 0.5, math.e)


def toks(*stems):
    return [Token(s, s) for s in stems]


def test_bigram_consumes_its_unigrams():
    fv = featurize(toks("a", "b"), lex(a=0.5, a__b=2.0))
    assert dict(fv.term_features) == {bigram_key("a", "b"): 2.0}
    assert fv.comment_score == 1.0


def test_no_matches_and_empty_comment():
    fv = featurize(toks("x", "y"), lex(a=1.0))
    assert dict(fv.term_features) == {} and fv.comment_score == 0.0
    assert featurize([], lex(a=1.0)).comment_score == 0.0


def test_repeating_comment_doubles_features_not_score():
    lexicon = lex(a=0.5, b=-1.0, a__c=3.0)
    one = featurize(toks("a", "c", "b", "z"), lexicon)
    two = featurize(toks("a", "c", "b", "z") * 2, lexicon)
    assert {k: 2 * v for k, v in one.term_features.items()} == dict(two.term_features)
    assert two.comment_score == pytest.approx(one.comment_score, abs=1e-15)


def test_without_score_flag():
    assert featurize(toks("a"), lex(a=1.0), include_score=False).comment_score is None


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from("abcd"), max_size=15))
def test_consumption_invariant(stems):
    lexicon = lex(a=0.5, b=-0.3, a__b=1.2, c__c=-2.0, d__a=0.7)
    fv = featurize(toks(*stems), lexicon)
    uni = sum(c for t, c in fv.counts.items() if lexicon[t].kind == UNIGRAM)
    bi = sum(c for t, c in fv.counts.items() if lexicon[t].kind == BIGRAM)
    assert uni + 2 * bi <= len(stems)


def separable(n=40):
    vecs = []
    for i in range(n):
        if i % 2:
            vecs.append(FeatureVector({"up": 1.0 + i % 3}, 0.5, B))
        else:
            vecs.append(FeatureVector({"down": -1.0 - i % 3}, -0.5, R))
    return vecs


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_separable_training_accuracy(algorithm):
    vecs = separable()
    model = train(vecs, algorithm, seed=1)
    assert predict_many(model, vecs) == [v.label for v in vecs]
    m = cross_validate(vecs, algorithm, k=5, seed=1)
    assert m.accuracy == m.recall == m.f_measure == 1.0


@pytest.mark.parametrize("algorithm", ALGORITHMS)
def test_same_seed_same_predictions(algorithm, tmp_path):
    rng = np.random.default_rng(3)
    vecs = [FeatureVector({f"t{j}": float(rng.normal()) for j in range(5) if rng.random() < 0.6},
                          float(rng.normal()), B if rng.random() < 0.5 else R) for _ in range(80)]
    probe = [v.with_label(None) for v in vecs]
    a = train(vecs, algorithm, seed=7)
    b = train(vecs, algorithm, seed=7)
    assert predict_many(a, probe) == predict_many(b, probe)
    assert cross_validate(vecs, algorithm, k=4, seed=2) == cross_validate(vecs, algorithm, k=4, seed=2)
    save_model(a, tmp_path / "m.json")
    assert predict_many(load_model(tmp_path / "m.json"), probe) == predict_many(a, probe)


def test_single_class_rejected():
    with pytest.raises(ValueError, match="both"):
        train([FeatureVector({"a": 1.0}, 0.0, B)] * 3, "decision_tree")


def test_two_point_nb_closed_form():
    X = np.array([[1.0, 4.0], [3.0, 0.0]])
    nb = GaussianNB().fit(X, np.array([1, 0]))
    eps = 1e-9 * max(np.var(X[:, 0]), np.var(X[:, 1]))
    assert np.array_equal(nb.mean_, np.array([[3.0, 0.0], [1.0, 4.0]]))
    assert np.allclose(nb.var_, eps)
    assert nb.prior_.tolist() == [0.5, 0.5]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(6, 60), st.integers(1, 6))
def test_nb_matches_sklearn(seed, n, p):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) * rng.integers(1, 4, size=p)
    y = np.r_[[0, 1], rng.integers(0, 2, size=n - 2)].astype(np.int8)
    ours = GaussianNB().fit(X, y)
    ref = SkGaussianNB().fit(X, y)
    assert np.allclose(ours.mean_, ref.theta_, rtol=1e-12, atol=1e-12)
    assert np.allclose(ours.var_, ref.var_, rtol=1e-10, atol=1e-15)
    Z = rng.normal(size=(50, p)) * 2
    ll = ours.log_likelihood(Z)
    ref_ll = ref.predict_joint_log_proba(Z)
    assert np.allclose(ll, ref_ll, rtol=1e-9, atol=1e-9)
    clear = np.abs(ref_ll[:, 1] - ref_ll[:, 0]) > 1e-6
    assert np.array_equal(ours.predict(Z)[clear], ref.predict(Z)[clear])


def test_all_zero_vector_ties_bullish():
    # sign-symmetric data: equal class likelihoods at the origin
    vecs = [FeatureVector({"a": 1.0}, 1.0, B), FeatureVector({"a": -1.0}, -1.0, R)] * 4
    assert predict(train(vecs, "naive_bayes"), FeatureVector({}, 0.0)) is B
    # identical inputs in both classes: the tree is one leaf with equal counts
    flat = [FeatureVector({}, 0.0, B), FeatureVector({}, 0.0, R)] * 4
    assert predict(train(flat, "decision_tree"), FeatureVector({}, 0.0)) is B


def test_split_vote_ties_bullish():
    X = np.array([[-1.0], [1.0], [-2.0], [2.0]])
    y = np.array([0, 1, 0, 1], dtype=np.int8)
    tree = C45Tree(min_leaf=1, prune=False).fit(X, y)
    flipped = C45Tree.from_dict({**tree.to_dict(), "counts": [c[::-1] for c in tree.to_dict()["counts"]]})
    bag = Bagging(n_estimators=2)
    bag.estimators_ = [tree, flipped]
    assert bag.predict(X).tolist() == [1, 1, 1, 1]


def test_training_point_recovered_by_unpruned_tree():
    blocks = [R] * 20 + [B] * 20 + [R] * 20
    vecs = [FeatureVector({"a": float(i)}, 0.0, lab) for i, lab in enumerate(blocks)]
    model = train(vecs, "decision_tree", min_leaf=1, prune=False)
    assert predict_many(model, vecs) == blocks


def test_single_tree_bag_equals_its_tree():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(120, 6))
    y = (X[:, 0] - X[:, 2] + rng.normal(size=120) > 0).astype(np.int8)
    bag = Bagging(n_estimators=1, seed=4).fit(X, y)
    sample = np.random.default_rng(np.random.SeedSequence(4).spawn(1)[0]).integers(0, 120, size=120)
    tree = C45Tree().fit(X, y, sample_indices=sample)
    Z = rng.normal(size=(200, 6))
    assert np.array_equal(bag.predict(Z), tree.predict(Z))


def test_schema_mismatch():
    model = train(separable(), "naive_bayes")
    with pytest.raises(SchemaError, match="outside"):
        predict(model, FeatureVector({"unknown": 1.0}, 0.0))
    with pytest.raises(SchemaError, match="lacks"):
        predict(model, FeatureVector({"up": 1.0}))
    schema = FeatureSchema(("up", "down"), include_score=False)
    with pytest.raises(SchemaError, match="carries"):
        schema.densify([FeatureVector({"up": 1.0}, 0.0)])


def test_leave_one_out_on_four_points():
    vecs = [FeatureVector({"a": 1.0}, 1.0, B), FeatureVector({"a": 2.0}, 1.0, B),
            FeatureVector({"a": -1.0}, -1.0, R), FeatureVector({"a": -2.0}, -1.0, R)]
    for algorithm in ALGORITHMS:
        assert cross_validate(vecs, algorithm, k=4).n == 4


def test_too_few_examples_for_folds():
    with pytest.raises(ValueError, match="folds"):
        cross_validate(separable(4), "naive_bayes", k=10)


def test_folds_are_stratified():
    y = np.array([1] * 30 + [0] * 20)
    folds = stratified_folds(y, 10, seed=5)
    for f in range(10):
        assert (y[folds == f] == 1).sum() == 3 and (y[folds == f] == 0).sum() == 2


def test_coin_flip_labels_score_near_half():
    rng = np.random.default_rng(11)
    n = 2000
    vecs = [FeatureVector({f"t{j}": float(rng.normal()) for j in range(4)}, float(rng.normal()),
                          B if rng.random() < 0.5 else R) for _ in range(n)]
    acc = cross_validate(vecs, "naive_bayes", k=10, seed=0).accuracy
    assert abs(acc - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_accuracy_grows_with_signal():
    violations = 0
    for seed in range(20):
        accs = []
        for strength in (0.1, 0.5, 1.5):
            rng = np.random.default_rng(seed)
            labels = rng.integers(0, 2, size=200)
            vecs = [FeatureVector({"s": float(strength * (2 * c - 1) + rng.normal()), "n": float(rng.normal())},
                                  0.0, B if c else R) for c in labels]
            accs.append(cross_validate(vecs, "decision_tree", k=5, seed=seed).accuracy)
        violations += sum(b < a for a, b in zip(accs, accs[1:]))
    assert violations <= 1


def test_pessimistic_error_estimates():
    # values from the upper binomial bound at CF 0.25
    assert added_errors(6, 0, 0.25) == pytest.approx(6 * (1 - 0.25 ** (1 / 6)))
    assert added_errors(1, 1, 0.25) == 0.0
    assert added_errors(20, 3, 0.25) > 0
    with pytest.raises(ValueError):
        added_errors(5, 1, 0.6)
