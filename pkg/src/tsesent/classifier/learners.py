"""Gaussian naive Bayes, a C4.5-style decision tree, and bagged trees.

Labels are encoded 1 = bullish, 0 = bearish; every learner breaks ties
toward bullish.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from .. import kernels


class GaussianNB:
    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GaussianNB":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        eps = self.var_smoothing * float(X.var(axis=0).max()) if X.size else 0.0
        if eps <= 0:
            eps = self.var_smoothing
        self.epsilon_ = eps
        self.prior_ = np.empty(2)
        self.mean_ = np.empty((2, X.shape[1]))
        self.var_ = np.empty((2, X.shape[1]))
        for c in (0, 1):
            Xc = X[y == c]
            self.prior_[c] = len(Xc) / len(X)
            self.mean_[c] = Xc.mean(axis=0)
            self.var_[c] = Xc.var(axis=0) + eps
        return self

    def log_likelihood(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty((len(X), 2))
        for c in (0, 1):
            norm_term = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_[c]))
            out[:, c] = math.log(self.prior_[c]) + norm_term - 0.5 * np.sum(
                (X - self.mean_[c]) ** 2 / self.var_[c], axis=1
            )
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        ll = self.log_likelihood(X)
        return (ll[:, 1] >= ll[:, 0]).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "var_smoothing": self.var_smoothing,
            "epsilon": self.epsilon_,
            "prior": self.prior_.tolist(),
            "mean": self.mean_.tolist(),
            "var": self.var_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianNB":
        m = cls(d["var_smoothing"])
        m.epsilon_ = d["epsilon"]
        m.prior_ = np.array(d["prior"], dtype=float)
        m.mean_ = np.array(d["mean"], dtype=float)
        m.var_ = np.array(d["var"], dtype=float)
        return m


@lru_cache(maxsize=None)
def _upper_z(cf: float) -> float:
    return float(norm.ppf(1.0 - cf))


def added_errors(n: float, e: float, cf: float) -> float:
    """Pessimistic extra errors for a leaf with ``e`` errors out of ``n`` (upper CF bound)."""
    if cf > 0.5:
        raise ValueError("confidence factor must be <= 0.5")
    if n <= 0:
        return 0.0
    if e < 1:
        base = n * (1.0 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = _upper_z(cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _xlogx_table(n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    out = np.zeros(n + 1)
    out[1:] = k[1:] * np.log2(k[1:])
    return out


class C45Tree:
    """Binary-threshold decision tree grown by gain ratio and pruned pessimistically.

    Split choice follows C4.5 for numeric attributes: per feature the best
    threshold by information gain (less a log2(#thresholds)/n penalty), then
    the feature with the highest gain ratio among those whose gain is at least
    the average.
    """

    def __init__(self, min_leaf: int = 2, confidence: float = 0.25, prune: bool = True,
                 max_depth: int | None = None, backend: str | None = None):
        self.min_leaf = min_leaf
        self.confidence = confidence
        self.prune = prune
        self.max_depth = max_depth
        self.backend = backend

    def fit(self, X: np.ndarray, y: np.ndarray, sample_indices: np.ndarray | None = None) -> "C45Tree":
        kern = kernels.get_backend(self.backend)
        X = np.asarray(X, dtype=float)
        XT = np.ascontiguousarray(X.T)
        y8 = np.ascontiguousarray(y, dtype=np.int8)
        idx = np.arange(len(X), dtype=np.intp) if sample_indices is None else np.asarray(sample_indices, dtype=np.intp)
        order = np.ascontiguousarray(idx[np.argsort(XT[:, idx], axis=1, kind="stable")]) if XT.shape[0] else np.empty((0, len(idx)), dtype=np.intp)
        xlogx = _xlogx_table(len(idx))
        self.n_features_ = X.shape[1]
        self._feature, self._threshold, self._left, self._right, self._counts = [], [], [], [], []
        counts = np.bincount(y8[idx], minlength=2)
        features = np.arange(XT.shape[0], dtype=np.intp)
        self._grow(kern, XT, y8, features, order, xlogx, counts, 0)
        if self.prune:
            self._prune(0)
        self._freeze()
        return self

    def _new_node(self, counts) -> int:
        self._feature.append(-1)
        self._threshold.append(0.0)
        self._left.append(-1)
        self._right.append(-1)
        self._counts.append((int(counts[0]), int(counts[1])))
        return len(self._feature) - 1

    def _grow(self, kern, XT, y8, features, order, xlogx, counts, depth) -> int:
        node = self._new_node(counts)
        m = int(counts[0] + counts[1])
        if (counts[0] == 0 or counts[1] == 0 or m < 2 * self.min_leaf
                or (self.max_depth is not None and depth >= self.max_depth)):
            return node
        # a feature constant in this node stays constant below it
        varying = XT[features, order[:, 0]] < XT[features, order[:, -1]]
        if not varying.all():
            features = features[varying]
            order = np.ascontiguousarray(order[varying])
        if len(features) == 0:
            return node
        gain, split, thr, n_cand = kern.scan_splits(XT, y8, features, order, xlogx, self.min_leaf)
        valid = n_cand > 0
        if not valid.any():
            return node
        adj = np.full_like(gain, -np.inf)
        adj[valid] = gain[valid] - np.log2(n_cand[valid]) / m
        valid &= adj > 0
        if not valid.any():
            return node
        avg = adj[valid].mean()
        eligible = valid & (adj >= avg - 1e-3)
        ratio = np.where(eligible, adj / np.where(split > 0, split, 1.0), -np.inf)
        j = int(np.argmax(ratio))
        feat = int(features[j])
        goes_left = np.ascontiguousarray(XT[feat] <= thr[j], dtype=np.uint8)
        left_order, right_order = kern.partition(order, goes_left)
        lc = np.bincount(y8[left_order[0]], minlength=2)
        rc = np.bincount(y8[right_order[0]], minlength=2)
        self._feature[node] = feat
        self._threshold[node] = float(thr[j])
        left = self._grow(kern, XT, y8, features, np.ascontiguousarray(left_order), xlogx, lc, depth + 1)
        right = self._grow(kern, XT, y8, features, np.ascontiguousarray(right_order), xlogx, rc, depth + 1)
        self._left[node] = left
        self._right[node] = right
        return node

    def _leaf_estimate(self, node: int) -> float:
        c0, c1 = self._counts[node]
        n, e = c0 + c1, min(c0, c1)
        return e + added_errors(n, e, self.confidence)

    def _prune(self, node: int) -> float:
        if self._feature[node] < 0:
            return self._leaf_estimate(node)
        subtree = self._prune(self._left[node]) + self._prune(self._right[node])
        as_leaf = self._leaf_estimate(node)
        if as_leaf <= subtree + 0.1:
            self._feature[node] = -1
            self._left[node] = self._right[node] = -1
            return as_leaf
        return subtree

    def _freeze(self):
        # renumber reachable nodes so pruned subtrees do not linger
        keep, stack, remap = [], [0], {}
        while stack:
            n = stack.pop()
            remap[n] = len(keep)
            keep.append(n)
            if self._feature[n] >= 0:
                stack.extend((self._right[n], self._left[n]))
        self.feature_ = np.array([self._feature[n] for n in keep], dtype=np.intp)
        self.threshold_ = np.array([self._threshold[n] for n in keep], dtype=float)
        self.left_ = np.array([remap.get(self._left[n], -1) for n in keep], dtype=np.intp)
        self.right_ = np.array([remap.get(self._right[n], -1) for n in keep], dtype=np.intp)
        self.counts_ = np.array([self._counts[n] for n in keep], dtype=np.int64).reshape(-1, 2)
        del self._feature, self._threshold, self._left, self._right, self._counts

    @property
    def node_count(self) -> int:
        return len(self.feature_)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.intp)
        rows = np.arange(len(X))
        while True:
            feat = self.feature_[node]
            internal = feat >= 0
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = X[r, feat[internal]] <= self.threshold_[n]
            node[internal] = np.where(go_left, self.left_[n], self.right_[n])

    def predict(self, X: np.ndarray) -> np.ndarray:
        c = self.counts_[self.apply(X)]
        return (c[:, 1] >= c[:, 0]).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "min_leaf": self.min_leaf,
            "confidence": self.confidence,
            "prune": self.prune,
            "max_depth": self.max_depth,
            "n_features": self.n_features_,
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "counts": self.counts_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "C45Tree":
        t = cls(d["min_leaf"], d["confidence"], d["prune"], d["max_depth"])
        t.n_features_ = d["n_features"]
        t.feature_ = np.array(d["feature"], dtype=np.intp)
        t.threshold_ = np.array(d["threshold"], dtype=float)
        t.left_ = np.array(d["left"], dtype=np.intp)
        t.right_ = np.array(d["right"], dtype=np.intp)
        t.counts_ = np.array(d["counts"], dtype=np.int64).reshape(-1, 2)
        return t


def bootstrap_indices(seed: int, n_estimators: int, n: int, size: int | None = None) -> list[np.ndarray]:
    """One index sample per estimator, each from its own child of the master seed."""
    children = np.random.SeedSequence(seed).spawn(n_estimators)
    size = n if size is None else size
    return [np.random.default_rng(c).integers(0, n, size=size) for c in children]


class Bagging:
    def __init__(self, n_estimators: int = 25, seed: int = 0, bootstrap_size: int | None = None,
                 n_jobs: int = 1, **tree_params):
        if n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        self.n_estimators = n_estimators
        self.seed = seed
        self.bootstrap_size = bootstrap_size
        self.n_jobs = n_jobs
        self.tree_params = tree_params

    def fit(self, X: np.ndarray, y: np.ndarray) -> "Bagging":
        X = np.asarray(X, dtype=float)
        samples = bootstrap_indices(self.seed, self.n_estimators, len(X), self.bootstrap_size)

        def grow(idx):
            return C45Tree(**self.tree_params).fit(X, y, sample_indices=idx)

        if self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                self.estimators_ = list(pool.map(grow, samples))
        else:
            self.estimators_ = [grow(s) for s in samples]
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros(len(X), dtype=np.int64)
        for tree in self.estimators_:
            votes += tree.predict(X)
        return (2 * votes >= len(self.estimators_)).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "seed": self.seed,
            "bootstrap_size": self.bootstrap_size,
            "tree_params": self.tree_params,
            "estimators": [t.to_dict() for t in self.estimators_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Bagging":
        b = cls(d["n_estimators"], d["seed"], d["bootstrap_size"], **d["tree_params"])
        b.estimators_ = [C45Tree.from_dict(t) for t in d["estimators"]]
        return b
