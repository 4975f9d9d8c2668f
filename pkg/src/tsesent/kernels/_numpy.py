"""Vectorized numpy versions of the tree kernels (fallback backend)."""

import numpy as np


def scan_splits(XT, y, features, order, xlogx, min_leaf):
    """Best binary threshold per feature by information gain.

    ``order[j]`` lists the node's sample indices sorted by feature
    ``features[j]`` (a row of ``XT``).
    Returns per-feature (gain, split_info, threshold, n_candidates); features
    without an admissible threshold get gain ``-inf``.
    """
    p, m = order.shape
    gain = np.full(p, -np.inf)
    split = np.zeros(p)
    thr = np.zeros(p)
    if m < 2:
        return gain, split, thr, np.zeros(p, dtype=np.intp)
    vals = XT[np.asarray(features)[:, None], order]
    ys = y[order].astype(np.intp)
    total1 = ys.sum(axis=1)
    parent = xlogx[m] - xlogx[m - total1] - xlogx[total1]

    left1 = np.cumsum(ys, axis=1)[:, :-1]
    n_left = np.broadcast_to(np.arange(1, m), left1.shape)
    n_right = m - n_left
    right1 = total1[:, None] - left1
    ok = (n_left >= min_leaf) & (n_right >= min_leaf) & (vals[:, :-1] < vals[:, 1:])
    info = (
        xlogx[n_left] - xlogx[n_left - left1] - xlogx[left1]
        + xlogx[n_right] - xlogx[n_right - right1] - xlogx[right1]
    )
    g = (parent[:, None] - info) / float(m)
    g = np.where(ok, g, -np.inf)
    best = np.argmax(g, axis=1)
    n_cand = ok.sum(axis=1).astype(np.intp)
    has = n_cand > 0
    if has.any():
        r = np.nonzero(has)[0]
        b = best[r]
        gain[r] = g[r, b]
        nl = b + 1
        split[r] = (xlogx[m] - xlogx[nl] - xlogx[m - nl]) / float(m)
        lo = vals[r, b]
        hi = vals[r, b + 1]
        mid = lo + (hi - lo) / 2.0
        thr[r] = np.where(mid >= hi, lo, mid)
    return gain, split, thr, n_cand


def partition(order, goes_left):
    mask = goes_left.astype(bool)[order]
    p = order.shape[0]
    return order[mask].reshape(p, -1), order[~mask].reshape(p, -1)
