# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split-search kernels for the C4.5-style tree.

Mirrors ``_numpy.py`` operation for operation so both backends return
bit-identical results.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def scan_splits(const double[:, ::1] XT, const signed char[::1] y,
                const cnp.intp_t[::1] features, const cnp.intp_t[:, ::1] order,
                const double[::1] xlogx, Py_ssize_t min_leaf):
    cdef Py_ssize_t p = order.shape[0]
    cdef Py_ssize_t m = order.shape[1]
    gain_arr = np.full(p, -np.inf)
    split_arr = np.zeros(p)
    thr_arr = np.zeros(p)
    cand_arr = np.zeros(p, dtype=np.intp)
    cdef double[::1] gain = gain_arr
    cdef double[::1] split = split_arr
    cdef double[::1] thr = thr_arr
    cdef cnp.intp_t[::1] cand = cand_arr

    cdef Py_ssize_t j, f, i, s, t, n_left, n_right, total1, left1, best_i
    cdef double parent, info, g, best, a, b, mid, dm = <double>m
    cdef cnp.intp_t n_cand

    with nogil:
        for j in range(p):
            f = features[j]
            total1 = 0
            for i in range(m):
                total1 += y[order[j, i]]
            parent = xlogx[m] - xlogx[m - total1] - xlogx[total1]
            best = -1.0
            best_i = -1
            n_cand = 0
            left1 = 0
            for i in range(m - 1):
                s = order[j, i]
                t = order[j, i + 1]
                left1 += y[s]
                n_left = i + 1
                n_right = m - n_left
                if n_left < min_leaf or n_right < min_leaf:
                    continue
                if not XT[f, s] < XT[f, t]:
                    continue
                n_cand += 1
                info = (xlogx[n_left] - xlogx[n_left - left1] - xlogx[left1]
                        + xlogx[n_right] - xlogx[n_right - (total1 - left1)] - xlogx[total1 - left1])
                g = (parent - info) / dm
                if best_i < 0 or g > best:
                    best = g
                    best_i = i
            cand[j] = n_cand
            if best_i >= 0:
                gain[j] = best
                n_left = best_i + 1
                n_right = m - n_left
                split[j] = (xlogx[m] - xlogx[n_left] - xlogx[n_right]) / dm
                a = XT[f, order[j, best_i]]
                b = XT[f, order[j, best_i + 1]]
                mid = a + (b - a) / 2.0
                if mid >= b:
                    mid = a
                thr[j] = mid
    return gain_arr, split_arr, thr_arr, cand_arr


def partition(const cnp.intp_t[:, ::1] order, const unsigned char[::1] goes_left):
    cdef Py_ssize_t p = order.shape[0]
    cdef Py_ssize_t m = order.shape[1]
    cdef Py_ssize_t n_left = 0, i, j, li, ri
    for i in range(m):
        n_left += goes_left[order[0, i]]
    left_arr = np.empty((p, n_left), dtype=np.intp)
    right_arr = np.empty((p, m - n_left), dtype=np.intp)
    cdef cnp.intp_t[:, ::1] left = left_arr
    cdef cnp.intp_t[:, ::1] right = right_arr
    cdef cnp.intp_t s
    with nogil:
        for j in range(p):
            li = 0
            ri = 0
            for i in range(m):
                s = order[j, i]
                if goes_left[s]:
                    left[j, li] = s
                    li += 1
                else:
                    right[j, ri] = s
                    ri += 1
    return left_arr, right_arr
