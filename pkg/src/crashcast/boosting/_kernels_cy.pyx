# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the hot loops: split scanning and per-vector margins."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scan_best_split(double[::1] values, int[::1] sidx, double[::1] g, double[::1] h,
                    double g_total, double h_total,
                    double reg_lambda, double min_child_weight, long min_child_samples):
    """Sequential best-split scan; same contract as the numpy fallback."""
    cdef Py_ssize_t m = sidx.shape[0]
    if m < 2:
        return (-1, 0.0, 0.0, 0.0)

    cdef double gl = 0.0, hl = 0.0
    cdef double best = 0.0
    cdef Py_ssize_t best_pos = -1
    cdef double best_gl = 0.0, best_hl = 0.0
    cdef double score, gr, hr
    cdef Py_ssize_t i, n_left, n_right
    cdef int r
    cdef bint found = False
    for i in range(m - 1):
        r = sidx[i]
        gl += g[r]
        hl += h[r]
        if values[r] >= values[sidx[i + 1]]:
            continue
        n_left = i + 1
        n_right = m - n_left
        if n_left < min_child_samples or n_right < min_child_samples:
            continue
        hr = h_total - hl
        if hl < min_child_weight or hr < min_child_weight:
            continue
        gr = g_total - gl
        score = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
        if not found or score > best:
            found = True
            best = score
            best_pos = i
            best_gl = gl
            best_hl = hl
    if not found:
        return (-1, 0.0, 0.0, 0.0)
    return (best_pos, best, best_gl, best_hl)


def predict_margins_one(double[::1] x, int[::1] feature, double[::1] threshold,
                        int[::1] left, int[::1] right, double[::1] leaf_value,
                        int[::1] roots, int[::1] tree_class, long n_classes):
    """Margins for one input vector across every stacked tree."""
    out = np.zeros(n_classes)
    cdef double[::1] margins = out
    cdef Py_ssize_t n_trees = roots.shape[0]
    cdef Py_ssize_t t
    cdef int node, f
    cdef double xv
    for t in range(n_trees):
        node = roots[t]
        f = feature[node]
        while f >= 0:
            xv = x[f]
            # NaN routes left: (xv > thr) is False for NaN
            if xv > threshold[node]:
                node = right[node]
            else:
                node = left[node]
            f = feature[node]
        margins[tree_class[t]] += leaf_value[node]
    return out
