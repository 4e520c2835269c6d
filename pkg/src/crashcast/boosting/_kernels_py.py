"""Pure-numpy kernels: fallback used when the compiled extension is absent.

Semantics match the compiled versions; floating-point rounding may differ
in the last bits because the vectorized cumulative sums associate
differently than the sequential loops.
"""

from __future__ import annotations

import numpy as np


def scan_best_split(values, sidx, g, h, g_total, h_total,
                    reg_lambda, min_child_weight, min_child_samples):
    """Best split of one node along one feature.

    values: full feature column (float64, length n_total)
    sidx:   this node's row indices, sorted ascending by `values` (int32)
    g, h:   full gradient/hessian arrays, already weighted
    g_total, h_total: node sums (tracked by the caller)

    Returns (pos, score, g_left, h_left) where the split sends rows
    sidx[:pos+1] left and score = GL^2/(HL+lam) + GR^2/(HR+lam).
    pos is -1 when no admissible split exists. Candidate positions sit only
    between strictly increasing values; the first position attaining the
    maximum score wins.
    """
    m = sidx.shape[0]
    if m < 2:
        return (-1, 0.0, 0.0, 0.0)
    v = values[sidx]
    cg = np.cumsum(g[sidx])[:-1]
    ch = np.cumsum(h[sidx])[:-1]
    n_left = np.arange(1, m)
    valid = v[:-1] < v[1:]
    valid &= n_left >= min_child_samples
    valid &= (m - n_left) >= min_child_samples
    valid &= ch >= min_child_weight
    valid &= (h_total - ch) >= min_child_weight
    if not valid.any():
        return (-1, 0.0, 0.0, 0.0)
    score = cg * cg / (ch + reg_lambda) + (g_total - cg) ** 2 / (h_total - ch + reg_lambda)
    score[~valid] = -np.inf
    pos = int(np.argmax(score))
    return (pos, float(score[pos]), float(cg[pos]), float(ch[pos]))


def predict_margins_one(x, feature, threshold, left, right, leaf_value, roots, tree_class, n_classes):
    """Margins for a single input vector, traversing every stacked tree.

    Internal nodes have feature >= 0; a missing (NaN) or <= threshold value
    routes left. Vectorized across trees: each pass advances every tree
    still at an internal node by one level.
    """
    cur = roots.copy()
    active = feature[cur] >= 0
    while active.any():
        nodes = cur[active]
        f = feature[nodes]
        xv = x[f]
        go_left = ~(xv > threshold[nodes])
        cur[active] = np.where(go_left, left[nodes], right[nodes])
        active = feature[cur] >= 0
    margins = np.zeros(n_classes)
    np.add.at(margins, tree_class, leaf_value[cur])
    return margins
