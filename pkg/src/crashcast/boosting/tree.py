"""Regularized decision trees grown depth-wise (level order) or leaf-wise
(best-first), sharing one gain formula and one split kernel.

Gain for a candidate split:

    gain = 0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma

Leaf output applies L1 soft-thresholding and shrinkage:

    value = -lr * sign(G) * max(|G|-alpha, 0) / (H + lam)

Each node keeps its row indices pre-sorted per feature; children inherit
by a stable partition of the parent's order, so no re-sorting happens
below the root.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class TreeParams:
    leaf_wise: bool
    max_depth: int  # <= 0 means unbounded
    num_leaves: int  # leaf-wise growth bound
    min_child_weight: float
    min_child_samples: int
    reg_lambda: float
    reg_alpha: float
    gamma: float
    learning_rate: float


@dataclass
class Tree:
    """Flat node-array tree. feature < 0 marks a leaf; missing inputs and
    values <= threshold route left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_value: np.ndarray
    cover: np.ndarray
    node_value: np.ndarray  # cover-weighted mean of subtree leaf values
    cls: int

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Leaf values for every row of X."""
        cur = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[cur] >= 0
        while active.any():
            nodes = cur[active]
            f = self.feature[nodes]
            xv = X[active, f]
            go_left = ~(xv > self.threshold[nodes])
            cur[active] = np.where(go_left, self.left[nodes], self.right[nodes])
            active = self.feature[cur] >= 0
        return self.leaf_value[cur]


def _soft_threshold(g: float, alpha: float) -> float:
    if g > alpha:
        return g - alpha
    if g < -alpha:
        return g + alpha
    return 0.0


class _OpenNode:
    __slots__ = ("sorted_idx", "n_rows", "g_sum", "h_sum", "cover", "depth", "slot", "best")

    def __init__(self, sorted_idx, n_rows, g_sum, h_sum, cover, depth, slot):
        self.sorted_idx = sorted_idx  # {feature -> int32 row indices sorted by value}
        self.n_rows = n_rows
        self.g_sum = g_sum
        self.h_sum = h_sum
        self.cover = cover
        self.depth = depth
        self.slot = slot  # node id in the output arrays
        self.best = None  # (gain, feature, pos, g_left, h_left)


class _TreeBuilder:
    """Accumulates node arrays; children are appended when a node splits."""

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.leaf_value = []
        self.cover = []

    def add_node(self, cover: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_value.append(0.0)
        self.cover.append(cover)
        return len(self.feature) - 1

    def finish(self, cls: int) -> Tree:
        feature = np.asarray(self.feature, dtype=np.int32)
        left = np.asarray(self.left, dtype=np.int32)
        right = np.asarray(self.right, dtype=np.int32)
        leaf_value = np.asarray(self.leaf_value)
        cover = np.asarray(self.cover)
        # children are appended after their parent, so a reverse pass sees
        # every subtree before its root
        node_value = leaf_value.copy()
        for i in range(feature.shape[0] - 1, -1, -1):
            if feature[i] >= 0:
                l, r = left[i], right[i]
                node_value[i] = (cover[l] * node_value[l] + cover[r] * node_value[r]) / (cover[l] + cover[r])
        return Tree(
            feature=feature,
            threshold=np.asarray(self.threshold),
            left=left,
            right=right,
            leaf_value=leaf_value,
            cover=cover,
            node_value=node_value,
            cls=cls,
        )


def grow_tree(
    cols: list[np.ndarray],
    features: np.ndarray,
    root_sorted: dict[int, np.ndarray],
    g: np.ndarray,
    h: np.ndarray,
    w: np.ndarray,
    params: TreeParams,
    cls: int,
    mask_ws: np.ndarray,
) -> Tree:
    """Grow one tree for class `cls`.

    cols: per-feature contiguous value columns (full dataset)
    features: candidate feature indices for this tree (column subsample)
    root_sorted: per-feature row indices of this tree's rows, value-sorted
    g, h: full-length gradient/hessian arrays, weights already applied
    w: full-length row weights (cover accounting)
    mask_ws: reusable boolean workspace of full dataset length
    """
    builder = _TreeBuilder()
    any_f = int(features[0])
    root_rows = root_sorted[any_f]
    root = _OpenNode(
        root_sorted,
        root_rows.shape[0],
        float(g[root_rows].sum()),
        float(h[root_rows].sum()),
        float(w[root_rows].sum()),
        0,
        builder.add_node(float(w[root_rows].sum())),
    )

    if params.leaf_wise:
        _grow_leaf_wise(builder, root, cols, features, g, h, w, params, mask_ws)
    else:
        _grow_depth_wise(builder, root, cols, features, g, h, w, params, mask_ws)
    return builder.finish(cls)


def _find_best(node: _OpenNode, cols, features, g, h, params: TreeParams):
    lam = params.reg_lambda
    parent_score = node.g_sum * node.g_sum / (node.h_sum + lam)
    best = None
    for f in features:
        f = int(f)
        pos, score, gl, hl = kernels.scan_best_split(
            cols[f], node.sorted_idx[f], g, h, node.g_sum, node.h_sum,
            lam, params.min_child_weight, params.min_child_samples,
        )
        if pos < 0:
            continue
        gain = 0.5 * (score - parent_score) - params.gamma
        if best is None or gain > best[0]:
            best = (gain, f, pos, gl, hl)
    return best


def _split(builder, node, best, cols, features, g, h, w, params, mask_ws):
    """Apply `best` to `node`; returns the two children as open nodes."""
    gain, f, pos, gl, hl = best
    sidx = node.sorted_idx[f]
    left_rows = sidx[: pos + 1]
    v_l = float(cols[f][sidx[pos]])
    v_r = float(cols[f][sidx[pos + 1]])
    thr = 0.5 * (v_l + v_r)
    if thr >= v_r:  # no representable midpoint; keep train/predict consistent
        thr = v_l

    mask_ws[left_rows] = True
    left_sorted = {}
    right_sorted = {}
    for fx in features:
        fx = int(fx)
        s = node.sorted_idx[fx]
        in_left = mask_ws[s]
        left_sorted[fx] = s[in_left]
        right_sorted[fx] = s[~in_left]
    mask_ws[left_rows] = False

    cover_l = float(w[left_rows].sum())
    left = _OpenNode(left_sorted, pos + 1, gl, hl, cover_l,
                     node.depth + 1, builder.add_node(cover_l))
    cover_r = node.cover - cover_l
    right = _OpenNode(right_sorted, node.n_rows - pos - 1, node.g_sum - gl, node.h_sum - hl,
                      cover_r, node.depth + 1, builder.add_node(cover_r))

    slot = node.slot
    builder.feature[slot] = f
    builder.threshold[slot] = thr
    builder.left[slot] = left.slot
    builder.right[slot] = right.slot
    node.sorted_idx = None  # release parent order arrays
    return left, right


def _finalize_leaf(builder, node, params: TreeParams):
    value = 0.0
    if node.h_sum + params.reg_lambda > 0:
        value = -params.learning_rate * _soft_threshold(node.g_sum, params.reg_alpha) / (node.h_sum + params.reg_lambda)
    builder.leaf_value[node.slot] = value
    node.sorted_idx = None


def _grow_depth_wise(builder, root, cols, features, g, h, w, params, mask_ws):
    level = [root]
    while level:
        next_level = []
        for node in level:
            best = None
            if node.depth < params.max_depth:
                best = _find_best(node, cols, features, g, h, params)
            if best is None or best[0] <= 0.0:
                _finalize_leaf(builder, node, params)
                continue
            next_level.extend(_split(builder, node, best, cols, features, g, h, w, params, mask_ws))
        level = next_level


def _grow_leaf_wise(builder, root, cols, features, g, h, w, params, mask_ws):
    heap = []
    seq = 0  # FIFO tie-break for equal gains

    def consider(node):
        nonlocal seq
        if params.max_depth > 0 and node.depth >= params.max_depth:
            return
        best = _find_best(node, cols, features, g, h, params)
        if best is not None and best[0] > 0.0:
            node.best = best
            heapq.heappush(heap, (-best[0], seq, node))
            seq += 1

    consider(root)
    open_leaves = [root]
    n_leaves = 1
    while heap and n_leaves < params.num_leaves:
        _, _, node = heapq.heappop(heap)
        left, right = _split(builder, node, node.best, cols, features, g, h, w, params, mask_ws)
        open_leaves.remove(node)
        open_leaves.extend((left, right))
        n_leaves += 1
        consider(left)
        consider(right)
    for node in open_leaves:
        _finalize_leaf(builder, node, params)
