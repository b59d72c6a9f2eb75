"""Pure-Python forest backend.

Reference implementation of the tree-building and voting kernels. Produces
trees structurally identical to the compiled backend: same node numbering,
same splits, same thresholds. Sample weights are integer-valued, so every
accumulated sum is exact and order-independent, which is what makes the two
backends agree bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from .rng import SplitMix64, shuffled_feature_order

LEAF = -1


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    seed: int,
    max_features: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Grow one unpruned Gini tree over weighted unique rows.

    Returns flat preorder arrays (feature, threshold, left, right, label);
    feature == -1 marks a leaf. At each node a fresh random subset of
    `max_features` indices is tried first; if none of them yields an
    impurity-reducing split and the node is impure, the remaining features
    are tried one at a time and the first improvement is taken.
    """
    n, d = X.shape
    rng = SplitMix64(seed)
    cap = 2 * n + 1
    feature = np.full(cap, LEAF, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, LEAF, dtype=np.int32)
    right = np.full(cap, LEAF, dtype=np.int32)
    label = np.zeros(cap, dtype=np.int8)
    n_nodes = 0

    indices = list(range(n))
    wpos = [w[i] if y[i] == 1 else 0.0 for i in range(n)]
    wneg = [w[i] if y[i] == 0 else 0.0 for i in range(n)]

    # stack entries: (start, end, parent, is_left); left child pushed last
    stack: list[tuple[int, int, int, bool]] = [(0, n, -1, False)]
    while stack:
        start, end, parent, is_left = stack.pop()
        idx = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left:
                left[parent] = idx
            else:
                right[parent] = idx

        wp = 0.0
        wn = 0.0
        for k in range(start, end):
            wp += wpos[indices[k]]
            wn += wneg[indices[k]]

        if wn == 0.0 or wp == 0.0:
            label[idx] = 1 if wn == 0.0 else 0
            continue

        perm = shuffled_feature_order(rng, d)
        total = wp + wn
        best_good = (wp * wp + wn * wn) / total
        best_f = -1
        best_thr = 0.0
        for pi in range(d):
            if pi >= max_features and best_f >= 0:
                break
            f = perm[pi]
            rows = indices[start:end]
            order = sorted(rows, key=lambda i: X[i, f])
            vals = [X[i, f] for i in order]
            if vals[0] == vals[-1]:
                continue
            cum_p = 0.0
            cum_n = 0.0
            k = 0
            c = len(order)
            prev_v = vals[0]
            while k < c:
                v = vals[k]
                if v != prev_v:
                    wl = cum_p + cum_n
                    rp = wp - cum_p
                    rn = wn - cum_n
                    wr = rp + rn
                    good = (cum_p * cum_p + cum_n * cum_n) / wl + (rp * rp + rn * rn) / wr
                    if good > best_good:
                        best_good = good
                        best_f = f
                        thr = (prev_v + v) * 0.5
                        if not thr < v:
                            thr = prev_v
                        best_thr = thr
                    prev_v = v
                cum_p += wpos[order[k]]
                cum_n += wneg[order[k]]
                k += 1

        if best_f < 0:
            label[idx] = 1 if wp > wn else 0
            continue

        lefts = [i for i in indices[start:end] if X[i, best_f] <= best_thr]
        rights = [i for i in indices[start:end] if not X[i, best_f] <= best_thr]
        indices[start : start + len(lefts)] = lefts
        indices[start + len(lefts) : end] = rights
        mid = start + len(lefts)
        feature[idx] = best_f
        threshold[idx] = best_thr
        stack.append((mid, end, idx, False))
        stack.append((start, mid, idx, True))

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        label[:n_nodes].copy(),
    )


def predict_votes(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    label: np.ndarray,
    roots: np.ndarray,
    X: np.ndarray,
) -> np.ndarray:
    """Positive votes per row over a flattened forest (vectorized descent)."""
    n = X.shape[0]
    votes = np.zeros(n, dtype=np.int32)
    row_ids = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        active = feature[node] >= 0
        while np.any(active):
            idx = node[active]
            go_left = X[row_ids[active], feature[idx]] <= threshold[idx]
            node[active] = np.where(go_left, left[idx], right[idx])
            active = feature[node] >= 0
        votes += label[node].astype(np.int32)
    return votes
