# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled forest kernels: unpruned Gini tree growth and batch voting.

Mirrors python_backend exactly — same SplitMix64 stream, same node numbering,
same float expressions. Sample weights are integer-valued doubles, so every
accumulated sum is exact and the two backends emit identical trees.

Each feature is argsorted once per tree; node splits stable-partition the
per-feature orderings, so no sorting happens inside a node and constant
features are skipped in O(1).
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()

ctypedef unsigned long long u64

BACKEND_NAME = "cython"


cdef inline u64 _mix64(u64 z) nogil:
    z ^= z >> 30
    z = z * <u64>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z = z * <u64>0x94D049BB133111EB
    z ^= z >> 31
    return z


cdef inline u64 _next_u64(u64* state) nogil:
    state[0] = state[0] + <u64>0x9E3779B97F4A7C15
    return _mix64(state[0])


def build_tree(double[:, ::1] X, signed char[:] y, double[:] w, seed, int max_features):
    """Grow one unpruned tree; returns (feature, threshold, left, right, label)."""
    cdef int n = X.shape[0]
    cdef int d = X.shape[1]
    if n <= 0:
        raise ValueError("empty sample")
    if max_features < 1:
        raise ValueError("max_features must be >= 1")

    cdef u64 state = <u64> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef int cap = 2 * n + 1

    # per-feature row orderings, partitioned in place as the tree grows
    sidx_arr = np.ascontiguousarray(np.argsort(X, axis=0, kind="quicksort").T, dtype=np.int32)
    cdef int[:, ::1] sidx = sidx_arr

    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    label_arr = np.zeros(cap, dtype=np.int8)
    cdef int[:] feature = feature_arr
    cdef double[:] threshold = threshold_arr
    cdef int[:] left = left_arr
    cdef int[:] right = right_arr
    cdef signed char[:] label = label_arr

    cdef int* scratch = <int*> malloc(n * sizeof(int))
    cdef double* wpos = <double*> malloc(n * sizeof(double))
    cdef double* wneg = <double*> malloc(n * sizeof(double))
    cdef char* mask = <char*> malloc(n * sizeof(char))
    cdef int* perm = <int*> malloc(d * sizeof(int))
    cdef int stack_cap = 2 * n + 8
    cdef int* s_start = <int*> malloc(stack_cap * sizeof(int))
    cdef int* s_end = <int*> malloc(stack_cap * sizeof(int))
    cdef int* s_parent = <int*> malloc(stack_cap * sizeof(int))
    cdef int* s_isleft = <int*> malloc(stack_cap * sizeof(int))
    if (scratch == NULL or wpos == NULL or wneg == NULL or mask == NULL or perm == NULL
            or s_start == NULL or s_end == NULL or s_parent == NULL or s_isleft == NULL):
        free(scratch); free(wpos); free(wneg); free(mask); free(perm)
        free(s_start); free(s_end); free(s_parent); free(s_isleft)
        raise MemoryError()

    cdef int n_nodes = 0
    cdef int top, start, end, parent, is_left, idx, i, j, k, pi, f, row, mid, nl, a, b
    cdef int best_f
    cdef double wp, wn, total, best_good, best_thr
    cdef double cum_p, cum_n, wl, wr, rp, rn, good, v, prev_v, thr
    cdef u64 r

    with nogil:
        for i in range(n):
            if y[i] == 1:
                wpos[i] = w[i]
                wneg[i] = 0.0
            else:
                wpos[i] = 0.0
                wneg[i] = w[i]

        s_start[0] = 0; s_end[0] = n; s_parent[0] = -1; s_isleft[0] = 0
        top = 1
        while top > 0:
            top -= 1
            start = s_start[top]; end = s_end[top]
            parent = s_parent[top]; is_left = s_isleft[top]
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
                row = sidx[0, k]
                wp += wpos[row]
                wn += wneg[row]

            if wn == 0.0 or wp == 0.0:
                label[idx] = 1 if wn == 0.0 else 0
                continue

            for i in range(d):
                perm[i] = i
            for i in range(d - 1, 0, -1):
                r = _next_u64(&state)
                j = <int> (r % <u64> (i + 1))
                k = perm[i]; perm[i] = perm[j]; perm[j] = k

            total = wp + wn
            best_good = (wp * wp + wn * wn) / total
            best_f = -1
            best_thr = 0.0
            for pi in range(d):
                if pi >= max_features and best_f >= 0:
                    break
                f = perm[pi]
                if X[sidx[f, start], f] == X[sidx[f, end - 1], f]:
                    continue
                cum_p = 0.0
                cum_n = 0.0
                prev_v = X[sidx[f, start], f]
                for k in range(start, end):
                    row = sidx[f, k]
                    v = X[row, f]
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
                    cum_p += wpos[row]
                    cum_n += wneg[row]

            if best_f < 0:
                label[idx] = 1 if wp > wn else 0
                continue

            nl = 0
            for k in range(start, end):
                row = sidx[0, k]
                if X[row, best_f] <= best_thr:
                    mask[row] = 1
                    nl += 1
                else:
                    mask[row] = 0
            for f in range(d):
                a = 0
                b = nl
                for k in range(start, end):
                    row = sidx[f, k]
                    if mask[row]:
                        scratch[a] = row
                        a += 1
                    else:
                        scratch[b] = row
                        b += 1
                for k in range(end - start):
                    sidx[f, start + k] = scratch[k]
            mid = start + nl
            feature[idx] = best_f
            threshold[idx] = best_thr
            s_start[top] = mid; s_end[top] = end; s_parent[top] = idx; s_isleft[top] = 0
            top += 1
            s_start[top] = start; s_end[top] = mid; s_parent[top] = idx; s_isleft[top] = 1
            top += 1

    free(scratch); free(wpos); free(wneg); free(mask); free(perm)
    free(s_start); free(s_end); free(s_parent); free(s_isleft)

    return (
        feature_arr[:n_nodes].copy(),
        threshold_arr[:n_nodes].copy(),
        left_arr[:n_nodes].copy(),
        right_arr[:n_nodes].copy(),
        label_arr[:n_nodes].copy(),
    )


def predict_votes(
    int[:] feature,
    double[:] threshold,
    int[:] left,
    int[:] right,
    signed char[:] label,
    int[:] roots,
    double[:, ::1] X,
):
    """Positive votes per row of X over a flattened forest."""
    cdef int n = X.shape[0]
    cdef int n_trees = roots.shape[0]
    votes_arr = np.zeros(n, dtype=np.int32)
    cdef int[:] votes = votes_arr
    cdef int r, t, node, acc
    with nogil:
        for r in range(n):
            acc = 0
            for t in range(n_trees):
                node = roots[t]
                while feature[node] >= 0:
                    if X[r, feature[node]] <= threshold[node]:
                        node = left[node]
                    else:
                        node = right[node]
                acc += label[node]
            votes[r] = acc
    return votes_arr
