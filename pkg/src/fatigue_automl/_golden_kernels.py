"""Single-feature depth-limited regression tree scoring for golden-feature candidates.

A tree on one feature partitions the sorted training values into contiguous
runs, so growth is a split search over prefix sums. Both implementations
accumulate sums sequentially and visit nodes in the same order, so they
return bit-identical scores.
"""
import numpy as np

from ._accel import njit, pick


@njit
def _score_one_nb(xt, yt, xs, ys, max_depth, min_leaf):
    n = xt.shape[0]
    order = np.argsort(xt, kind="mergesort")
    sx = xt[order]
    sy = yt[order]
    cs = np.empty(n + 1)
    cs[0] = 0.0
    for i in range(n):
        cs[i + 1] = cs[i] + sy[i]
    # leaves as (lo, hi) runs; cuts between consecutive leaves
    max_leaves = 2 ** max_depth
    lo_stack = np.empty(2 * max_leaves, np.int64)
    hi_stack = np.empty(2 * max_leaves, np.int64)
    d_stack = np.empty(2 * max_leaves, np.int64)
    leaf_lo = np.empty(max_leaves, np.int64)
    leaf_hi = np.empty(max_leaves, np.int64)
    n_leaf = 0
    top = 0
    lo_stack[0] = 0
    hi_stack[0] = n
    d_stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        lo = lo_stack[top]
        hi = hi_stack[top]
        d = d_stack[top]
        best = -1
        if d < max_depth and hi - lo >= 2 * min_leaf and sx[lo] < sx[hi - 1]:
            tot = cs[hi] - cs[lo]
            cnt = hi - lo
            best_crit = -np.inf
            for p in range(lo + min_leaf, hi - min_leaf + 1):
                if sx[p - 1] < sx[p]:
                    sl = cs[p] - cs[lo]
                    sr = tot - sl
                    crit = sl * sl / (p - lo) + sr * sr / (cnt - (p - lo))
                    if crit > best_crit:
                        best_crit = crit
                        best = p
        if best < 0:
            leaf_lo[n_leaf] = lo
            leaf_hi[n_leaf] = hi
            n_leaf += 1
        else:
            # push right first so the left run is emitted first
            lo_stack[top] = best
            hi_stack[top] = hi
            d_stack[top] = d + 1
            top += 1
            lo_stack[top] = lo
            hi_stack[top] = best
            d_stack[top] = d + 1
            top += 1
    cuts = np.empty(n_leaf - 1)
    vals = np.empty(n_leaf)
    for k in range(n_leaf):
        a = leaf_lo[k]
        b = leaf_hi[k]
        vals[k] = (cs[b] - cs[a]) / (b - a)
        if k > 0:
            cuts[k - 1] = 0.5 * (sx[a - 1] + sx[a])
    leaf = np.searchsorted(cuts, xs)
    acc = 0.0
    for i in range(xs.shape[0]):
        r = ys[i] - vals[leaf[i]]
        acc += r * r
    return acc / xs.shape[0]


@njit
def _score_all_nb(Ct, yt, Cs, ys, max_depth, min_leaf):
    k = Ct.shape[1]
    out = np.empty(k)
    for j in range(k):
        out[j] = _score_one_nb(np.ascontiguousarray(Ct[:, j]), yt, np.ascontiguousarray(Cs[:, j]), ys,
                               max_depth, min_leaf)
    return out


def _score_one_np(xt, yt, xs, ys, max_depth, min_leaf):
    order = np.argsort(xt, kind="mergesort")
    sx = xt[order]
    sy = yt[order]
    cs = np.concatenate(([0.0], np.cumsum(sy)))
    leaves = []
    stack = [(0, len(sx), 0)]
    while stack:
        lo, hi, d = stack.pop()
        best = -1
        if d < max_depth and hi - lo >= 2 * min_leaf and sx[lo] < sx[hi - 1]:
            p = np.arange(lo + min_leaf, hi - min_leaf + 1)
            ok = sx[p - 1] < sx[p]
            p = p[ok]
            if p.size:
                tot = cs[hi] - cs[lo]
                sl = cs[p] - cs[lo]
                sr = tot - sl
                crit = sl * sl / (p - lo) + sr * sr / ((hi - lo) - (p - lo))
                best = int(p[int(np.argmax(crit))])
        if best < 0:
            leaves.append((lo, hi))
        else:
            stack.append((best, hi, d + 1))
            stack.append((lo, best, d + 1))
    vals = np.array([(cs[b] - cs[a]) / (b - a) for a, b in leaves])
    cuts = np.array([0.5 * (sx[a - 1] + sx[a]) for a, _ in leaves[1:]])
    r = ys - vals[np.searchsorted(cuts, xs)]
    return np.cumsum(r * r)[-1] / len(xs)


def _score_all_np(Ct, yt, Cs, ys, max_depth, min_leaf):
    return np.array([_score_one_np(Ct[:, j], yt, Cs[:, j], ys, max_depth, min_leaf) for j in range(Ct.shape[1])])


score_candidates = pick(_score_all_nb, _score_all_np)
