"""Histogram tree growth and ensemble prediction.

Each kernel exists twice: ``*_nb`` (loops, compiled by numba) and ``*_np``
(vectorised numpy). Both consume identical pre-drawn random numbers and sum
in the same order, so they grow bit-identical trees.
"""
import numpy as np

from .._accel import njit, pick

# node arrays returned by grow_tree: feature, bin, left, right, value, weight, depth


@njit
def _node_split_nb(codes, n_bins, grad, weight, rows, s, e, G, H, S2, l2, min_leaf, n_sub, random_split,
                   u_feat_row, u_thr_row, max_bins):
    m = codes.shape[1]
    best_gain = -1.0
    best_f = -1
    best_b = -1
    if n_sub < m:
        order = np.argsort(u_feat_row)
        feats = np.sort(order[:n_sub])
    else:
        feats = np.arange(m)
    hg = np.empty(max_bins)
    hh = np.empty(max_bins)
    parent = G * G / (H + l2)
    tol = 1e-12 * S2
    for fi in range(feats.shape[0]):
        f = feats[fi]
        nb = n_bins[f]
        for b in range(nb):
            hg[b] = 0.0
            hh[b] = 0.0
        for idx in range(s, e):
            r = rows[idx]
            c = codes[r, f]
            hg[c] += weight[r] * grad[r]
            hh[c] += weight[r]
        if random_split:
            lo = -1
            hi = -1
            for b in range(nb):
                if hh[b] > 0:
                    if lo < 0:
                        lo = b
                    hi = b
            if lo == hi:
                continue
            t = lo + int(u_thr_row[f] * (hi - lo))
            if t >= hi:
                t = hi - 1
            GL = 0.0
            HL = 0.0
            for b in range(t + 1):
                GL += hg[b]
                HL += hh[b]
            HR = H - HL
            if HL < min_leaf or HR < min_leaf:
                continue
            GR = G - GL
            gain = GL * GL / (HL + l2) + GR * GR / (HR + l2) - parent
            if gain > tol and gain > best_gain:
                best_gain = gain
                best_f = f
                best_b = t
        else:
            GL = 0.0
            HL = 0.0
            for b in range(nb - 1):
                GL += hg[b]
                HL += hh[b]
                if HL < min_leaf:
                    continue
                HR = H - HL
                if HR < min_leaf:
                    break
                GR = G - GL
                gain = GL * GL / (HL + l2) + GR * GR / (HR + l2) - parent
                if gain > tol and gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_b = b
    return best_gain, best_f, best_b


@njit
def _grow_tree_nb(codes, n_bins, grad, weight, max_depth, max_leaves, min_split, min_leaf, l2, n_sub,
                  random_split, u_feat, u_thr, max_nodes):
    n = codes.shape[0]
    max_bins = 1
    for f in range(n_bins.shape[0]):
        if n_bins[f] > max_bins:
            max_bins = n_bins[f]
    cnt = 0
    rows = np.empty(n, np.int64)
    for i in range(n):
        if weight[i] > 0:
            rows[cnt] = i
            cnt += 1
    rows = rows[:cnt]
    buf = np.empty(cnt, np.int64)

    feature = np.full(max_nodes, -1, np.int64)
    split_bin = np.full(max_nodes, -1, np.int64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)
    wsum = np.zeros(max_nodes)
    depth = np.zeros(max_nodes, np.int64)
    start = np.zeros(max_nodes, np.int64)
    end = np.zeros(max_nodes, np.int64)
    gsum = np.zeros(max_nodes)
    s2sum = np.zeros(max_nodes)
    cand_gain = np.full(max_nodes, -1.0)
    cand_f = np.full(max_nodes, -1, np.int64)
    cand_b = np.full(max_nodes, -1, np.int64)

    G = 0.0
    H = 0.0
    S2 = 0.0
    for idx in range(cnt):
        r = rows[idx]
        G += weight[r] * grad[r]
        H += weight[r]
        S2 += weight[r] * grad[r] * grad[r]
    gsum[0] = G
    wsum[0] = H
    s2sum[0] = S2
    value[0] = G / (H + l2) if H + l2 > 0 else 0.0
    start[0] = 0
    end[0] = cnt
    n_nodes = 1
    n_leaves = 1
    if (max_depth < 0 or max_depth > 0) and H >= min_split and H >= 2 * min_leaf and cnt > 1:
        g, f, b = _node_split_nb(codes, n_bins, grad, weight, rows, 0, cnt, G, H, S2, l2, min_leaf, n_sub,
                                 random_split, u_feat[0], u_thr[0], max_bins)
        cand_gain[0] = g
        cand_f[0] = f
        cand_b[0] = b

    while True:
        if max_leaves > 0 and n_leaves >= max_leaves:
            break
        if n_nodes + 2 > max_nodes:
            break
        k = -1
        bg = 0.0
        for j in range(n_nodes):
            if cand_f[j] >= 0 and cand_gain[j] > bg:
                bg = cand_gain[j]
                k = j
        if k < 0:
            break
        f = cand_f[k]
        b = cand_b[k]
        cand_f[k] = -1
        s = start[k]
        e = end[k]
        nl = 0
        nr = 0
        for idx in range(s, e):
            r = rows[idx]
            if codes[r, f] <= b:
                rows[s + nl] = r
                nl += 1
            else:
                buf[nr] = r
                nr += 1
        for j in range(nr):
            rows[s + nl + j] = buf[j]
        feature[k] = f
        split_bin[k] = b
        for side in range(2):
            c = n_nodes
            n_nodes += 1
            if side == 0:
                left[k] = c
                cs = s
                ce = s + nl
            else:
                right[k] = c
                cs = s + nl
                ce = e
            Gc = 0.0
            Hc = 0.0
            Sc = 0.0
            for idx in range(cs, ce):
                r = rows[idx]
                Gc += weight[r] * grad[r]
                Hc += weight[r]
                Sc += weight[r] * grad[r] * grad[r]
            gsum[c] = Gc
            wsum[c] = Hc
            s2sum[c] = Sc
            value[c] = Gc / (Hc + l2) if Hc + l2 > 0 else 0.0
            depth[c] = depth[k] + 1
            start[c] = cs
            end[c] = ce
            if (max_depth < 0 or depth[c] < max_depth) and Hc >= min_split and Hc >= 2 * min_leaf and ce - cs > 1:
                g, ff, bb = _node_split_nb(codes, n_bins, grad, weight, rows, cs, ce, Gc, Hc, Sc, l2, min_leaf,
                                           n_sub, random_split, u_feat[c], u_thr[c], max_bins)
                cand_gain[c] = g
                cand_f[c] = ff
                cand_b[c] = bb
        n_leaves += 1
    return (feature[:n_nodes], split_bin[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes],
            wsum[:n_nodes], depth[:n_nodes])


def _seqsum(a):
    # sequential left-to-right sum, matching the compiled loops bit for bit
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def _node_split_np(codes, n_bins, grad, weight, rows, G, H, S2, l2, min_leaf, n_sub, random_split, u_feat_row,
                   u_thr_row):
    m = codes.shape[1]
    if n_sub < m:
        feats = np.sort(np.argsort(u_feat_row, kind="quicksort")[:n_sub])
    else:
        feats = np.arange(m)
    parent = G * G / (H + l2)
    tol = 1e-12 * S2
    wg = weight[rows] * grad[rows]
    w = weight[rows]
    best = (-1.0, -1, -1)
    for f in feats:
        nb = int(n_bins[f])
        c = codes[rows, f]
        hg = np.bincount(c, weights=wg, minlength=nb)
        hh = np.bincount(c, weights=w, minlength=nb)
        if random_split:
            occ = np.nonzero(hh > 0)[0]
            lo, hi = int(occ[0]), int(occ[-1])
            if lo == hi:
                continue
            t = lo + int(u_thr_row[f] * (hi - lo))
            if t >= hi:
                t = hi - 1
            GL = _seqsum(hg[: t + 1])
            HL = _seqsum(hh[: t + 1])
            HR = H - HL
            if HL < min_leaf or HR < min_leaf:
                continue
            GR = G - GL
            gain = GL * GL / (HL + l2) + GR * GR / (HR + l2) - parent
            if gain > tol and gain > best[0]:
                best = (gain, int(f), t)
        else:
            if nb < 2:
                continue
            GL = np.cumsum(hg[:-1])
            HL = np.cumsum(hh[:-1])
            HR = H - HL
            ok = (HL >= min_leaf) & (HR >= min_leaf)
            # the compiled scan stops at the first bin whose right side is too light
            stop = np.nonzero((HL >= min_leaf) & (HR < min_leaf))[0]
            if stop.size:
                ok[stop[0]:] = False
            if not ok.any():
                continue
            GR = G - GL
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = GL * GL / (HL + l2) + GR * GR / (HR + l2) - parent
            gain = np.where(ok & (gain > tol), gain, -np.inf)
            b = int(np.argmax(gain))
            if gain[b] > best[0]:
                best = (float(gain[b]), int(f), b)
    return best


def _grow_tree_np(codes, n_bins, grad, weight, max_depth, max_leaves, min_split, min_leaf, l2, n_sub,
                  random_split, u_feat, u_thr, max_nodes):
    rows_all = np.nonzero(weight > 0)[0]
    feature = np.full(max_nodes, -1, np.int64)
    split_bin = np.full(max_nodes, -1, np.int64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)
    wsum = np.zeros(max_nodes)
    depth = np.zeros(max_nodes, np.int64)
    node_rows = {}
    cand = {}

    def stats(rows):
        wg = weight[rows] * grad[rows]
        return _seqsum(wg), _seqsum(weight[rows]), _seqsum(wg * grad[rows])

    def consider(k, rows, G, H, S2):
        if (max_depth < 0 or depth[k] < max_depth) and H >= min_split and H >= 2 * min_leaf and rows.size > 1:
            g, f, b = _node_split_np(codes, n_bins, grad, weight, rows, G, H, S2, l2, min_leaf, n_sub,
                                     random_split, u_feat[k], u_thr[k])
            if f >= 0:
                cand[k] = (g, f, b)

    G, H, S2 = stats(rows_all)
    wsum[0] = H
    value[0] = G / (H + l2) if H + l2 > 0 else 0.0
    node_rows[0] = rows_all
    consider(0, rows_all, G, H, S2)
    n_nodes, n_leaves = 1, 1
    while True:
        if max_leaves > 0 and n_leaves >= max_leaves:
            break
        if n_nodes + 2 > max_nodes:
            break
        k, bg = -1, 0.0
        for j in sorted(cand):
            if cand[j][0] > bg:
                bg, k = cand[j][0], j
        if k < 0:
            break
        _, f, b = cand.pop(k)
        rows = node_rows.pop(k)
        goes_left = codes[rows, f] <= b
        feature[k] = f
        split_bin[k] = b
        for side, sub in ((0, rows[goes_left]), (1, rows[~goes_left])):
            c = n_nodes
            n_nodes += 1
            if side == 0:
                left[k] = c
            else:
                right[k] = c
            Gc, Hc, Sc = stats(sub)
            wsum[c] = Hc
            value[c] = Gc / (Hc + l2) if Hc + l2 > 0 else 0.0
            depth[c] = depth[k] + 1
            node_rows[c] = sub
            consider(c, sub, Gc, Hc, Sc)
        n_leaves += 1
    return (feature[:n_nodes], split_bin[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes],
            wsum[:n_nodes], depth[:n_nodes])


@njit
def _predict_nb(X, feature, threshold, left, right, value, roots, tree_weights, init):
    n = X.shape[0]
    out = np.full(n, init)
    for t in range(roots.shape[0]):
        w = tree_weights[t]
        for i in range(n):
            node = roots[t]
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] += w * value[node]
    return out


def _predict_np(X, feature, threshold, left, right, value, roots, tree_weights, init):
    n = X.shape[0]
    out = np.full(n, init)
    ar = np.arange(n)
    for t in range(roots.shape[0]):
        node = np.full(n, roots[t], dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            idx = ar[active]
            nd = node[idx]
            go_left = X[idx, feature[nd]] <= threshold[nd]
            node[idx] = np.where(go_left, left[nd], right[nd])
            active = feature[node] >= 0
        out += tree_weights[t] * value[node]
    return out


grow_tree = pick(_grow_tree_nb, _grow_tree_np)
predict_ensemble = pick(_predict_nb, _predict_np)
