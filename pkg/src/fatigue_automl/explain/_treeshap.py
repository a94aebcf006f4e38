"""Exact interventional TreeSHAP against a background set.

For one explained row ``x`` and one background row ``z`` the hybrid input
taking features in ``S`` from ``x`` and the rest from ``z`` reaches a leaf
iff every feature in ``A`` (path features where only ``x`` satisfies the
split conditions) is in ``S`` and no feature of ``B`` (only ``z``
satisfies them) is. Summing the Shapley weights over all such ``S`` gives,
per leaf value ``v``::

    phi_i += v / (|A| * C(|A|+|B|, |A|))    for i in A
    phi_i -= v / (|B| * C(|A|+|B|, |B|))    for i in B

The numba kernel walks the tree once per (x, z) pair, splitting the walk
where x and z disagree on a feature not yet fixed. The numpy kernel
enumerates leaves as boxes and evaluates all pairs at once per leaf.
"""
import numpy as np

from .._accel import njit, pick


def shapley_coef_table(d):
    """``T[a, b] = 1 / (a * C(a + b, a))`` for ``a >= 1``; zero elsewhere."""
    T = np.zeros((d + 2, d + 2))
    for a in range(1, d + 2):
        for b in range(0, d + 2):
            c = 1.0
            for k in range(1, a + 1):
                c = c * (b + k) / k
            T[a, b] = 1.0 / (a * c)
    return T


@njit
def _shap_nb(X, Z, feature, threshold, left, right, value, roots, tree_weights, coef, d):
    nx = X.shape[0]
    nz = Z.shape[0]
    n_nodes = feature.shape[0]
    phi = np.zeros((nx, d))
    state = np.zeros(d, np.int64)
    path = np.empty(d + 1, np.int64)
    st_node = np.empty(n_nodes + 2, np.int64)
    st_plen = np.empty(n_nodes + 2, np.int64)
    st_feat = np.empty(n_nodes + 2, np.int64)
    st_kind = np.empty(n_nodes + 2, np.int64)
    for t in range(roots.shape[0]):
        w = tree_weights[t] / nz
        for i in range(nx):
            for j in range(nz):
                plen = 0
                na = 0
                nb = 0
                top = 0
                st_node[0] = roots[t]
                st_plen[0] = 0
                st_feat[0] = -1
                st_kind[0] = 0
                top = 1
                while top > 0:
                    top -= 1
                    node = st_node[top]
                    while plen > st_plen[top]:
                        plen -= 1
                        f = path[plen]
                        if state[f] == 1:
                            na -= 1
                        else:
                            nb -= 1
                        state[f] = 0
                    f = st_feat[top]
                    if f >= 0:
                        state[f] = st_kind[top]
                        path[plen] = f
                        plen += 1
                        if st_kind[top] == 1:
                            na += 1
                        else:
                            nb += 1
                    f = feature[node]
                    if f < 0:
                        v = w * value[node]
                        for k in range(plen):
                            g = path[k]
                            if state[g] == 1:
                                phi[i, g] += v * coef[na, nb]
                            else:
                                phi[i, g] -= v * coef[nb, na]
                        continue
                    thr = threshold[node]
                    xl = X[i, f] <= thr
                    zl = Z[j, f] <= thr
                    if state[f] == 1:
                        st_node[top] = left[node] if xl else right[node]
                        st_plen[top] = plen
                        st_feat[top] = -1
                        top += 1
                    elif state[f] == 2:
                        st_node[top] = left[node] if zl else right[node]
                        st_plen[top] = plen
                        st_feat[top] = -1
                        top += 1
                    elif xl == zl:
                        st_node[top] = left[node] if xl else right[node]
                        st_plen[top] = plen
                        st_feat[top] = -1
                        top += 1
                    else:
                        st_node[top] = left[node] if xl else right[node]
                        st_plen[top] = plen
                        st_feat[top] = f
                        st_kind[top] = 1
                        top += 1
                        st_node[top] = left[node] if zl else right[node]
                        st_plen[top] = plen
                        st_feat[top] = f
                        st_kind[top] = 2
                        top += 1
                while plen > 0:
                    plen -= 1
                    state[path[plen]] = 0
    return phi


def _leaf_boxes(feature, threshold, left, right, value, root):
    """Leaves of one tree as ``(value, [(feature, lo, hi)])`` meaning ``lo < x_f <= hi``."""
    out = []
    stack = [(root, {})]
    while stack:
        node, box = stack.pop()
        f = feature[node]
        if f < 0:
            out.append((value[node], [(g, lo, hi) for g, (lo, hi) in sorted(box.items())]))
            continue
        lo, hi = box.get(f, (-np.inf, np.inf))
        thr = threshold[node]
        lb = dict(box)
        lb[f] = (lo, min(hi, thr))
        rb = dict(box)
        rb[f] = (max(lo, thr), hi)
        stack.append((right[node], rb))
        stack.append((left[node], lb))
    return out


def _shap_np(X, Z, feature, threshold, left, right, value, roots, tree_weights, coef, d):
    nx, nz = X.shape[0], Z.shape[0]
    phi = np.zeros((nx, d))
    for t in range(len(roots)):
        w = tree_weights[t] / nz
        for v, box in _leaf_boxes(feature, threshold, left, right, value, roots[t]):
            if not box:
                continue
            fs = np.array([b[0] for b in box])
            lo = np.array([b[1] for b in box])
            hi = np.array([b[2] for b in box])
            sx = (X[:, fs] > lo) & (X[:, fs] <= hi)
            sz = (Z[:, fs] > lo) & (Z[:, fs] <= hi)
            inA = sx[:, None, :] & ~sz[None, :, :]
            inB = ~sx[:, None, :] & sz[None, :, :]
            reach = np.all(sx[:, None, :] | sz[None, :, :], axis=2)
            na = inA.sum(axis=2)
            nb = inB.sum(axis=2)
            ca = np.where(reach, w * v * coef[na, nb], 0.0)
            cb = np.where(reach, w * v * coef[nb, na], 0.0)
            contrib = inA * ca[:, :, None] - inB * cb[:, :, None]
            phi[:, fs] += contrib.sum(axis=1)
    return phi


tree_shap = pick(_shap_nb, _shap_np)
