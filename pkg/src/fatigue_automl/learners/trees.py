"""CART, random forest, extra trees and gradient-boosted trees on binned features."""
from __future__ import annotations

import numpy as np

from .._rng import derive_rng
from ._kernels import grow_tree, predict_ensemble

MAX_BINS = 255


def fit_bins(X, max_bins=MAX_BINS):
    """Per-feature split thresholds.

    With at most ``max_bins`` distinct values every midpoint is a threshold;
    otherwise thresholds sit at midpoints between training quantiles.
    """
    edges = []
    for j in range(X.shape[1]):
        u = np.unique(X[:, j])
        if u.size <= max_bins:
            e = 0.5 * (u[1:] + u[:-1])
        else:
            q = np.quantile(X[:, j], np.linspace(0.0, 1.0, max_bins + 1))
            q = np.unique(q)
            e = np.unique(0.5 * (q[1:] + q[:-1]))
            e = e[(e > u[0]) & (e < u[-1])] if e.size else e
        edges.append(np.asarray(e, dtype=np.float64))
    return edges


def bin_codes(X, edges):
    codes = np.empty(X.shape, dtype=np.int64)
    for j, e in enumerate(edges):
        codes[:, j] = np.searchsorted(e, X[:, j], side="left")
    return np.ascontiguousarray(codes)


class TreeEnsemble:
    """Flat node arrays for one or more trees.

    ``predict(x) = init + sum_t tree_weights[t] * leaf_value_t(x)``; a node
    routes left when ``x[feature] <= threshold``; leaves have feature -1.
    """

    def __init__(self, feature, threshold, left, right, value, roots, tree_weights, init=0.0, cover=None):
        self.feature = np.ascontiguousarray(feature, dtype=np.int64)
        self.threshold = np.ascontiguousarray(threshold, dtype=np.float64)
        self.left = np.ascontiguousarray(left, dtype=np.int64)
        self.right = np.ascontiguousarray(right, dtype=np.int64)
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.roots = np.ascontiguousarray(roots, dtype=np.int64)
        self.tree_weights = np.ascontiguousarray(tree_weights, dtype=np.float64)
        self.init = float(init)
        self.cover = None if cover is None else np.ascontiguousarray(cover, dtype=np.float64)

    @property
    def n_trees(self):
        return len(self.roots)

    def predict(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        return predict_ensemble(X, self.feature, self.threshold, self.left, self.right, self.value, self.roots,
                                self.tree_weights, self.init)

    def truncate(self, n_trees):
        """Keep the first ``n_trees`` trees (boosting stages)."""
        if n_trees >= self.n_trees:
            return self
        stop = self.roots[n_trees]
        return TreeEnsemble(self.feature[:stop], self.threshold[:stop], self.left[:stop], self.right[:stop],
                            self.value[:stop], self.roots[:n_trees], self.tree_weights[:n_trees], self.init,
                            None if self.cover is None else self.cover[:stop])

    def used_features(self):
        return sorted(set(int(f) for f in self.feature if f >= 0))

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "roots": self.roots.tolist(),
            "tree_weights": self.tree_weights.tolist(),
            "init": self.init,
            "cover": None if self.cover is None else self.cover.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"], d["roots"], d["tree_weights"],
                   d["init"], d.get("cover"))

    @classmethod
    def concat(cls, trees, tree_weights, init=0.0):
        feats, thr, lft, rgt, val, cov, roots = [], [], [], [], [], [], []
        offset = 0
        for t in trees:
            feats.append(t["feature"])
            thr.append(t["threshold"])
            lft.append(np.where(t["left"] >= 0, t["left"] + offset, -1))
            rgt.append(np.where(t["right"] >= 0, t["right"] + offset, -1))
            val.append(t["value"])
            cov.append(t["cover"])
            roots.append(offset)
            offset += len(t["feature"])
        cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))  # noqa: E731
        return cls(cat(feats, np.int64), cat(thr, np.float64), cat(lft, np.int64), cat(rgt, np.int64),
                   cat(val, np.float64), np.asarray(roots, np.int64), tree_weights, init, cat(cov, np.float64))


def _max_nodes(n_rows, max_depth, max_leaves):
    cap = 2 * max(n_rows, 1) - 1
    if max_depth is not None and max_depth >= 0:
        cap = min(cap, 2 ** (max_depth + 1) - 1)
    if max_leaves is not None and max_leaves > 0:
        cap = min(cap, 2 * max_leaves - 1)
    return max(cap, 1)


def build_tree(codes, edges, grad, weight, rng, *, max_depth=-1, max_leaves=-1, min_samples_split=2,
               min_samples_leaf=1, l2=0.0, max_features=None, random_split=False):
    """Grow one tree on binned data; returns a dict of node arrays with real thresholds."""
    n, m = codes.shape
    n_bins = np.array([len(e) + 1 for e in edges], dtype=np.int64)
    n_sub = m if max_features is None else max(1, min(m, int(max_features * m)))
    max_nodes = _max_nodes(int(np.count_nonzero(weight)), max_depth, max_leaves)
    u_feat = rng.random((max_nodes, m)) if n_sub < m else np.zeros((max_nodes, m))
    u_thr = rng.random((max_nodes, m)) if random_split else np.zeros((max_nodes, m))
    feature, sbin, left, right, value, wsum, _depth = grow_tree(
        codes, n_bins, np.ascontiguousarray(grad, np.float64), np.ascontiguousarray(weight, np.float64),
        int(-1 if max_depth is None else max_depth), int(-1 if max_leaves is None else max_leaves),
        float(min_samples_split), float(min_samples_leaf), float(l2), int(n_sub), bool(random_split),
        u_feat, u_thr, int(max_nodes))
    threshold = np.zeros(len(feature))
    for k in np.nonzero(feature >= 0)[0]:
        threshold[k] = edges[feature[k]][sbin[k]]
    return {"feature": np.asarray(feature), "threshold": threshold, "left": np.asarray(left),
            "right": np.asarray(right), "value": np.asarray(value), "cover": np.asarray(wsum)}


def fit_cart(X, y, seed, max_depth=-1, min_samples_leaf=1, min_samples_split=2, max_bins=MAX_BINS):
    edges = fit_bins(X, max_bins)
    codes = bin_codes(X, edges)
    rng = derive_rng(seed, "cart")
    t = build_tree(codes, edges, y, np.ones(len(y)), rng, max_depth=max_depth,
                   min_samples_leaf=min_samples_leaf, min_samples_split=min_samples_split)
    return TreeEnsemble.concat([t], np.array([1.0]))


def _forest_tree(codes, edges, y, seed, b, bootstrap, max_depth, min_samples_split, min_samples_leaf,
                 max_features, random_split):
    rng = derive_rng(seed, "tree", b)
    n = len(y)
    if bootstrap:
        weight = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
    else:
        weight = np.ones(n)
    return build_tree(codes, edges, y, weight, rng, max_depth=max_depth, min_samples_split=min_samples_split,
                      min_samples_leaf=min_samples_leaf, max_features=max_features, random_split=random_split)


def fit_forest(X, y, seed, *, n_estimators=100, max_depth=-1, min_samples_split=2, min_samples_leaf=1,
               max_features=1.0, extra=False, max_bins=MAX_BINS, executor=None):
    """Random forest (bootstrap, best splits) or extra trees (full sample, random thresholds).

    Each tree draws from its own stream keyed by tree index, so a thread pool
    passed as ``executor`` yields the same forest as a serial build.
    """
    edges = fit_bins(X, max_bins)
    codes = bin_codes(X, edges)
    args = (codes, edges, y, seed)
    kw = dict(bootstrap=not extra, max_depth=max_depth, min_samples_split=min_samples_split,
              min_samples_leaf=min_samples_leaf, max_features=max_features, random_split=extra)

    def one(b):
        return _forest_tree(*args, b, kw["bootstrap"], kw["max_depth"], kw["min_samples_split"],
                            kw["min_samples_leaf"], kw["max_features"], kw["random_split"])

    if executor is None:
        trees = [one(b) for b in range(n_estimators)]
    else:
        trees = list(executor.map(one, range(n_estimators)))
    return TreeEnsemble.concat(trees, np.full(n_estimators, 1.0 / n_estimators))


def _rmse(a, b):
    return float(np.sqrt(np.mean((a - b) ** 2)))


def fit_gbdt(X, y, seed, *, n_estimators=100, learning_rate=0.1, max_depth=3, max_leaves=-1,
             min_samples_leaf=1, min_child_weight=0.0, subsample=1.0, colsample=None, reg_lambda=1.0,
             early_stopping_rounds=50, validation=None, max_bins=MAX_BINS):
    """Squared-loss boosting: init at the mean, then shrunken trees on residuals.

    Returns ``(ensemble, log, best_iteration)``. With ``validation`` the model
    is cut back to the stage with the lowest validation RMSE once
    ``early_stopping_rounds`` stages pass without improvement.
    """
    edges = fit_bins(X, max_bins)
    codes = bin_codes(X, edges)
    n = len(y)
    init = float(np.mean(y))
    F = np.full(n, init)
    Fv = None
    if validation is not None:
        Xv, yv = validation
        Xv = np.ascontiguousarray(Xv, dtype=np.float64)
        Fv = np.full(len(yv), init)
    min_leaf = max(float(min_samples_leaf), float(min_child_weight))
    trees, log = [], []
    best_val, best_it, since = np.inf, 0, 0
    for it in range(1, n_estimators + 1):
        rng = derive_rng(seed, "stage", it)
        if subsample < 1.0:
            weight = (rng.random(n) < subsample).astype(np.float64)
            if weight.sum() < 2:
                weight[:] = 1.0
        else:
            weight = np.ones(n)
        resid = y - F
        t = build_tree(codes, edges, resid, weight, rng, max_depth=max_depth, max_leaves=max_leaves,
                       min_samples_split=2 * min_leaf, min_samples_leaf=min_leaf, l2=reg_lambda,
                       max_features=colsample)
        trees.append(t)
        single = TreeEnsemble.concat([t], np.array([learning_rate]))
        F = F + single.predict(X)
        rec = {"iteration": it, "train_rmse": _rmse(y, F), "valid_rmse": None}
        if Fv is not None:
            Fv = Fv + single.predict(Xv)
            v = _rmse(yv, Fv)
            rec["valid_rmse"] = v
            if v < best_val:
                best_val, best_it, since = v, it, 0
            else:
                since += 1
        log.append(rec)
        if Fv is not None and early_stopping_rounds and since >= early_stopping_rounds:
            break
    if Fv is None:
        best_it = len(trees)
    ens = TreeEnsemble.concat(trees[:best_it], np.full(best_it, float(learning_rate)), init)
    return ens, log, best_it
