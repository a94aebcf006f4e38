"""Independent reference implementations used by the test-suite."""
import itertools
import math

import numpy as np


def brute_force_shap(predict, x, background):
    """Interventional Shapley values by enumerating every feature subset."""
    d = x.shape[0]
    bg = np.asarray(background, dtype=np.float64)
    cache = {}

    def v(S):
        key = tuple(sorted(S))
        if key not in cache:
            H = bg.copy()
            if key:
                H[:, list(key)] = x[list(key)]
            cache[key] = float(np.mean(predict(H)))
        return cache[key]

    phi = np.zeros(d)
    for i in range(d):
        others = [j for j in range(d) if j != i]
        for r in range(d):
            w = math.factorial(r) * math.factorial(d - r - 1) / math.factorial(d)
            for S in itertools.combinations(others, r):
                phi[i] += w * (v(S + (i,)) - v(S))
    return phi


def vif_normal_equations(X):
    """VIF_i from centred normal equations, solved with an explicit inverse."""
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    out = []
    for i in range(X.shape[1]):
        y = Xc[:, i]
        A = np.delete(Xc, i, axis=1)
        beta = np.linalg.inv(A.T @ A) @ (A.T @ y)
        r = y - A @ beta
        r2 = 1.0 - (r @ r) / (y @ y)
        out.append(1.0 / (1.0 - r2))
    return np.array(out)


def random_tree_ensemble(rng, d=4, max_leaves=12, max_trees=3):
    """Random trees with thresholds drawn from a small grid, so ties with data occur."""
    from fatigue_automl.learners.trees import TreeEnsemble

    trees = []
    for _ in range(int(rng.integers(1, max_trees + 1))):
        n_leaves = int(rng.integers(1, max_leaves + 1))
        feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [float(rng.normal())]
        leaves = [0]
        while len(leaves) < n_leaves:
            k = leaves.pop(int(rng.integers(len(leaves))))
            feature[k] = int(rng.integers(d))
            threshold[k] = float(rng.integers(-4, 5)) / 2.0
            for side in (left, right):
                side[k] = len(feature)
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(float(rng.normal()))
                leaves.append(len(feature) - 1)
        trees.append({"feature": np.array(feature), "threshold": np.array(threshold), "left": np.array(left),
                      "right": np.array(right), "value": np.array(value), "cover": np.ones(len(feature))})
    return TreeEnsemble.concat(trees, rng.uniform(0.2, 1.5, len(trees)), float(rng.normal()))
