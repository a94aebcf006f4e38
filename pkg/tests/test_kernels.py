"""The numba kernels and their numpy twins must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from fatigue_automl._golden_kernels import _score_all_nb, _score_all_np
from fatigue_automl.explain._treeshap import _shap_nb, _shap_np, shapley_coef_table
from fatigue_automl.learners._kernels import _grow_tree_nb, _grow_tree_np, _predict_nb, _predict_np
from fatigue_automl.learners.trees import _max_nodes, bin_codes, fit_bins, fit_forest

from .oracles import random_tree_ensemble


def grow_args(rng, n=300, m=5, depth=6, leaves=-1, random_split=False, n_sub=None):
    X = rng.normal(size=(n, m))
    X[:, 1] = np.round(X[:, 1])  # ties
    y = X[:, 0] + np.sin(X[:, 2]) + 0.1 * rng.normal(size=n)
    edges = fit_bins(X)
    codes = bin_codes(X, edges)
    n_bins = np.array([len(e) + 1 for e in edges], dtype=np.int64)
    mx = _max_nodes(n, depth, leaves)
    u1 = rng.random((mx, m))
    u2 = rng.random((mx, m))
    w = (rng.random(n) < 0.8).astype(float)
    return (codes, n_bins, y, w, depth, leaves, 2.0, 1.0, 0.5, n_sub or m, random_split, u1, u2, mx)


@pytest.mark.parametrize("depth,leaves,random_split,n_sub", [(6, -1, False, None), (-1, 15, False, None),
                                                             (5, -1, True, None), (8, -1, False, 3)])
def test_grow_tree_bit_identical(depth, leaves, random_split, n_sub):
    rng = np.random.default_rng(abs(depth) + 100 * abs(leaves))
    args = grow_args(rng, depth=depth, leaves=leaves, random_split=random_split, n_sub=n_sub)
    a = _grow_tree_nb(*args)
    b = _grow_tree_np(*args)
    for p, q in zip(a, b):
        assert np.array_equal(p, q)


def test_predict_identical():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 4))
    ens = fit_forest(X, X[:, 0] * X[:, 1], 0, n_estimators=5, max_depth=5)
    args = (X, ens.feature, ens.threshold, ens.left, ens.right, ens.value, ens.roots, ens.tree_weights, ens.init)
    assert np.array_equal(_predict_nb(*args), _predict_np(*args))


def test_tree_shap_agrees():
    rng = np.random.default_rng(1)
    for _ in range(20):
        ens = random_tree_ensemble(rng)
        d = 4
        Xe = np.round(rng.normal(size=(5, d)) * 2) / 2 + 0.25
        bg = np.round(rng.normal(size=(9, d)) * 2) / 2 + 0.25
        args = (Xe, bg, ens.feature, ens.threshold, ens.left, ens.right, ens.value, ens.roots, ens.tree_weights,
                shapley_coef_table(d), d)
        assert np.max(np.abs(_shap_nb(*args) - _shap_np(*args))) < 1e-12


def test_golden_scoring_bit_identical():
    rng = np.random.default_rng(2)
    C = rng.normal(size=(120, 30))
    C[:, 3] = np.round(C[:, 3])
    C[:, 4] = 1.0
    y = C[:, 0] + 0.1 * rng.normal(size=120)
    args = (np.ascontiguousarray(C[:60]), y[:60], np.ascontiguousarray(C[60:]), y[60:], 3, 5)
    assert np.array_equal(_score_all_nb(*args), _score_all_np(*args))


SCRIPT = """
import hashlib, numpy as np
from fatigue_automl._accel import USE_NUMBA
from fatigue_automl.learners import LearnerSpec, fit
rng = np.random.default_rng(0)
X = rng.normal(size=(200, 5)); y = X[:, 0] - X[:, 1] * X[:, 2]
out = [str(USE_NUMBA)]
for fam, hp in [("tree", {}), ("random_forest", {"n_estimators": 5}), ("extra_trees", {"n_estimators": 5}),
                ("gbdt", {"n_estimators": 10, "subsample": 0.7}), ("gbdt_leafwise", {"n_estimators": 10})]:
    out.append(hashlib.sha256(fit(LearnerSpec(fam, hp, 3), X, y).to_json().encode()).hexdigest())
print(" ".join(out))
"""


def test_env_flag_selects_numpy_path_with_identical_models():
    env = dict(os.environ)
    env.pop("FATIGUE_AUTOML_NO_NUMBA", None)
    a = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    env["FATIGUE_AUTOML_NO_NUMBA"] = "1"
    b = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    fa, fb = a.stdout.split(), b.stdout.split()
    assert fa[0] == "True" and fb[0] == "False"
    assert fa[1:] == fb[1:]
