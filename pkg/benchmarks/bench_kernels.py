"""Numba vs numpy timings for the three hot kernels.

Runs both implementations in one process (bypassing the environment switch),
checks that they agree, and prints the median wall time of each.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--quick]
"""
import argparse
import statistics
import time

import numpy as np

from fatigue_automl._golden_kernels import _score_all_nb, _score_all_np
from fatigue_automl.explain._treeshap import _shap_nb, _shap_np, shapley_coef_table
from fatigue_automl.learners._kernels import _grow_tree_nb, _grow_tree_np
from fatigue_automl.learners.trees import _max_nodes, bin_codes, fit_bins, fit_forest


def timed(fn, repeats):
    out, times = None, []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def tree_case(n, m, rng):
    X = rng.normal(size=(n, m))
    y = X[:, 0] + np.sin(2 * X[:, 1]) + 0.1 * rng.normal(size=n)
    edges = fit_bins(X)
    codes = bin_codes(X, edges)
    n_bins = np.array([len(e) + 1 for e in edges], dtype=np.int64)
    max_nodes = _max_nodes(n, 8, -1)
    u = np.zeros((max_nodes, m))
    args = (codes, n_bins, y, np.ones(n), 8, -1, 2.0, 1.0, 0.0, m, False, u, u, max_nodes)
    return args


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    a = ap.parse_args()
    rng = np.random.default_rng(0)
    scale = 0.25 if a.quick else 1.0
    rows = []

    # tree growth
    args = tree_case(int(4000 * scale), 16, rng)
    _grow_tree_nb(*args)  # compile
    r_nb, t_nb = timed(lambda: _grow_tree_nb(*args), a.repeats)
    r_np, t_np = timed(lambda: _grow_tree_np(*args), a.repeats)
    same = all(np.array_equal(p, q) for p, q in zip(r_nb, r_np))
    rows.append(("grow_tree (depth 8)", t_nb, t_np, "bit-identical" if same else "DIFFER"))

    # exact interventional TreeSHAP
    d = 8
    X = rng.normal(size=(int(400 * scale), d))
    y = X[:, 0] - X[:, 1] * X[:, 2]
    ens = fit_forest(X, y, 0, n_estimators=10, max_depth=6)
    Xe, bg = X[:40], X[-int(100 * scale):]
    coef = shapley_coef_table(d)
    kargs = (Xe, bg, ens.feature, ens.threshold, ens.left, ens.right, ens.value, ens.roots, ens.tree_weights, coef, d)
    _shap_nb(*kargs)
    p_nb, t_nb = timed(lambda: _shap_nb(*kargs), a.repeats)
    p_np, t_np = timed(lambda: _shap_np(*kargs), max(1, a.repeats // 2))
    rows.append(("tree_shap (10 trees)", t_nb, t_np, f"max |diff| {np.max(np.abs(p_nb - p_np)):.1e}"))

    # golden-feature candidate scoring
    n, k = int(2000 * scale), 300
    C = rng.normal(size=(n, k))
    yy = C[:, 0] + 0.1 * rng.normal(size=n)
    h = n // 2
    gargs = (np.ascontiguousarray(C[:h]), yy[:h], np.ascontiguousarray(C[h:]), yy[h:], 3, 5)
    _score_all_nb(*gargs)
    s_nb, t_nb = timed(lambda: _score_all_nb(*gargs), a.repeats)
    s_np, t_np = timed(lambda: _score_all_np(*gargs), a.repeats)
    rows.append(("golden scoring (300 cand.)", t_nb, t_np, "bit-identical" if np.array_equal(s_nb, s_np) else "DIFFER"))

    print(f"{'kernel':28s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speed-up':>9s}  agreement")
    for name, tn, tp, agree in rows:
        print(f"{name:28s} {tn:10.4f} {tp:10.4f} {tp / tn:8.1f}x  {agree}")


if __name__ == "__main__":
    main()
