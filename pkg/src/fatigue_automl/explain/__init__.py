"""Attributions and importances: SHAP (exact where possible), permutation importance, coefficients."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .._rng import derive_rng
from ..errors import BackgroundTooLarge, NotLinear, WidthMismatch
from ..learners import ConstantModel, EnsembleModel, LinearModel, NeuralNetModel, TreeModel
from ._treeshap import shapley_coef_table, tree_shap

MAX_BACKGROUND = 512
SAMPLING_BACKGROUND = 128
DEFAULT_PERMUTATIONS = 2048
DEFAULT_TOP_K = 10


@dataclass
class ShapMatrix:
    base_value: float
    values: np.ndarray
    feature_names: list
    background: dict = field(default_factory=dict)

    def reconstruct(self):
        return self.base_value + self.values.sum(axis=1)

    def local_accuracy_error(self, predictions):
        return float(np.max(np.abs(self.reconstruct() - np.asarray(predictions)))) if len(self.values) else 0.0


def _prepare_background(background, seed, cap):
    bg = np.asarray(background, dtype=np.float64)
    if bg.ndim != 2 or bg.shape[0] == 0:
        raise ValueError("background must be a non-empty 2-D array")
    source = {"rows": int(bg.shape[0])}
    if bg.shape[0] > cap:
        warnings.warn(f"background of {bg.shape[0]} rows capped at {cap} by seeded subsampling", BackgroundTooLarge)
        idx = np.sort(derive_rng(seed, "background").choice(bg.shape[0], cap, replace=False))
        bg = bg[idx]
        source["subsampled_to"] = cap
    return np.ascontiguousarray(bg), source


def _tree_values(model: TreeModel, X, bg):
    e = model.ensemble
    coef = shapley_coef_table(model.n_features)
    return tree_shap(X, bg, e.feature, e.threshold, e.left, e.right, e.value, e.roots, e.tree_weights, coef,
                     model.n_features)


def _sampling_values(model, X, bg, n_samples, seed):
    """Antithetic permutation sampling; each background row gets the same number of walks.

    Every walk telescopes from f(z) to f(x), so local accuracy holds exactly
    once each background row is used equally often.
    """
    nx, d = X.shape
    nb = bg.shape[0]
    pairs = max(1, -(-n_samples // (2 * nb)))  # antithetic pairs per background row
    phi = np.zeros((nx, d))
    steps = np.arange(d + 1)
    for i in range(nx):
        rng = derive_rng(seed, "shap-sampling", i)
        perms = np.array([rng.permutation(d) for _ in range(nb * pairs)])
        perms = np.concatenate([perms, perms[:, ::-1]])
        zs = np.concatenate([np.tile(np.arange(nb), pairs)] * 2)
        rank = np.argsort(perms, axis=1)
        take_x = rank[:, None, :] < steps[None, :, None]
        H = np.where(take_x, X[i][None, None, :], bg[zs][:, None, :])
        f = model.predict(H.reshape(-1, d)).reshape(len(perms), d + 1)
        delta = np.diff(f, axis=1)
        acc = np.zeros(d)
        np.add.at(acc, perms.ravel(), delta.ravel())
        phi[i] = acc / len(perms)
    return phi


def _values(model, X, bg, n_samples, seed):
    if isinstance(model, ConstantModel):
        return np.zeros(X.shape)
    if isinstance(model, LinearModel):
        return (X - bg.mean(axis=0)) * model.coef
    if isinstance(model, TreeModel):
        return _tree_values(model, X, bg)
    if isinstance(model, EnsembleModel):
        out = np.zeros(X.shape)
        for w, m in zip(model.weights, model.members):
            out += w * _values(m, X, bg, n_samples, seed)
        return out
    return _sampling_values(model, X, _sampling_bg(bg, seed), n_samples, seed)


def _sampling_bg(bg, seed):
    if bg.shape[0] <= SAMPLING_BACKGROUND:
        return bg
    idx = np.sort(derive_rng(seed, "sampling-background").choice(bg.shape[0], SAMPLING_BACKGROUND, replace=False))
    return bg[idx]


def _uses_sampling(model):
    if isinstance(model, EnsembleModel):
        return any(_uses_sampling(m) for m in model.members)
    return isinstance(model, NeuralNetModel)


def _base_value(model, bg, seed):
    if isinstance(model, EnsembleModel):
        return float(sum(w * _base_value(m, bg, seed) for w, m in zip(model.weights, model.members)))
    if isinstance(model, NeuralNetModel):
        return float(np.mean(model.predict(_sampling_bg(bg, seed))))
    return float(np.mean(model.predict(bg)))


def shap_values(model, X_explain, background, feature_names=None, n_samples=DEFAULT_PERMUTATIONS, seed=0,
                max_background=MAX_BACKGROUND) -> ShapMatrix:
    """SHAP attributions of ``model`` on ``X_explain`` relative to ``background``.

    Linear models use the closed form, tree models exact interventional
    TreeSHAP, neural networks antithetic permutation sampling on at most
    128 background rows, ensembles the weighted sum of their members.
    """
    X = np.ascontiguousarray(X_explain, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise WidthMismatch(f"expected {model.n_features} features, got {X.shape}")
    bg, source = _prepare_background(background, seed, max_background)
    if bg.shape[1] != model.n_features:
        raise WidthMismatch("background width differs from the model's")
    values = _values(model, X, bg, n_samples, seed)
    base = _base_value(model, bg, seed)
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
    source.update({"used": int(bg.shape[0]), "method": "sampling" if _uses_sampling(model) else "exact"})
    if _uses_sampling(model):
        source.update({"sampling_rows": int(min(bg.shape[0], SAMPLING_BACKGROUND)), "permutations": int(n_samples)})
    return ShapMatrix(base, values, names, source)


# -- permutation importance ----------------------------------------------------------------------------------


@dataclass
class ImportanceTable:
    features: list
    mean: np.ndarray
    std: np.ndarray
    baseline: float

    @property
    def ranking(self):
        order = np.argsort(-self.mean, kind="stable")
        return [self.features[k] for k in order]

    def rows(self):
        order = np.argsort(-self.mean, kind="stable")
        return [(r + 1, self.features[k], float(self.mean[k]), float(self.std[k])) for r, k in enumerate(order)]


def _rmse(y, p):
    return float(np.sqrt(np.mean((np.asarray(y) - p) ** 2)))


def permutation_importance(model, X, y, feature_names=None, metric="rmse", repeats=5, seed=0) -> ImportanceTable:
    """Increase in RMSE when one column is shuffled, averaged over ``repeats`` shuffles."""
    if metric != "rmse":
        raise ValueError("only the rmse metric is supported")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    base = _rmse(y, model.predict(X))
    d = X.shape[1]
    deg = np.zeros((repeats, d))
    for j in range(d):
        for r in range(repeats):
            Xp = X.copy()
            Xp[:, j] = X[derive_rng(seed, "perm", r, j).permutation(X.shape[0]), j]
            deg[r, j] = _rmse(y, model.predict(Xp)) - base
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(d)]
    return ImportanceTable(names, deg.mean(axis=0), deg.std(axis=0), base)


# -- reports -------------------------------------------------------------------------------------------------


@dataclass
class DecisionRecord:
    row: int
    kind: str  # "best" or "worst"
    prediction: float
    actual: float
    path: list  # [(feature, cumulative value)] starting at the base value

    def terminal(self):
        return self.path[-1][1]


@dataclass
class ShapReport:
    importance: list  # [(feature, mean |phi|)] descending
    beeswarm: list  # [(feature, phi, normalised feature value)]
    dependence: dict  # feature -> [(feature value, phi)]
    decisions: list


def shap_reports(s: ShapMatrix, X_explain, predictions, actuals, k=DEFAULT_TOP_K) -> ShapReport:
    X = np.asarray(X_explain, dtype=np.float64)
    V = s.values
    n, d = V.shape
    if X.shape != V.shape:
        raise WidthMismatch("X_explain and SHAP values differ in shape")
    if k > n:
        raise ValueError("k exceeds the number of explained rows")
    imp = np.abs(V).mean(axis=0) if n else np.zeros(d)
    order = np.argsort(-imp, kind="stable")
    importance = [(s.feature_names[j], float(imp[j])) for j in order]
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    norm = np.where(hi > lo, (X - lo) / span, 0.5)
    beeswarm = [(s.feature_names[j], float(V[i, j]), float(norm[i, j])) for j in order for i in range(n)]
    dependence = {s.feature_names[j]: [(float(X[i, j]), float(V[i, j])) for i in range(n)] for j in range(d)}
    pred = np.asarray(predictions, dtype=np.float64)
    act = np.asarray(actuals, dtype=np.float64)
    err = np.abs(pred - act)
    best = np.argsort(err, kind="stable")[:k]
    worst = np.argsort(-err, kind="stable")[:k]
    decisions = []
    for kind, rows in (("best", best), ("worst", worst)):
        for i in rows:
            contrib = np.argsort(-np.abs(V[i]), kind="stable")
            cum = s.base_value
            path = [("base_value", cum)]
            for j in contrib:
                cum += V[i, j]
                path.append((s.feature_names[j], float(cum)))
            decisions.append(DecisionRecord(int(i), kind, float(pred[i]), float(act[i]), path))
    return ShapReport(importance, beeswarm, dependence, decisions)


def linear_coefficients(model, feature_names=None):
    """``[("intercept", b0), (name_1, b1), ...]`` for a linear model."""
    if not isinstance(model, LinearModel):
        raise NotLinear(f"family {model.family!r} has no coefficients")
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(model.n_features)]
    return [("intercept", model.intercept)] + [(nm, float(b)) for nm, b in zip(names, model.coef)]


__all__ = [
    "DecisionRecord",
    "ImportanceTable",
    "ShapMatrix",
    "ShapReport",
    "linear_coefficients",
    "permutation_importance",
    "shap_reports",
    "shap_values",
]
