"""Model zoo behind a single fit / predict contract."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidHyperparameter, NotIterative, SingularSystem, WidthMismatch
from . import nn as _nn
from .spaces import SPACES, in_space, sample_hyperparameters
from .trees import TreeEnsemble, fit_cart, fit_forest, fit_gbdt

FORMAT_VERSION = 1
FAMILIES = ("baseline", "linear", "tree", "random_forest", "extra_trees", "gbdt", "gbdt_leafwise", "nn")
ITERATIVE = ("gbdt", "gbdt_leafwise", "nn")
TREE_FAMILIES = ("tree", "random_forest", "extra_trees", "gbdt", "gbdt_leafwise")

_ALLOWED = {
    "baseline": {},
    "linear": {},
    "tree": {"max_depth": -1, "min_samples_leaf": 1, "min_samples_split": 2, "max_bins": 255},
    "random_forest": {"n_estimators": 100, "max_depth": -1, "min_samples_split": 2, "min_samples_leaf": 1,
                      "max_features": 1.0, "max_bins": 255},
    "extra_trees": {"n_estimators": 100, "max_depth": -1, "min_samples_split": 2, "min_samples_leaf": 1,
                    "max_features": 1.0, "max_bins": 255},
    "gbdt": {"preset": "regularized", "max_depth": 3, "depth": None, "min_child_weight": 1, "n_estimators": 100,
             "learning_rate": 0.1, "subsample": 1.0, "rsm": None, "min_data_in_leaf": None,
             "early_stopping_rounds": 50, "reg_lambda": 1.0, "max_bins": 255},
    "gbdt_leafwise": {"num_leaves": 31, "learning_rate": 0.1, "bagging_fraction": 1.0, "min_data_in_leaf": 20,
                      "n_estimators": 100, "early_stopping_rounds": 50, "reg_lambda": 1.0, "max_bins": 255},
    "nn": {"dense1": 32, "dense2": 16, "dropout": 0.0, "learning_rate": 0.01, "momentum": 0.9, "decay": 0.001,
           "epochs": _nn.MAX_EPOCHS, "batch_size": _nn.BATCH_SIZE},
}


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass(frozen=True)
class LearnerSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidHyperparameter(f"unknown family {self.family!r}")
        hp = {k: _jsonable(v) for k, v in dict(self.hyperparameters).items()}
        unknown = set(hp) - set(_ALLOWED[self.family])
        if unknown:
            raise InvalidHyperparameter(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        for k, v in hp.items():
            _check_value(self.family, k, v)
        object.__setattr__(self, "hyperparameters", hp)

    def resolved(self):
        out = dict(_ALLOWED[self.family])
        out.update(self.hyperparameters)
        return out

    def to_dict(self):
        return {"family": self.family, "hyperparameters": dict(sorted(self.hyperparameters.items())),
                "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], d.get("hyperparameters", {}), int(d.get("seed", 0)))

    def label(self):
        hp = ",".join(f"{k}={v}" for k, v in sorted(self.hyperparameters.items()))
        return f"{self.family}({hp})"


_POSITIVE_INT = {"n_estimators", "num_leaves", "dense1", "dense2", "epochs", "batch_size", "max_bins",
                 "min_samples_split", "min_samples_leaf", "min_data_in_leaf", "depth"}
_FRACTION = {"max_features", "subsample", "bagging_fraction", "rsm"}


def _check_value(family, k, v):
    if k == "preset":
        if v not in ("regularized", "categorical"):
            raise InvalidHyperparameter(f"unknown gbdt preset {v!r}")
        return
    if v is None:
        return
    bad = False
    if k in _POSITIVE_INT:
        bad = not (isinstance(v, int) and v >= 1)
    elif k == "max_depth":
        bad = not (isinstance(v, int) and v >= -1)
    elif k in _FRACTION:
        bad = not (isinstance(v, (int, float)) and 0 < v <= 1)
    elif k == "dropout":
        bad = not (isinstance(v, (int, float)) and 0 <= v < 1)
    elif k in ("learning_rate",):
        bad = not (isinstance(v, (int, float)) and v > 0)
    elif k in ("momentum",):
        bad = not (isinstance(v, (int, float)) and 0 <= v < 1)
    elif k in ("decay", "reg_lambda", "min_child_weight", "early_stopping_rounds"):
        bad = not (isinstance(v, (int, float)) and v >= 0)
    if bad:
        raise InvalidHyperparameter(f"{family}: invalid value {v!r} for {k}")


class FittedModel:
    """Base class: a frozen, serialisable predictor with its training log."""

    family = None

    def __init__(self, spec, n_features, training_log=None, best_iteration=None):
        self.spec = spec
        self.n_features = int(n_features)
        self.training_log = list(training_log or [])
        self.best_iteration = best_iteration

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise WidthMismatch(f"expected {self.n_features} features, got {X.shape}")
        return self._predict(X)

    def _predict(self, X):
        raise NotImplementedError

    def _params(self):
        raise NotImplementedError

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "family": self.family,
            "spec": None if self.spec is None else self.spec.to_dict(),
            "n_features": self.n_features,
            "training_log": self.training_log,
            "best_iteration": self.best_iteration,
            "params": self._params(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


class ConstantModel(FittedModel):
    family = "baseline"

    def __init__(self, spec, n_features, value, **kw):
        super().__init__(spec, n_features, **kw)
        self.value = float(value)

    def _predict(self, X):
        return np.full(X.shape[0], self.value)

    def _params(self):
        return {"value": self.value}


class LinearModel(FittedModel):
    family = "linear"

    def __init__(self, spec, n_features, intercept, coef, **kw):
        super().__init__(spec, n_features, **kw)
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=np.float64)

    def _predict(self, X):
        return self.intercept + X @ self.coef

    def _params(self):
        return {"intercept": self.intercept, "coef": self.coef.tolist()}


class TreeModel(FittedModel):
    def __init__(self, spec, n_features, ensemble: TreeEnsemble, family, **kw):
        super().__init__(spec, n_features, **kw)
        self.ensemble = ensemble
        self.family = family

    def _predict(self, X):
        return self.ensemble.predict(X)

    def _params(self):
        return self.ensemble.to_dict()


class NeuralNetModel(FittedModel):
    family = "nn"

    def __init__(self, spec, n_features, params, **kw):
        super().__init__(spec, n_features, **kw)
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    def _predict(self, X):
        return _nn.predict(self.params, X)

    def _params(self):
        return {k: v.tolist() for k, v in sorted(self.params.items())}


class EnsembleModel(FittedModel):
    """Weighted average of fitted members (weights non-negative, summing to 1)."""

    family = "ensemble"

    def __init__(self, members, weights, n_features, names=None):
        super().__init__(None, n_features)
        self.members = list(members)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.names = list(names) if names is not None else [str(i) for i in range(len(self.members))]

    def _predict(self, X):
        out = np.zeros(X.shape[0])
        for w, m in zip(self.weights, self.members):
            out += w * m.predict(X)
        return out

    def _params(self):
        return {"names": self.names, "weights": self.weights.tolist(),
                "members": [m.to_dict() for m in self.members]}


def _fit_linear(spec, X, y):
    n, d = X.shape
    A = np.hstack([np.ones((n, 1)), X])
    beta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < d + 1:
        warnings.warn(f"design has rank {rank} < {d + 1}; using the minimum-norm solution", SingularSystem)
    return LinearModel(spec, d, beta[0], beta[1:])


def fit(spec: LearnerSpec, X, y, validation=None, executor=None) -> FittedModel:
    """Fit one learner. ``validation=(X_v, y_v)`` drives early stopping for iterative families."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise WidthMismatch("X must be 2-D with one row per target")
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise InvalidHyperparameter("need at least 2 rows and 1 feature")
    hp = spec.resolved()
    fam = spec.family
    d = X.shape[1]
    if fam == "baseline":
        return ConstantModel(spec, d, float(np.mean(y)))
    if fam == "linear":
        return _fit_linear(spec, X, y)
    if fam == "tree":
        ens = fit_cart(X, y, spec.seed, max_depth=hp["max_depth"], min_samples_leaf=hp["min_samples_leaf"],
                       min_samples_split=hp["min_samples_split"], max_bins=hp["max_bins"])
        return TreeModel(spec, d, ens, fam)
    if fam in ("random_forest", "extra_trees"):
        ens = fit_forest(X, y, spec.seed, n_estimators=hp["n_estimators"], max_depth=hp["max_depth"],
                         min_samples_split=hp["min_samples_split"], min_samples_leaf=hp["min_samples_leaf"],
                         max_features=hp["max_features"], extra=fam == "extra_trees", max_bins=hp["max_bins"],
                         executor=executor)
        return TreeModel(spec, d, ens, fam)
    if fam == "gbdt":
        if hp["preset"] == "categorical":
            kw = dict(max_depth=hp["depth"] if hp["depth"] is not None else 6,
                      min_samples_leaf=hp["min_data_in_leaf"] or 1, colsample=hp["rsm"], subsample=1.0,
                      min_child_weight=0.0)
        else:
            kw = dict(max_depth=hp["max_depth"], min_child_weight=hp["min_child_weight"],
                      subsample=hp["subsample"], min_samples_leaf=hp["min_data_in_leaf"] or 1,
                      colsample=hp["rsm"])
        ens, log, best = fit_gbdt(X, y, spec.seed, n_estimators=hp["n_estimators"],
                                  learning_rate=hp["learning_rate"], reg_lambda=hp["reg_lambda"],
                                  early_stopping_rounds=hp["early_stopping_rounds"], validation=validation,
                                  max_bins=hp["max_bins"], **kw)
        return TreeModel(spec, d, ens, fam, training_log=log, best_iteration=best)
    if fam == "gbdt_leafwise":
        ens, log, best = fit_gbdt(X, y, spec.seed, n_estimators=hp["n_estimators"],
                                  learning_rate=hp["learning_rate"], max_depth=-1, max_leaves=hp["num_leaves"],
                                  min_samples_leaf=hp["min_data_in_leaf"], subsample=hp["bagging_fraction"],
                                  reg_lambda=hp["reg_lambda"], early_stopping_rounds=hp["early_stopping_rounds"],
                                  validation=validation, max_bins=hp["max_bins"])
        return TreeModel(spec, d, ens, fam, training_log=log, best_iteration=best)
    if fam == "nn":
        params, log, best = _nn.fit_nn(X, y, spec.seed, dense1=hp["dense1"], dense2=hp["dense2"],
                                       dropout=hp["dropout"], learning_rate=hp["learning_rate"],
                                       momentum=hp["momentum"], decay=hp["decay"], epochs=hp["epochs"],
                                       batch_size=hp["batch_size"], validation=validation)
        return NeuralNetModel(spec, d, params, training_log=log, best_iteration=best)
    raise InvalidHyperparameter(fam)  # pragma: no cover


def predict(model: FittedModel, X):
    return model.predict(X)


@dataclass
class LearningCurve:
    rows: list
    best_iteration: int

    def to_rows(self):
        return [(r["iteration"], r["train_rmse"], r["valid_rmse"], self.best_iteration) for r in self.rows]


def learning_curve(model: FittedModel) -> LearningCurve:
    """Per-iteration train/validation RMSE with the arg-min validation iteration (earliest on ties)."""
    if model.family not in ITERATIVE:
        raise NotIterative(f"family {model.family!r} has no iterations")
    rows = model.training_log
    vals = [r["valid_rmse"] for r in rows]
    if rows and all(v is not None for v in vals):
        best = rows[int(np.argmin(vals))]["iteration"]
    else:
        best = rows[-1]["iteration"] if rows else 0
    return LearningCurve(rows, int(best))


def model_from_dict(d) -> FittedModel:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format {d.get('format_version')!r}")
    fam = d["family"]
    p = d["params"]
    if fam == "ensemble":
        members = [model_from_dict(m) for m in p["members"]]
        return EnsembleModel(members, p["weights"], d["n_features"], p["names"])
    spec = LearnerSpec.from_dict(d["spec"])
    kw = dict(training_log=d.get("training_log"), best_iteration=d.get("best_iteration"))
    if fam == "baseline":
        return ConstantModel(spec, d["n_features"], p["value"], **kw)
    if fam == "linear":
        return LinearModel(spec, d["n_features"], p["intercept"], p["coef"], **kw)
    if fam in TREE_FAMILIES:
        return TreeModel(spec, d["n_features"], TreeEnsemble.from_dict(p), fam, **kw)
    if fam == "nn":
        return NeuralNetModel(spec, d["n_features"], p, **kw)
    raise ValueError(f"unknown family {fam!r}")


def save_model(model: FittedModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.to_json())


def load_model(path) -> FittedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


__all__ = [
    "FAMILIES",
    "SPACES",
    "ConstantModel",
    "EnsembleModel",
    "FittedModel",
    "LearnerSpec",
    "LearningCurve",
    "LinearModel",
    "NeuralNetModel",
    "TreeEnsemble",
    "TreeModel",
    "fit",
    "in_space",
    "learning_curve",
    "load_model",
    "model_from_dict",
    "predict",
    "sample_hyperparameters",
    "save_model",
]
