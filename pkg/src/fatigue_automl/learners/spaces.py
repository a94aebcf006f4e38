"""Hyperparameter search spaces per learner family."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Fixed:
    value: object

    def sample(self, rng):
        return self.value

    def contains(self, v):
        return v == self.value


@dataclass(frozen=True)
class IntRange:
    low: int
    high: int
    log: bool = False

    def sample(self, rng):
        if self.log:
            return int(round(math.exp(rng.uniform(math.log(self.low), math.log(self.high)))))
        return int(rng.integers(self.low, self.high + 1))

    def contains(self, v):
        return isinstance(v, int) and not isinstance(v, bool) and self.low <= v <= self.high


@dataclass(frozen=True)
class FloatRange:
    low: float
    high: float
    log: bool = False

    def sample(self, rng):
        if self.log:
            return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))
        return float(rng.uniform(self.low, self.high))

    def contains(self, v):
        return isinstance(v, (int, float)) and self.low <= v <= self.high


@dataclass(frozen=True)
class Choice:
    options: tuple

    def sample(self, rng):
        return self.options[int(rng.integers(len(self.options)))]

    def contains(self, v):
        return v in self.options


# space name -> (family, preset, {name: domain})
SPACES = {
    "baseline": ("baseline", None, {}),
    "linear": ("linear", None, {}),
    "tree": ("tree", None, {"max_depth": IntRange(2, 12), "min_samples_leaf": IntRange(1, 20)}),
    "random_forest": ("random_forest", None, {
        "n_estimators": Fixed(100),
        "max_depth": IntRange(4, 12),
        "min_samples_split": Fixed(2),
        "max_features": FloatRange(0.5, 1.0),
    }),
    "extra_trees": ("extra_trees", None, {
        "n_estimators": Fixed(100),
        "max_depth": IntRange(4, 12),
        "min_samples_split": IntRange(10, 50),
        "min_samples_leaf": Fixed(1),
        "max_features": FloatRange(0.5, 1.0),
    }),
    "gbdt_leafwise": ("gbdt_leafwise", None, {
        "num_leaves": IntRange(3, 31),
        "learning_rate": Choice((0.05, 0.075, 0.1, 0.15)),
        "bagging_fraction": Choice((0.8, 0.9, 1.0)),
        "min_data_in_leaf": IntRange(5, 50),
        "n_estimators": IntRange(50, 500, log=True),
    }),
    "gbdt": ("gbdt", "regularized", {
        "max_depth": IntRange(1, 4),
        "min_child_weight": IntRange(1, 10),
        "n_estimators": IntRange(10, 100),
        "learning_rate": FloatRange(0.01, 0.5, log=True),
        "subsample": FloatRange(0.3, 1.0),
        "early_stopping_rounds": Fixed(50),
    }),
    "gbdt_categorical": ("gbdt", "categorical", {
        "depth": IntRange(2, 6),
        "learning_rate": Choice((0.05, 0.1, 0.2)),
        "n_estimators": Fixed(1000),
        "rsm": FloatRange(0.7, 1.0),
        "min_data_in_leaf": IntRange(5, 50),
    }),
    "nn": ("nn", None, {
        "dense1": Choice((16, 32, 64)),
        "dense2": Choice((4, 8, 16, 32)),
        "dropout": Choice((0.0, 0.1, 0.25)),
        "learning_rate": Choice((0.01, 0.05, 0.08, 0.1)),
        "momentum": Choice((0.85, 0.9, 0.95)),
        "decay": Choice((0.0001, 0.001, 0.01)),
    }),
}

DEFAULT_SEARCH_SPACES = ("baseline", "linear", "random_forest", "extra_trees", "gbdt_leafwise", "gbdt",
                         "gbdt_categorical", "nn")


def sample_hyperparameters(space_name, rng):
    family, preset, space = SPACES[space_name]
    hp = {name: dom.sample(rng) for name, dom in space.items()}
    if preset is not None:
        hp["preset"] = preset
    return family, hp


def space_of(family, hyperparameters):
    preset = hyperparameters.get("preset")
    for name, (fam, pre, _) in SPACES.items():
        if fam == family and pre == preset:
            return name
    raise KeyError((family, preset))


def in_space(family, hyperparameters):
    """True when every searched hyperparameter lies inside its declared domain."""
    _, _, space = SPACES[space_of(family, hyperparameters)]
    for name, dom in space.items():
        if name not in hyperparameters or not dom.contains(hyperparameters[name]):
            return False
    return True
