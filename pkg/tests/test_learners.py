import numpy as np
import pytest
from sklearn.tree import DecisionTreeRegressor

from fatigue_automl._rng import derive_rng
from fatigue_automl.errors import InvalidHyperparameter, NotIterative, WidthMismatch
from fatigue_automl.learners import (
    FAMILIES,
    EnsembleModel,
    LearnerSpec,
    fit,
    learning_curve,
    load_model,
    model_from_dict,
    save_model,
)
from fatigue_automl.learners import nn as nnmod
from fatigue_automl.learners.spaces import SPACES, in_space, sample_hyperparameters

FAST = {
    "random_forest": {"n_estimators": 10},
    "extra_trees": {"n_estimators": 10},
    "gbdt": {"n_estimators": 20},
    "gbdt_leafwise": {"n_estimators": 20, "min_data_in_leaf": 5},
    "nn": {"epochs": 20},
}


def toy(n=200, d=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = X[:, 0] - 0.5 * X[:, 1] + 0.3 * X[:, 2] * X[:, 3] + 0.05 * rng.normal(size=n)
    return X, y


@pytest.mark.parametrize("family", FAMILIES)
def test_every_family_fits_predicts_and_round_trips(family, tmp_path):
    X, y = toy()
    m = fit(LearnerSpec(family, FAST.get(family, {}), seed=1), X, y)
    p = m.predict(X)
    assert p.shape == (len(y),) and np.all(np.isfinite(p))
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert np.array_equal(back.predict(X), p)
    assert back.to_json() == m.to_json()
    with pytest.raises(WidthMismatch):
        m.predict(X[:, :3])


@pytest.mark.parametrize("family", [f for f in FAMILIES if f != "baseline"])
def test_learners_beat_the_baseline(family):
    X, y = toy(400)
    Xt, yt = toy(200, seed=1)
    base = np.sqrt(np.mean((yt - y.mean()) ** 2))
    m = fit(LearnerSpec(family, FAST.get(family, {}), seed=0), X, y)
    assert np.sqrt(np.mean((m.predict(Xt) - yt) ** 2)) < base


@pytest.mark.parametrize("family", FAMILIES)
def test_fit_is_deterministic(family):
    X, y = toy()
    spec = LearnerSpec(family, FAST.get(family, {}), seed=5)
    assert fit(spec, X, y).to_json() == fit(spec, X, y).to_json()


def test_baseline_predicts_training_mean():
    X, y = toy()
    m = fit(LearnerSpec("baseline"), X, y)
    assert np.all(m.predict(X) == np.mean(y))


def test_linear_residual_orthogonality():
    X, y = toy(500, 6)
    m = fit(LearnerSpec("linear"), X, y)
    r = y - m.predict(X)
    A = np.hstack([np.ones((len(y), 1)), X])
    assert np.max(np.abs(A.T @ r)) / len(y) < 1e-8


def test_nn_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(16, 3))
    y = rng.normal(size=16)
    params = nnmod.init_params(3, 5, 4, rng)
    # zero biases can put a pre-activation exactly on the ReLU kink; check at a generic point
    for b in ("b1", "b2", "b3"):
        params[b] = rng.normal(0.0, 0.1, params[b].shape)
    _, g = nnmod.loss_and_grad(params, X, y)
    h = 1e-6
    for k, v in params.items():
        for idx in np.ndindex(v.shape):
            old = v[idx]
            v[idx] = old + h
            lp, _ = nnmod.loss_and_grad(params, X, y)
            v[idx] = old - h
            lm, _ = nnmod.loss_and_grad(params, X, y)
            v[idx] = old
            num = (lp - lm) / (2 * h)
            assert abs(num - g[k][idx]) <= 1e-4 * max(1.0, abs(num)), (k, idx)


def test_gbdt_single_unrestricted_stage_interpolates():
    rng = np.random.default_rng(0)
    X = rng.permutation(40).reshape(-1, 1).astype(float)
    y = rng.normal(size=40)
    spec = LearnerSpec("gbdt", {"n_estimators": 1, "learning_rate": 1.0, "max_depth": -1, "reg_lambda": 0.0})
    m = fit(spec, X, y)
    assert np.allclose(m.predict(X), y, atol=1e-12)


def test_cart_matches_sklearn_on_distinct_values():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(150, 3))
    y = np.sin(X[:, 0]) + X[:, 1] ** 2
    ours = fit(LearnerSpec("tree", {"max_depth": 4, "min_samples_leaf": 3}), X, y)
    ref = DecisionTreeRegressor(max_depth=4, min_samples_leaf=3).fit(X, y)
    assert np.allclose(ours.predict(X), ref.predict(X), atol=1e-12)


def test_early_stopping_and_learning_curve():
    X, y = toy(300)
    Xv, yv = toy(100, seed=2)
    spec = LearnerSpec("gbdt", {"n_estimators": 300, "learning_rate": 0.5, "early_stopping_rounds": 10})
    m = fit(spec, X, y, validation=(Xv, yv))
    lc = learning_curve(m)
    assert 1 <= lc.best_iteration < 300
    valid = [r["valid_rmse"] for r in lc.rows]
    assert valid[lc.best_iteration - 1] == min(valid)
    assert len(lc.rows) <= lc.best_iteration + 10
    with pytest.raises(NotIterative):
        learning_curve(fit(LearnerSpec("linear"), X, y))


def test_spec_validation():
    with pytest.raises(InvalidHyperparameter):
        LearnerSpec("svm")
    with pytest.raises(InvalidHyperparameter):
        LearnerSpec("gbdt", {"num_leaves": 10})
    with pytest.raises(InvalidHyperparameter):
        LearnerSpec("nn", {"dropout": 1.0})
    with pytest.raises(InvalidHyperparameter):
        LearnerSpec("gbdt", {"preset": "fancy"})
    s = LearnerSpec("gbdt", {"max_depth": np.int64(3)}, 2)
    assert LearnerSpec.from_dict(s.to_dict()) == s


def test_hpo_draws_stay_inside_spaces():
    for name in SPACES:
        _, _, space = SPACES[name]
        for t in range(1000):
            family, hp = sample_hyperparameters(name, derive_rng(7, name, t))
            assert in_space(family, hp)
            for k, dom in space.items():
                assert dom.contains(hp[k]), (name, k, hp[k])
            LearnerSpec(family, hp)


def test_ensemble_model_weights_members():
    X, y = toy()
    a = fit(LearnerSpec("linear"), X, y)
    b = fit(LearnerSpec("baseline"), X, y)
    e = EnsembleModel([a, b], [0.75, 0.25], X.shape[1])
    assert np.allclose(e.predict(X), 0.75 * a.predict(X) + 0.25 * b.predict(X))
    assert np.array_equal(model_from_dict(e.to_dict()).predict(X), e.predict(X))
