import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from fatigue_automl.automl import (
    HYPOTHESES,
    TrialRecord,
    cross_validate,
    greedy_ensemble,
    hpo_search,
    hypothesis,
    leaderboard,
    run,
    stratified_folds,
    trial_specs,
)
from fatigue_automl.config import RunConfig
from fatigue_automl.errors import StageError, TooFewRows
from fatigue_automl.learners import LearnerSpec
from fatigue_automl.synth import SynthConfig, generate_synthetic
from fatigue_automl.tabular import default_schema, train_test_split


def toy(n=150, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    return X, X[:, 0] - 0.5 * X[:, 1] + 0.1 * rng.normal(size=n)


def test_hypotheses_are_nested_schema_columns():
    s = default_schema()
    m1, m2, m3 = (set(HYPOTHESES[k].features) for k in ("M1", "M2", "M3"))
    assert m1 < m2 < m3
    assert all(c in s for c in m3)
    assert "w_BP" in hypothesis("M1", ("w_BP",)).features


def test_stratified_folds_balanced_and_stratified():
    y = np.random.default_rng(0).lognormal(size=503)
    f = stratified_folds(y, 5, seed=1)
    sizes = np.bincount(f, minlength=5)
    assert sizes.max() - sizes.min() <= 1
    dec = np.argsort(np.argsort(y)) * 10 // len(y)
    for s in range(10):
        c = np.bincount(f[dec == s], minlength=5)
        assert c.max() - c.min() <= 1
    assert np.array_equal(f, stratified_folds(y, 5, seed=1))
    with pytest.raises(TooFewRows):
        stratified_folds(np.arange(9.0), 5)


def test_cross_validate_out_of_fold():
    X, y = toy()
    folds = stratified_folds(y, 5, 0)
    rec = cross_validate(LearnerSpec("linear"), X, y, folds=folds)
    assert rec.ok and len(rec.fold_rmse) == 5
    assert rec.oof_rmse(y) < np.std(y)
    gb = cross_validate(LearnerSpec("gbdt", {"n_estimators": 200, "early_stopping_rounds": 5}), X, y, folds=folds)
    assert len(gb.best_iterations) == 5
    assert gb.refit_spec().hyperparameters["n_estimators"] == round(np.mean(gb.best_iterations))


def test_trial_specs_prefix_stable():
    a = trial_specs(["linear", "gbdt", "nn"], 3, 10)
    b = trial_specs(["linear", "gbdt", "nn"], 3, 4)
    assert a[:4] == b
    assert [s for s, _ in a[:3]] == ["linear", "gbdt", "nn"]


class FakeClock:
    def __init__(self, step):
        self.t, self.step = 0.0, step

    def __call__(self):
        self.t += self.step
        return self.t


def test_budget_stops_search():
    X, y = toy()
    recs = hpo_search(["baseline", "linear"], X, y, budget_seconds=10.0, seed=0, clock=FakeClock(3.0))
    assert 1 <= len(recs) <= 4
    assert [r.index for r in recs] == list(range(len(recs)))
    with pytest.raises(ValueError):
        hpo_search(["linear"], X, y, budget_seconds=0)
    with pytest.raises(KeyError):
        hpo_search(["svm"], X, y, max_trials=1)


def test_search_independent_of_workers():
    X, y = toy()
    spaces = ["linear", "gbdt", "tree"]
    a = hpo_search(spaces, X, y, max_trials=6, budget_seconds=None, seed=2)
    with ThreadPoolExecutor(3) as ex:
        b = hpo_search(spaces, X, y, max_trials=6, budget_seconds=None, seed=2, executor=ex, jobs=3)
    assert [r.spec for r in a] == [r.spec for r in b]
    assert all(np.array_equal(r.oof, q.oof) for r, q in zip(a, b))


def test_failed_trial_is_recorded(monkeypatch):
    from fatigue_automl.automl import search

    def boom(*a, **k):
        raise FloatingPointError("diverged")

    X, y = toy()
    monkeypatch.setattr(search, "cross_validate", boom)
    recs = hpo_search(["linear"], X, y, max_trials=2, budget_seconds=None)
    assert all(r.status == "failed" and "diverged" in r.error for r in recs)
    assert leaderboard(recs, y)[0].index == 0


def _rec(i, oof):
    r = TrialRecord(i, "x", LearnerSpec("baseline"))
    r.oof = np.asarray(oof, float)
    r.mean_rmse = 0.0
    return r


def test_greedy_ensemble_never_worse_than_best_single():
    rng = np.random.default_rng(0)
    y = rng.normal(size=200)
    trials = [_rec(i, y + rng.normal(scale=0.3 + 0.1 * i, size=200)) for i in range(6)]
    e = greedy_ensemble(trials, y, 25)
    best = min(np.sqrt(np.mean((t.oof - y) ** 2)) for t in trials)
    assert e.rmse <= best
    assert np.all(np.diff(e.rmse_path) < 0)
    assert abs(sum(e.weights.values()) - 1) < 1e-12
    assert len(e.members) <= 25


def test_greedy_ensemble_single_when_nothing_helps():
    y = np.arange(10.0)
    e = greedy_ensemble([_rec(0, y), _rec(1, y + 1)], y)
    assert e.members == [0] and e.weights == {0: 1.0}


def small_cfg(out, **kw):
    cfg = RunConfig.from_dict({
        "output_dir": str(out), "hypothesis": "M1",
        "hpo": {"max_trials": 4, "budget_seconds": None, "folds": 3,
                "spaces": ["linear", "gbdt", "random_forest", "baseline"]},
        "explain": {"permutations": 64, "repeats": 1, "max_rows": 20, "background": 50},
        "golden": {"enabled": True},
    })
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


@pytest.fixture(scope="module")
def small_split():
    ds = generate_synthetic(SynthConfig(n_rows=300, seed=1, missing_rates={"R_eH": 0.1}))
    return train_test_split(ds, 0.2, seed=0)


def test_small_run_writes_artifacts(tmp_path, small_split):
    tr, te = small_split
    out = tmp_path / "r"
    rep = run(tr, te, hypothesis("M1"), small_cfg(out))
    for f in ("pipeline.json", "features.json", "vif_rounds.csv", "golden_features.json", "leaderboard.csv",
              "ensemble.json", "metrics.json", "parity_train.csv", "parity_test.svg", "models/final.json",
              "explain/shap_values.csv", "explain/decision_top10.csv", "config.json", "timing.json", "manifest.json"):
        assert (out / f).is_file(), f
    assert rep.n_trials == 4
    assert rep.oof_rmse_ensemble <= rep.oof_rmse_best_single
    m = json.loads((out / "metrics.json").read_text())
    assert m["full"]["test"]["r2"] > 0.5
    assert "manifest.json" not in rep.manifest and "timing.json" not in rep.manifest
    g = json.loads((out / "golden_features.json").read_text())
    flagged = {f["recipe"] for f in g["flags"]}
    assert not flagged & set(g["included"])
    svg = (out / "parity_test.svg").read_text()
    assert svg.count("stroke-dasharray") == 4


def test_run_refuses_non_empty_dir(tmp_path, small_split):
    tr, te = small_split
    (tmp_path / "x").mkdir()
    (tmp_path / "x" / "junk").write_text("1")
    with pytest.raises(FileExistsError):
        run(tr, te, hypothesis("M1"), small_cfg(tmp_path / "x"))


def test_stage_error_names_stage(tmp_path, small_split):
    tr, te = small_split
    cfg = small_cfg(tmp_path / "bad")
    cfg.hpo.folds = 1
    with pytest.raises(StageError) as e:
        run(tr, te, hypothesis("M1"), cfg)
    assert e.value.stage == "search"


def test_config_round_trip_and_rejects_unknown(tmp_path):
    cfg = small_cfg(tmp_path)
    cfg.dump(tmp_path / "c.yaml")
    assert RunConfig.load(tmp_path / "c.yaml") == cfg
    with pytest.raises(ValueError):
        RunConfig.from_dict({"hpo": {"trials": 3}})
    with pytest.raises(ValueError):
        RunConfig.from_dict({"bogus": 1})
    assert RunConfig().with_seed(7).seeds.explain == 7
