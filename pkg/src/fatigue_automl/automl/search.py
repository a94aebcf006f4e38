"""Stratified cross-validation, budgeted random search and greedy ensemble selection."""
from __future__ import annotations

import time
import traceback
import warnings
from dataclasses import dataclass, field

import numpy as np

from .._rng import derive_rng, derive_seed
from ..errors import TooFewRows
from ..learners import ITERATIVE, LearnerSpec, fit
from ..learners.spaces import DEFAULT_SEARCH_SPACES, SPACES, sample_hyperparameters

DEFAULT_BUDGET_SECONDS = 3600.0
N_STRATA = 10


def stratified_folds(y, k=5, seed=0):
    """Fold id per row: decile strata of ``y``, shuffled within strata, dealt round-robin.

    The dealing offset carries over between strata so fold sizes differ by
    at most one.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < 2 * k:
        raise TooFewRows(f"{n} rows cannot fill {k} folds with 2 rows each")
    rng = derive_rng(seed, "folds")
    rank = np.empty(n, np.int64)
    rank[np.argsort(y, kind="stable")] = np.arange(n)
    strata = rank * N_STRATA // n
    fold = np.empty(n, np.int64)
    offset = 0
    for s in range(N_STRATA):
        idx = np.nonzero(strata == s)[0]
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return fold


@dataclass
class TrialRecord:
    index: int
    space: str
    spec: LearnerSpec
    fold_rmse: list = field(default_factory=list)
    mean_rmse: float = float("nan")
    oof: np.ndarray = None
    best_iterations: list = field(default_factory=list)
    curve: list = field(default_factory=list)
    wall_time: float = 0.0
    status: str = "ok"
    error: str = ""
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == "ok"

    def oof_rmse(self, y):
        return float(np.sqrt(np.mean((np.asarray(y) - self.oof) ** 2))) if self.ok else float("nan")

    def refit_spec(self):
        """Spec for the full-data refit: iterative families keep the CV-chosen iteration count."""
        hp = dict(self.spec.hyperparameters)
        if self.spec.family in ITERATIVE and self.best_iterations:
            n_it = max(1, int(round(float(np.mean(self.best_iterations)))))
            hp["epochs" if self.spec.family == "nn" else "n_estimators"] = n_it
        return LearnerSpec(self.spec.family, hp, self.spec.seed)


def cross_validate(spec: LearnerSpec, X, y, k=5, seed=0, folds=None, index=0, space=None) -> TrialRecord:
    """k-fold out-of-fold predictions for one spec.

    Iterative families use the held-out fold for early stopping and record
    the best iteration per fold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if folds is None:
        folds = stratified_folds(y, k, seed)
    rec = TrialRecord(index, space or spec.family, spec)
    t0 = time.perf_counter()
    oof = np.empty(y.size)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _fit_folds(spec, X, y, k, folds, rec, oof)
    rec.warnings = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    rec.oof = oof
    rec.mean_rmse = float(np.mean(rec.fold_rmse))
    rec.wall_time = time.perf_counter() - t0
    return rec


def _fit_folds(spec, X, y, k, folds, rec, oof):
    for f in range(k):
        te = folds == f
        tr = ~te
        val = (X[te], y[te]) if spec.family in ITERATIVE else None
        m = fit(spec, X[tr], y[tr], validation=val)
        p = m.predict(X[te])
        if not np.all(np.isfinite(p)):
            raise FloatingPointError("non-finite out-of-fold predictions")
        oof[te] = p
        rec.fold_rmse.append(float(np.sqrt(np.mean((y[te] - p) ** 2))))
        if m.best_iteration is not None:
            rec.best_iterations.append(int(m.best_iteration))
        if f == 0 and m.training_log:
            rec.curve = [dict(r, best_iteration=m.best_iteration) for r in m.training_log]


def trial_specs(spaces, seed, n):
    """The first ``n`` trial specs; a pure function of (spaces, seed)."""
    out = []
    for t in range(n):
        name = spaces[t % len(spaces)]
        family, hp = sample_hyperparameters(name, derive_rng(seed, "trial", t))
        out.append((name, LearnerSpec(family, hp, derive_seed(seed, "trial-fit", t))))
    return out


def _run_trial(t, name, spec, X, y, k, folds):
    try:
        return cross_validate(spec, X, y, k=k, folds=folds, index=t, space=name)
    except Exception as exc:  # recorded, never fatal
        rec = TrialRecord(t, name, spec, status="failed", error=f"{type(exc).__name__}: {exc}")
        rec.error_trace = traceback.format_exc()
        return rec


def hpo_search(spaces=DEFAULT_SEARCH_SPACES, X=None, y=None, budget_seconds=DEFAULT_BUDGET_SECONDS, max_trials=None,
               seed=0, k=5, executor=None, jobs=1, clock=time.monotonic):
    """Seeded random search, round-robin over search spaces.

    Trials start until ``max_trials`` is reached or ``budget_seconds`` have
    elapsed; the budget is checked before each batch of ``jobs`` trials.
    Results are ordered by trial index regardless of the worker count.
    """
    spaces = list(spaces)
    if not spaces:
        raise ValueError("at least one search space is required")
    for s in spaces:
        if s not in SPACES:
            raise KeyError(f"unknown search space {s!r}")
    if budget_seconds is not None and budget_seconds <= 0:
        raise ValueError("budget must be positive")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    folds = stratified_folds(y, k, seed)
    start = clock()
    records = []
    t = 0
    batch = max(1, int(jobs)) if executor is not None else 1
    while max_trials is None or t < max_trials:
        if budget_seconds is not None and clock() - start >= budget_seconds:
            break
        stop = t + batch if max_trials is None else min(t + batch, max_trials)
        specs = trial_specs(spaces, seed, stop)[t:stop]
        args = [(t + i, name, spec, X, y, k, folds) for i, (name, spec) in enumerate(specs)]
        if executor is None:
            records.extend(_run_trial(*a) for a in args)
        else:
            records.extend(executor.map(lambda a: _run_trial(*a), args))
        t = stop
    return records


@dataclass
class EnsembleDefinition:
    members: list  # trial indices in selection order (with repetition)
    weights: dict  # trial index -> weight
    rmse_path: list  # out-of-fold RMSE after each accepted member

    @property
    def rmse(self):
        return self.rmse_path[-1]

    def to_dict(self):
        return {"members": self.members, "weights": {str(k): v for k, v in sorted(self.weights.items())},
                "rmse_path": self.rmse_path}


def greedy_ensemble(trials, y, max_members=25) -> EnsembleDefinition:
    """Forward selection with replacement on out-of-fold predictions.

    Starts from the best single trial and keeps adding the trial that lowers
    the RMSE of the uniform average the most (first one on ties) until no
    addition helps or ``max_members`` selections are made.
    """
    y = np.asarray(y, dtype=np.float64)
    ok = [t for t in trials if t.ok and t.oof is not None]
    if not ok:
        raise ValueError("no completed trials to ensemble")
    P = np.stack([t.oof for t in ok])

    def rmse(p):
        return float(np.sqrt(np.mean((y - p) ** 2)))

    single = [rmse(p) for p in P]
    first = int(np.argmin(single))
    chosen = [first]
    total = P[first].copy()
    path = [single[first]]
    while len(chosen) < max_members:
        m = len(chosen) + 1
        scores = [rmse((total + P[c]) / m) for c in range(len(ok))]
        c = int(np.argmin(scores))
        if not scores[c] < path[-1]:
            break
        chosen.append(c)
        total += P[c]
        path.append(scores[c])
    counts = {}
    for c in chosen:
        counts[ok[c].index] = counts.get(ok[c].index, 0) + 1
    weights = {i: n / len(chosen) for i, n in counts.items()}
    return EnsembleDefinition([ok[c].index for c in chosen], weights, path)


def leaderboard(trials, y):
    """Trials sorted by mean CV RMSE (failed trials last, then by index)."""
    return sorted(trials, key=lambda t: (not t.ok, t.mean_rmse if t.ok else 0.0, t.index))
