"""End-to-end run: preprocess, screen, search, ensemble, refit, evaluate, explain, write artefacts."""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import plots
from .._io import safe_name, sha256_file, write_csv, write_json
from .._rng import derive_rng
from ..config import RunConfig
from ..errors import StageError
from ..evalx import BAND_FACTORS, ParityTable, metrics_table, parity_table
from ..explain import permutation_importance, shap_reports, shap_values
from ..features import GoldenFeature, audit_golden, discover_golden, golden_values, vif_screen
from ..learners import EnsembleModel, fit
from ..preprocess import FittedPipeline, ImputeSpec, apply_pipeline, default_impute_specs, fit_pipeline, inverse_target
from ..tabular import Dataset
from .hypotheses import HypothesisConfig
from .search import greedy_ensemble, hpo_search, leaderboard

MANIFEST = "manifest.json"
UNHASHED = {MANIFEST, "timing.json", "FAILED"}


class _Stage:
    def __init__(self, name, timings):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, et, ev, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if ev is not None and not isinstance(ev, StageError):
            raise StageError(self.name, ev) from ev


@dataclass
class FeatureState:
    """Which encoded columns survive screening and which golden features are appended."""

    encoded: list
    kept: list
    golden: list = field(default_factory=list)  # dicts: lhs, rhs, op, score, mu, sd

    @property
    def names(self):
        return list(self.kept) + [g["name"] for g in self.golden]

    def matrix(self, p: FittedPipeline, ds: Dataset):
        X, y, names = apply_pipeline(p, ds)
        idx = [names.index(k) for k in self.kept]
        X = X[:, idx]
        if self.golden:
            R, _, _ = apply_pipeline(p, ds, standardize=False)
            extra = []
            for g in self.golden:
                gf = GoldenFeature(g["lhs"], g["rhs"], g["op"], g["score"])
                extra.append((golden_values(gf, R, names) - g["mu"]) / g["sd"])
            X = np.hstack([X, np.column_stack(extra)])
        return np.ascontiguousarray(X), y

    def to_dict(self):
        return {"encoded": self.encoded, "kept": self.kept, "golden": self.golden}

    @classmethod
    def from_dict(cls, d):
        return cls(list(d["encoded"]), list(d["kept"]), list(d.get("golden", [])))


@dataclass
class RunReport:
    config: dict
    hypothesis: dict
    leaderboard: list
    ensemble: dict
    chosen: str
    metrics: dict
    manifest: dict
    out_dir: str
    oof_rmse_best_single: float
    oof_rmse_ensemble: float
    n_trials: int
    feature_names: list
    model: object = None
    pipeline: object = None
    shap: object = None
    importance: list = None
    permutation: object = None
    trials: list = None
    vif: object = None
    golden: list = None
    golden_flags: list = None

    def summary(self):
        return {k: getattr(self, k) for k in ("chosen", "metrics", "oof_rmse_best_single", "oof_rmse_ensemble",
                                              "n_trials", "feature_names")}


def impute_specs_for(cfg: RunConfig, schema):
    specs = {s.column: s for s in default_impute_specs(schema)}
    for col, d in (cfg.impute or {}).items():
        specs[col] = ImputeSpec(col, d["strategy"], d.get("value"))
    return list(specs.values())


def _check_out_dir(path):
    if os.path.exists(path) and os.listdir(path):
        raise FileExistsError(f"output directory {path!r} is not empty")
    os.makedirs(path, exist_ok=True)


def write_manifest(out_dir):
    files = {}
    for root, _, names in os.walk(out_dir):
        for n in names:
            rel = os.path.relpath(os.path.join(root, n), out_dir).replace(os.sep, "/")
            if rel in UNHASHED:
                continue
            files[rel] = sha256_file(os.path.join(root, n))
    manifest = {k: files[k] for k in sorted(files)}
    write_json(os.path.join(out_dir, MANIFEST), manifest)
    return manifest


def background_rows(X_train, size, seed):
    n = X_train.shape[0]
    if n <= size:
        return X_train
    idx = np.sort(derive_rng(seed, "shap-background").choice(n, size, replace=False))
    return X_train[idx]


def explain_to_dir(model, X_explain, y_explain, X_train, names, ecfg, seed, out_dir, row_ids=None, to_mpa=None):
    """SHAP values, importances, dependence data, decision records and their SVGs.

    Attributions are in the model's output space (the transformed target).
    """
    os.makedirs(out_dir, exist_ok=True)
    if ecfg.max_rows is not None:
        X_explain, y_explain = X_explain[: ecfg.max_rows], y_explain[: ecfg.max_rows]
        row_ids = None if row_ids is None else row_ids[: ecfg.max_rows]
    row_ids = list(range(len(X_explain))) if row_ids is None else [int(r) for r in row_ids]
    bg = background_rows(X_train, ecfg.background, seed)
    s = shap_values(model, X_explain, bg, names, n_samples=ecfg.permutations, seed=seed,
                    max_background=max(ecfg.background, 1))
    pred = model.predict(X_explain)
    k = min(ecfg.top_k, len(pred))
    rep = shap_reports(s, X_explain, pred, y_explain, k=k)
    perm = permutation_importance(model, X_explain, y_explain, names, repeats=ecfg.repeats, seed=seed)

    write_csv(os.path.join(out_dir, "shap_values.csv"), ["row", "base_value", *names, "prediction"],
              [[row_ids[i], s.base_value, *s.values[i].tolist(), float(pred[i])] for i in range(len(pred))])
    write_csv(os.path.join(out_dir, "shap_importance.csv"), ["rank", "feature", "mean_abs_shap"],
              [[r + 1, f, v] for r, (f, v) in enumerate(rep.importance)])
    write_csv(os.path.join(out_dir, "permutation_importance.csv"), ["rank", "feature", "mean_rmse_increase", "std"],
              perm.rows())
    write_csv(os.path.join(out_dir, "beeswarm.csv"), ["feature", "shap", "normalized_value"], rep.beeswarm)
    for f, pts in rep.dependence.items():
        write_csv(os.path.join(out_dir, f"dependence_{safe_name(f)}.csv"), ["feature_value", "shap"], pts)
    drows = []
    for rank, d in enumerate(rep.decisions):
        mpa = (None, None) if to_mpa is None else tuple(float(v) for v in to_mpa(np.array([d.prediction, d.actual])))
        drows.append([d.kind, rank % k + 1 if k else 0, row_ids[d.row], d.prediction, d.actual, mpa[0], mpa[1],
                      d.terminal(), json.dumps([[a, b] for a, b in d.path])])
    write_csv(os.path.join(out_dir, "decision_top10.csv"),
              ["kind", "rank", "row", "prediction", "actual", "prediction_mpa", "actual_mpa", "path_terminal", "path"],
              drows)
    write_json(os.path.join(out_dir, "shap_meta.json"),
               {"base_value": s.base_value, "background": s.background, "explained_rows": len(pred),
                "explained_partition": "test", "output_space": "transformed target",
                "local_accuracy_max_error": s.local_accuracy_error(pred)})
    with open(os.path.join(out_dir, "importance.svg"), "w", encoding="utf-8") as fh:
        fh.write(plots.importance_svg(rep.importance, "Mean |SHAP|"))
    with open(os.path.join(out_dir, "beeswarm.svg"), "w", encoding="utf-8") as fh:
        fh.write(plots.beeswarm_svg(rep.beeswarm, [f for f, _ in rep.importance], "SHAP beeswarm"))
    with open(os.path.join(out_dir, "permutation_importance.svg"), "w", encoding="utf-8") as fh:
        fh.write(plots.importance_svg([(r[1], r[2]) for r in perm.rows()], "Permutation importance (RMSE)"))
    return s, rep, perm


def _write_parity(path_csv, path_svg, par: ParityTable, title):
    write_csv(path_csv, ParityTable.header(), par.rows())
    with open(path_svg, "w", encoding="utf-8") as fh:
        fh.write(plots.parity_svg(par.actual, par.predicted, par.err_std, title, BAND_FACTORS))


def run(train: Dataset, test: Dataset, hypothesis: HypothesisConfig, options: RunConfig = None,
        out_dir=None) -> RunReport:
    """Execute a complete run and write every artefact under ``out_dir``.

    The test partition is only read after the final model is fixed.
    """
    cfg = options or RunConfig()
    out_dir = out_dir or cfg.output_dir
    _check_out_dir(out_dir)
    timings = {}
    seeds = cfg.seeds
    executor = ThreadPoolExecutor(max_workers=cfg.jobs) if cfg.jobs and cfg.jobs > 1 else None
    try:
        with _Stage("preprocess", timings):
            p = fit_pipeline(train, impute_specs_for(cfg, train.schema), seed=seeds.pipeline,
                             features=hypothesis.features)
            X_enc, y_tr, enc_names = apply_pipeline(p, train)
            p.save(os.path.join(out_dir, "pipeline.json"))

        with _Stage("vif", timings):
            real = [n for n in enc_names if p.kinds.get(n) == "real"]
            vif = None
            dropped = []
            if cfg.vif_threshold is not None and len(real) >= 2:
                vif = vif_screen(X_enc[:, [enc_names.index(n) for n in real]], real, cfg.vif_threshold)
                dropped = vif.dropped
                write_csv(os.path.join(out_dir, "vif_rounds.csv"), ["round", "feature", "vif"], vif.table_rows())
            state = FeatureState(enc_names, [n for n in enc_names if n not in dropped])

        with _Stage("golden", timings):
            golden, flags = [], []
            if cfg.golden.enabled:
                R, _, _ = apply_pipeline(p, train, standardize=False)
                kept_idx = [enc_names.index(n) for n in state.kept]
                golden = discover_golden(R[:, kept_idx], y_tr, state.kept, seed=seeds.search)
                flags = audit_golden(golden, train.schema, cfg.golden.policy)
                flagged = {f.feature.recipe for f in flags}
                for g in golden:
                    if g.recipe in flagged and not cfg.golden.include_flagged:
                        continue
                    v = golden_values(g, R, enc_names)
                    sd = float(v.std(ddof=1))
                    state.golden.append(dict(g.to_dict(), name=g.name, mu=float(v.mean()), sd=sd if sd > 0 else 1.0))
                write_json(os.path.join(out_dir, "golden_features.json"),
                           {"candidates": [g.to_dict() for g in golden],
                            "flags": [f.to_dict() for f in flags],
                            "policy": cfg.golden.policy,
                            "included": [g["recipe"] for g in state.golden]})
            write_json(os.path.join(out_dir, "features.json"), state.to_dict())
            X_tr, _ = state.matrix(p, train)
            names = state.names

        with _Stage("search", timings):
            trials = hpo_search(cfg.hpo.spaces, X_tr, y_tr, budget_seconds=cfg.hpo.budget_seconds,
                                max_trials=cfg.hpo.max_trials, seed=seeds.search, k=cfg.hpo.folds,
                                executor=executor, jobs=cfg.jobs)
            timings["trials"] = {str(t.index): t.wall_time for t in trials}
            board = leaderboard(trials, y_tr)
            ok = [t for t in trials if t.ok]
            if not ok:
                raise RuntimeError("every trial failed")

        with _Stage("ensemble", timings):
            ens = greedy_ensemble(trials, y_tr, cfg.hpo.max_members)
            single_rmse = {t.index: t.oof_rmse(y_tr) for t in ok}
            best_single = min(ok, key=lambda t: (single_rmse[t.index], t.index))
            use_ensemble = len(ens.weights) > 1 and ens.rmse < single_rmse[best_single.index]

        with _Stage("refit", timings):
            by_index = {t.index: t for t in trials}
            member_ids = sorted(ens.weights) if use_ensemble else [best_single.index]
            refit = {}
            for i in member_ids:
                m = fit(by_index[i].refit_spec(), X_tr, y_tr)
                refit[i] = m
                m_path = os.path.join(out_dir, "models", f"trial_{i:04d}.json")
                os.makedirs(os.path.dirname(m_path), exist_ok=True)
                with open(m_path, "w", encoding="utf-8") as fh:
                    fh.write(m.to_json())
            if use_ensemble:
                model = EnsembleModel([refit[i] for i in member_ids], [ens.weights[i] for i in member_ids],
                                      X_tr.shape[1], [f"trial_{i:04d}" for i in member_ids])
                chosen = "ensemble"
            else:
                model = refit[best_single.index]
                chosen = f"trial_{best_single.index:04d}"
            with open(os.path.join(out_dir, "models", "final.json"), "w", encoding="utf-8") as fh:
                fh.write(model.to_json())

        # ---- finalizer: first and only access to the test partition ----
        with _Stage("evaluate", timings):
            X_te, y_te = state.matrix(p, test)
            to_mpa = lambda v: inverse_target(p, v)  # noqa: E731
            yt_mpa, yv_mpa = to_mpa(y_tr), to_mpa(y_te)
            pt_mpa, pv_mpa = to_mpa(model.predict(X_tr)), to_mpa(model.predict(X_te))
            band = tuple(cfg.band)
            metrics = metrics_table((yt_mpa, pt_mpa), (yv_mpa, pv_mpa), band)
            metrics["oof_rmse_transformed"] = {"best_single": single_rmse[best_single.index], "ensemble": ens.rmse}
            write_json(os.path.join(out_dir, "metrics.json"), metrics)
            for part, ya, yp in (("train", yt_mpa, pt_mpa), ("test", yv_mpa, pv_mpa)):
                _write_parity(os.path.join(out_dir, f"parity_{part}.csv"), os.path.join(out_dir, f"parity_{part}.svg"),
                              parity_table(ya, yp), f"Parity ({part}, MPa)")

        with _Stage("report", timings):
            lb_rows = []
            for rank, t in enumerate(board, 1):
                lb_rows.append([rank, t.index, t.space, t.spec.family, json.dumps(t.spec.hyperparameters, sort_keys=True),
                                t.spec.seed, t.status, t.mean_rmse if t.ok else "", t.oof_rmse(y_tr) if t.ok else "",
                                ";".join(repr(v) for v in t.fold_rmse), ens.weights.get(t.index, 0.0) if use_ensemble
                                else float(t.index == best_single.index), t.error])
            write_csv(os.path.join(out_dir, "leaderboard.csv"),
                      ["rank", "trial", "space", "family", "hyperparameters", "seed", "status", "mean_cv_rmse",
                       "oof_rmse", "fold_rmse", "weight", "error"], lb_rows)
            write_json(os.path.join(out_dir, "ensemble.json"),
                       dict(ens.to_dict(), chosen=chosen, best_single=best_single.index, used=use_ensemble))
            for t in trials:
                if t.curve:
                    write_csv(os.path.join(out_dir, "learning_curves", f"trial_{t.index:04d}.csv"),
                              ["iteration", "train_rmse", "valid_rmse", "best_iteration"],
                              [[r["iteration"], r["train_rmse"], r["valid_rmse"], r["best_iteration"]] for r in t.curve])
            groups = {}
            for t in ok:
                groups.setdefault(t.space, []).extend(t.fold_rmse)
            with open(os.path.join(out_dir, "rmse_boxplot.svg"), "w", encoding="utf-8") as fh:
                fh.write(plots.rmse_boxplot_svg(groups, "Fold RMSE per family (transformed target)"))

        shap_m = rep = perm = None
        if cfg.explain.enabled:
            with _Stage("explain", timings):
                shap_m, rep, perm = explain_to_dir(model, X_te, y_te, X_tr, names, cfg.explain, seeds.explain,
                                                   os.path.join(out_dir, "explain"), test.row_ids, to_mpa)

        config_echo = cfg.to_dict()
        config_echo["output_dir"] = None  # location and worker count do not affect results
        config_echo["jobs"] = None
        timings["jobs"] = cfg.jobs
        write_json(os.path.join(out_dir, "config.json"), {"config": config_echo, "hypothesis": hypothesis.to_dict()})
    finally:
        if executor is not None:
            executor.shutdown()
        write_json(os.path.join(out_dir, "timing.json"), timings)

    manifest = write_manifest(out_dir)
    return RunReport(
        config=config_echo, hypothesis=hypothesis.to_dict(),
        leaderboard=[(t.index, t.space, t.mean_rmse) for t in board], ensemble=ens.to_dict(), chosen=chosen,
        metrics=metrics, manifest=manifest, out_dir=out_dir, oof_rmse_best_single=single_rmse[best_single.index],
        oof_rmse_ensemble=ens.rmse, n_trials=len(trials), feature_names=names, model=model, pipeline=p, shap=shap_m,
        importance=None if rep is None else rep.importance, permutation=perm, trials=trials, vif=vif, golden=golden,
        golden_flags=flags)


__all__ = ["FeatureState", "RunReport", "explain_to_dir", "run", "write_manifest"]
