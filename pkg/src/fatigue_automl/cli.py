"""Command line: ``fatigue-automl {synth,eda,train,explain,report} --config run.yaml``."""
from __future__ import annotations

import argparse
import json
import os
import sys

from ._io import safe_name, write_csv, write_json
from .automl import FeatureState, explain_to_dir, hypothesis, run, write_manifest
from .config import RunConfig
from .errors import FatigueAutoMLError, StageError
from .learners import load_model
from .preprocess import FittedPipeline, inverse_target
from .synth import SynthConfig, generate_synthetic, write_synthetic
from .tabular import FeatureSchema, default_schema, eda_summary, load_csv, train_test_split


class CliError(Exception):
    pass


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed_override is not None:
        cfg = cfg.with_seed(args.seed_override)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.budget_seconds is not None:
        cfg.hpo.budget_seconds = args.budget_seconds
    return cfg


def _schema(cfg: RunConfig):
    if cfg.data.schema:
        return FeatureSchema.load_yaml(cfg.data.schema)
    return default_schema()


def load_dataset(cfg: RunConfig):
    """The configured input: a CSV file or, failing that, a synthetic dataset."""
    if cfg.data.csv:
        if not os.path.exists(cfg.data.csv):
            raise CliError(f"[ingest] input file not found: {cfg.data.csv}")
        return load_csv(cfg.data.csv, _schema(cfg), tuple(cfg.data.missing_tokens))
    if cfg.data.synth is not None:
        return generate_synthetic(SynthConfig.from_dict(cfg.data.synth))
    raise CliError("[ingest] config names neither data.csv nor data.synth")


def split(cfg: RunConfig, ds):
    return train_test_split(ds, cfg.data.test_fraction, cfg.seeds.split)


def cmd_synth(cfg: RunConfig, args):
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    ds = generate_synthetic(SynthConfig.from_dict(cfg.data.synth or {}))
    write_synthetic(ds, os.path.join(out, "synthetic.csv"), os.path.join(out, "synthetic_meta.json"))
    if ds.schema.names != default_schema().names:
        ds.schema.dump_yaml(os.path.join(out, "schema.yaml"))
    print(f"wrote {ds.n_rows} rows to {os.path.join(out, 'synthetic.csv')}")
    return 0


def cmd_eda(cfg: RunConfig, args):
    ds = load_dataset(cfg)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    rep = eda_summary(ds, args.bins)
    write_csv(os.path.join(out, "missingness.csv"), ["column", "percent"], rep.missingness_rows())
    write_csv(os.path.join(out, "stats.csv"), ["column", "kind", "n_observed", "min", "max", "mean", "median", "std",
                                               "levels"], rep.stats_rows())
    for name, c in rep.columns.items():
        header = ["low", "high", "count"] if c.kind == "real" else ["level", "count"]
        write_csv(os.path.join(out, f"hist_{safe_name(name)}.csv"), header, rep.hist_rows(name))
    write_json(os.path.join(out, "eda.json"), rep.to_dict())
    if ds.violations:
        write_csv(os.path.join(out, "violations.csv"), ["row", "column", "value"],
                  [(v.row, v.column, v.value) for v in ds.violations])
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"EDA for {ds.n_rows} rows written to {out}")
    return 0


def cmd_train(cfg: RunConfig, args):
    ds = load_dataset(cfg)
    tr, te = split(cfg, ds)
    hyp = hypothesis(cfg.hypothesis, tuple(cfg.extra_features))
    try:
        rep = run(tr, te, hyp, cfg, cfg.output_dir)
    except StageError as exc:
        if os.path.isdir(cfg.output_dir):
            with open(os.path.join(cfg.output_dir, "FAILED"), "w", encoding="utf-8") as fh:
                fh.write(str(exc) + "\n")
        raise
    m = rep.metrics
    print(f"chosen model: {rep.chosen}  ({rep.n_trials} trials)")
    for rng in ("full", "band"):
        for part in ("train", "test"):
            d = m[rng][part]
            if "error" in d:
                print(f"  {rng:4s} {part:5s}  {d['error']}")
            else:
                print(f"  {rng:4s} {part:5s}  R2={d['r2']:.4f}  RMSE={d['rmse']:.2f} MPa  MAE={d['mae']:.2f} MPa")
    return 0


def cmd_explain(cfg: RunConfig, args):
    if not args.model or not os.path.isfile(args.model):
        raise CliError(f"[explain] model file not found: {args.model}")
    try:
        model = load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"[explain] cannot read model {args.model}: {exc}") from exc
    run_dir = os.path.dirname(os.path.dirname(os.path.abspath(args.model)))
    p = FittedPipeline.load(os.path.join(run_dir, "pipeline.json"))
    with open(os.path.join(run_dir, "features.json"), encoding="utf-8") as fh:
        state = FeatureState.from_dict(json.load(fh))
    ds = load_dataset(cfg)
    tr, te = split(cfg, ds)
    X_tr, _ = state.matrix(p, tr)
    X_te, y_te = state.matrix(p, te)
    out = args.out or os.path.join(run_dir, "explain_" + safe_name(os.path.splitext(os.path.basename(args.model))[0]))
    explain_to_dir(model, X_te, y_te, X_tr, state.names, cfg.explain, cfg.seeds.explain, out, te.row_ids,
                   lambda v: inverse_target(p, v))
    write_manifest(out)
    print(f"explanations written to {out}")
    return 0


def cmd_report(cfg: RunConfig, args):
    run_dir = args.run_dir or cfg.output_dir
    path = os.path.join(run_dir, "metrics.json")
    if not os.path.isfile(path):
        raise CliError(f"[report] no metrics.json in {run_dir}")
    with open(path, encoding="utf-8") as fh:
        m = json.load(fh)
    lo, hi = m["band_limits"]
    lines = ["| Range | R2 Train | R2 Test | RMSE Train [MPa] | RMSE Test [MPa] | MAE Train [MPa] | MAE Test [MPa] |",
             "|---|---|---|---|---|---|---|"]
    for key, label in (("full", "Full"), ("band", f"{lo:g} - {hi:g} MPa")):
        tr, te = m[key]["train"], m[key]["test"]
        if "error" in tr or "error" in te:
            lines.append(f"| {label} | n/a | n/a | n/a | n/a | n/a | n/a |")
            continue
        lines.append(f"| {label} | {tr['r2']:.4f} | {te['r2']:.4f} | {tr['rmse']:.2f} | {te['rmse']:.2f} | "
                     f"{tr['mae']:.2f} | {te['mae']:.2f} |")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(run_dir, "report.md"), "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


COMMANDS = {"synth": cmd_synth, "eda": cmd_eda, "train": cmd_train, "explain": cmd_explain, "report": cmd_report}


def build_parser():
    ap = argparse.ArgumentParser(prog="fatigue-automl", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML or JSON run configuration")
        sp.add_argument("--seed-override", type=int, help="replace every seed in the config")
        sp.add_argument("--jobs", type=int, help="worker threads for the search")
        sp.add_argument("--budget-seconds", type=float, help="search time budget")
        if name == "eda":
            sp.add_argument("--bins", type=int, default=20)
        if name == "explain":
            sp.add_argument("--model", help="fitted model file (inside a run directory)")
            sp.add_argument("--out", help="output directory")
        if name == "report":
            sp.add_argument("--run-dir", help="run directory (default: config output_dir)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (CliError, FatigueAutoMLError, FileExistsError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
