"""Synthetic transverse-stiffener fatigue data with a known generating formula.

The target follows a log-linear law in the strength at two million cycles::

    log10(ds_c) = base + r_slope * R + yield_slope * R_eH / 1000
                  + tig_uplift * [Post-Treat == TIG dressing]
                  + thickness_slope * log10(t_BP / 25) + attachment_slope * l_S / 100
                  [+ ratio_effect * log10(w_BP / t_BP)]
                  + N(0, noise_std_log10)

Cycles to failure are derived from a Basquin curve of slope ``m = 3`` through
the two-million-cycle point. Category frequencies are deliberately imbalanced
(axial loading, small scale and the as-welded state dominate).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .tabular import POST_TREAT_NONE, TARGET, TIG_DRESSING, ColumnSpec, Dataset, default_schema

PLANTED_COLLINEAR = "w_BP_plus_l_S"
BASQUIN_SLOPE = 3.0
N_REF = 2.0e6


@dataclass(frozen=True)
class SynthConfig:
    n_rows: int = 3000
    noise_std_log10: float = 0.02
    r_slope: float = -0.2
    tig_uplift: float = 0.12
    yield_slope: float = 0.15
    base_log10: float = 1.85
    thickness_slope: float = -0.10
    attachment_slope: float = -0.02
    ratio_effect: float = 0.6
    planted_collinear: bool = False
    planted_ratio_feature: bool = False
    missing_rates: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 10:
            raise ValueError("n_rows must be >= 10")
        if self.noise_std_log10 < 0:
            raise ValueError("noise_std_log10 must be >= 0")
        for col, rate in self.missing_rates.items():
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"missing rate for {col!r} must be in [0, 1)")

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _choice(rng, levels, probs, n):
    p = np.asarray(probs, float)
    return np.asarray(levels, dtype=object)[rng.choice(len(levels), size=n, p=p / p.sum())]


def _discrete(rng, values, probs, n, jitter, lo, hi):
    base = np.asarray(values, float)[rng.choice(len(values), size=n, p=np.asarray(probs) / np.sum(probs))]
    return np.clip(base * (1.0 + rng.uniform(-jitter, jitter, n)), lo, hi)


def target_terms(cfg: SynthConfig, cols) -> dict:
    """Additive contributions of the generating formula, keyed by driving feature."""
    tig = (np.asarray(cols["Post-Treat"]) == TIG_DRESSING).astype(float)
    terms = {
        "R": cfg.r_slope * cols["R"],
        "R_eH": cfg.yield_slope * cols["R_eH"] / 1000.0,
        "Post-Treat": cfg.tig_uplift * tig,
        "t_BP": cfg.thickness_slope * np.log10(cols["t_BP"] / 25.0),
        "l_S": cfg.attachment_slope * cols["l_S"] / 100.0,
    }
    if cfg.planted_ratio_feature:
        terms["w_BP/t_BP"] = cfg.ratio_effect * np.log10(cols["w_BP"] / cols["t_BP"])
    return terms


def target_log10(cfg: SynthConfig, cols) -> np.ndarray:
    """Noise-free generating formula, evaluated on generated feature columns."""
    out = cfg.base_log10
    for v in target_terms(cfg, cols).values():
        out = out + v
    return out


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_rows
    c = {}
    c["Scale"] = _choice(rng, ["small", "large"], [0.85, 0.15], n)
    c["Loading"] = _choice(rng, ["axial", "bending"], [0.85, 0.15], n)
    c["I_A"] = _choice(rng, ["no", "yes"], [0.9, 0.1], n)
    c["f_T"] = np.round(rng.uniform(2.0, 30.0, n), 1)
    c["R_eH"] = _discrete(rng, [235, 275, 355, 460, 690, 960], [0.15, 0.15, 0.35, 0.15, 0.12, 0.08], n, 0.03,
                          235.0, 1125.0)
    c["R_m"] = np.clip(np.maximum(275.0, c["R_eH"] * rng.uniform(1.17, 1.45, n)), 275.0, 1420.0)
    c["Pre-Treat"] = _choice(rng, ["none", "heat", "other"], [0.9, 0.05, 0.05], n)
    c["Post-Treat"] = _choice(
        rng,
        [POST_TREAT_NONE, TIG_DRESSING, "grinding", "hammer peening", "ultrasonic impact treatment"],
        [0.68, 0.16, 0.08, 0.05, 0.03],
        n,
    )
    c["Weld type"] = _choice(rng, ["Fillet Weld", "Butt Weld"], [0.85, 0.15], n)
    c["R_eH_filler"] = np.clip(c["R_eH"] * rng.uniform(1.0, 1.2, n), 200.0, 800.0)
    c["R_m_filler"] = np.clip(c["R_eH_filler"] * rng.uniform(1.1, 1.3, n), 300.0, 900.0)
    c["l_BP"] = _discrete(rng, [300, 500, 600, 800, 1000], [0.15, 0.4, 0.2, 0.15, 0.1], n, 0.05, 50.0, 2000.0)
    c["w_BP"] = _discrete(rng, [40, 50, 80, 100, 200], [0.35, 0.2, 0.2, 0.15, 0.1], n, 0.05, 10.0, 500.0)
    c["t_BP"] = _discrete(rng, [8, 10, 12, 16, 20, 25, 40], [0.1, 0.25, 0.2, 0.15, 0.15, 0.1, 0.05], n, 0.02,
                          1.0, 100.0)
    c["h_S"] = rng.uniform(20.0, 150.0, n)
    c["l_S"] = np.clip(c["w_BP"] * rng.uniform(0.4, 1.0, n), 10.0, 1000.0)
    c["t_S"] = _discrete(rng, [6, 8, 10, 12, 16, 20], [0.15, 0.25, 0.25, 0.15, 0.1, 0.1], n, 0.0, 1.0, 50.0)
    c["a_w"] = np.clip(rng.normal(5.0, 1.0, n), 3.0, 12.0)
    c["Corrosion"] = _choice(rng, ["no", "yes"], [0.95, 0.05], n)
    kind = rng.choice(5, size=n, p=[0.35, 0.3, 0.15, 0.1, 0.1])
    c["R"] = np.select([kind == 0, kind == 1, kind == 2, kind == 3], [-1.0, 0.0, 0.1, 0.5],
                       rng.uniform(-1.0, 0.8, n))
    c["delta_sigma_i"] = np.clip(np.exp(rng.normal(np.log(200.0), 0.45, n)), 50.0, 1125.0)
    c["Weld position"] = _choice(rng, ["PA", "PB", "PC", "PF"], [0.25, 0.6, 0.05, 0.1], n)
    c["Weld process"] = _choice(rng, ["111", "121", "135", "136", "141"], [0.15, 0.1, 0.6, 0.05, 0.1], n)

    clean = target_log10(cfg, c)
    spread = {k: float(np.std(v)) for k, v in target_terms(cfg, c).items()}
    noise = rng.normal(0.0, 1.0, n) * cfg.noise_std_log10
    c[TARGET] = 10.0 ** (clean + noise)
    life_scatter = rng.normal(0.0, 0.1, n)
    c["N_i"] = N_REF * (c[TARGET] / c["delta_sigma_i"]) ** BASQUIN_SLOPE * 10.0 ** life_scatter

    schema = default_schema()
    planted_noise = None
    if cfg.planted_collinear:
        planted_noise = rng.normal(0.0, 0.01, n)
        c[PLANTED_COLLINEAR] = c["w_BP"] + c["l_S"] + planted_noise
        schema = schema.with_column(ColumnSpec(PLANTED_COLLINEAR, "real", "mm", None,
                                               description="w_BP + l_S + noise"))

    missing = {}
    for col, rate in sorted(cfg.missing_rates.items()):
        if col in schema.target_names:
            raise ValueError("targets cannot carry missing values")
        schema[col]
        k = int(round(rate * n))
        mrng = np.random.default_rng([cfg.seed, 1 + sorted(cfg.missing_rates).index(col)])
        mask = np.zeros(n, bool)
        mask[mrng.choice(n, size=k, replace=False)] = True
        missing[col] = mask

    meta = {
        "generator": "basquin-log-linear",
        "config": asdict(cfg),
        "coefficients": {
            "base_log10": cfg.base_log10,
            "R": cfg.r_slope,
            "R_eH_per_1000MPa": cfg.yield_slope,
            "Post-Treat=" + TIG_DRESSING: cfg.tig_uplift,
            "log10(t_BP/25)": cfg.thickness_slope,
            "l_S/100": cfg.attachment_slope,
            "log10(w_BP/t_BP)": cfg.ratio_effect if cfg.planted_ratio_feature else 0.0,
        },
        "noise_std_log10": cfg.noise_std_log10,
        "basquin_slope": BASQUIN_SLOPE,
        "dominant_feature": max(spread, key=spread.get),
        "term_std_log10": spread,
    }
    return Dataset(schema, c, missing, meta=meta)


def write_synthetic(ds: Dataset, csv_path, meta_path=None):
    ds.to_csv(csv_path)
    if meta_path is not None:
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(dict(ds.meta), fh, indent=2, sort_keys=True)
