"""Fit-on-train preprocessing: imputation, encoding, target power transform, scaling."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._rng import cell_hash
from .errors import AllMissingColumn, DegenerateInput, SchemaMismatch
from .tabular import POST_TREAT_NONE, TARGET, Dataset, FeatureSchema

STRATEGIES = ("median", "random_sample", "constant")
LAMBDA_BOUNDS = (-5.0, 5.0)
_EPS_LAMBDA = 1e-12


@dataclass(frozen=True)
class ImputeSpec:
    column: str
    strategy: str
    value: object = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown imputation strategy {self.strategy!r}")
        if self.strategy == "constant" and self.value is None:
            raise ValueError("constant imputation needs a value")

    @classmethod
    def constant(cls, column, value):
        return cls(column, "constant", value)


def default_impute_specs(schema: FeatureSchema):
    """Per-column strategy defaults for the transverse-stiffener schema."""
    random_cols = {"R_eH", "R_m", "R", "f_T", "l_BP", "R_eH_filler", "R_m_filler"}
    constants = {
        "Post-Treat": POST_TREAT_NONE,
        "Weld type": "Fillet Weld",
        "Pre-Treat": "none",
        "Weld position": "PB",
        "Weld process": "135",
    }
    specs = []
    for c in schema.columns:
        if c.name in schema.target_names:
            continue
        if c.name in constants:
            specs.append(ImputeSpec.constant(c.name, constants[c.name]))
        elif c.name in random_cols:
            specs.append(ImputeSpec(c.name, "random_sample"))
        elif c.kind in ("real", "binary"):
            specs.append(ImputeSpec(c.name, "median"))
        else:
            specs.append(ImputeSpec(c.name, "random_sample"))
    return specs


# --- Yeo-Johnson -----------------------------------------------------------

def yj_forward(x, lmbda):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    xp, xn = x[pos], x[~pos]
    if abs(lmbda) < _EPS_LAMBDA:
        out[pos] = np.log1p(xp)
    else:
        out[pos] = np.expm1(lmbda * np.log1p(xp)) / lmbda
    if abs(lmbda - 2.0) < _EPS_LAMBDA:
        out[~pos] = -np.log1p(-xn)
    else:
        out[~pos] = -np.expm1((2.0 - lmbda) * np.log1p(-xn)) / (2.0 - lmbda)
    return out


def yj_inverse(y, lmbda):
    y = np.asarray(y, dtype=np.float64)
    out = np.empty_like(y)
    pos = y >= 0
    yp, yn = y[pos], y[~pos]
    if abs(lmbda) < _EPS_LAMBDA:
        out[pos] = np.expm1(yp)
    else:
        out[pos] = np.expm1(np.log1p(lmbda * yp) / lmbda)
    if abs(lmbda - 2.0) < _EPS_LAMBDA:
        out[~pos] = -np.expm1(-yn)
    else:
        out[~pos] = -np.expm1(np.log1p(-(2.0 - lmbda) * yn) / (2.0 - lmbda))
    return out


def yj_transform(values, lmbda, direction="forward"):
    """Yeo-Johnson power transform (``direction`` is ``"forward"`` or ``"inverse"``)."""
    if direction == "forward":
        return yj_forward(values, lmbda)
    if direction == "inverse":
        return yj_inverse(values, lmbda)
    raise ValueError("direction must be 'forward' or 'inverse'")


def yj_log_likelihood(x, lmbda):
    """Profile log-likelihood of a normal fit to the transformed sample."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    t = yj_forward(x, lmbda)
    var = t.var()
    if not var > 0:
        return -np.inf
    return -0.5 * n * math.log(var) + (lmbda - 1.0) * float(np.sum(np.sign(x) * np.log1p(np.abs(x))))


def _golden_max(f, a, b, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def yj_fit_lambda(values, bounds=LAMBDA_BOUNDS, tol=1e-6) -> float:
    """Maximum-likelihood Yeo-Johnson exponent.

    A coarse scan brackets the maximum, golden-section search refines it to
    ``tol``. When lambda = 1 scores as well as the optimum (within rounding),
    1 is returned.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size < 3:
        raise DegenerateInput("need at least 3 values")
    if not np.all(np.isfinite(x)):
        raise DegenerateInput("values must be finite")
    if np.ptp(x) == 0:
        raise DegenerateInput("constant input has no defined exponent")
    lo, hi = bounds
    f = lambda lam: yj_log_likelihood(x, lam)  # noqa: E731
    grid = np.linspace(lo, hi, 41)
    vals = np.array([f(g) for g in grid])
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    lam = _golden_max(f, a, b, tol)
    best = f(lam)
    one = f(1.0)
    if one >= best - 1e-12 * max(1.0, abs(best)):
        return 1.0
    return float(lam)


# --- pipeline ----------------------------------------------------------------

@dataclass
class FittedPipeline:
    features: list
    target: str
    imputers: dict
    encoders: dict
    feature_names: list
    feature_moments: dict
    target_transform: dict
    kinds: dict = field(default_factory=dict)
    units: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self):
        return {
            "format_version": 1,
            "features": list(self.features),
            "target": self.target,
            "imputers": self.imputers,
            "encoders": self.encoders,
            "feature_names": list(self.feature_names),
            "feature_moments": {k: list(v) for k, v in self.feature_moments.items()},
            "target_transform": self.target_transform,
            "kinds": self.kinds,
            "units": self.units,
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d):
        return cls(
            features=list(d["features"]),
            target=d["target"],
            imputers=d["imputers"],
            encoders=d["encoders"],
            feature_names=list(d["feature_names"]),
            feature_moments={k: tuple(v) for k, v in d["feature_moments"].items()},
            target_transform=d["target_transform"],
            kinds=d.get("kinds", {}),
            units=d.get("units", {}),
            seed=d.get("seed", 0),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def source_of(self, encoded_name):
        """Schema column an encoded feature name was derived from."""
        if encoded_name in self.features:
            return encoded_name
        col = encoded_name.split("=", 1)[0]
        if col in self.features:
            return col
        raise KeyError(encoded_name)


def _level_order(levels_seen, schema_levels):
    known = [lv for lv in schema_levels if lv in levels_seen]
    return known + sorted(set(levels_seen) - set(known))


def fit_pipeline(train: Dataset, impute_specs=None, target=TARGET, seed=0, features=None) -> FittedPipeline:
    """Fit imputers, encoders, the target transform and feature moments on ``train``.

    ``features`` restricts the pipeline to a subset of schema columns (default:
    every non-target column). Only columns in use are fitted, so sparse
    columns outside the active feature set never need an imputer.
    """
    schema = train.schema
    if target not in schema:
        raise SchemaMismatch(f"target {target!r} not in dataset")
    feats = list(features) if features is not None else schema.feature_names
    for f in feats:
        schema[f]
    specs = {s.column: s for s in (impute_specs if impute_specs is not None else default_impute_specs(schema))}
    for name in specs:
        schema[name]

    imputers, encoders, kinds, units = {}, {}, {}, {}
    feature_names, moments = [], {}
    raw_cols = {}
    for name in feats:
        spec = schema[name]
        kinds[name] = spec.kind
        units[name] = spec.unit
        vals, mask = train._raw(name)
        obs = vals[~mask]
        imp = specs.get(name)
        if imp is None:
            imp = ImputeSpec(name, "median" if spec.kind != "categorical" else "random_sample")
        if imp.strategy in ("median", "random_sample") and len(obs) == 0:
            raise AllMissingColumn(name)
        if imp.strategy == "median":
            if spec.kind == "categorical":
                raise ValueError(f"median imputation is undefined for categorical column {name!r}")
            if spec.kind == "real":
                imputers[name] = {"strategy": "median", "value": float(np.median(obs.astype(float)))}
            else:
                ones = np.sum(obs == spec.levels[1])
                imputers[name] = {"strategy": "median",
                                  "value": spec.levels[1] if ones * 2 > len(obs) else spec.levels[0]}
        elif imp.strategy == "random_sample":
            pool = sorted(obs.astype(float).tolist()) if spec.is_real else sorted(str(v) for v in obs)
            imputers[name] = {"strategy": "random_sample", "pool": pool}
        else:
            value = float(imp.value) if spec.is_real else str(imp.value)
            imputers[name] = {"strategy": "constant", "value": value}

        filled = _impute_column(imputers[name], vals, mask, spec.is_real, seed, name, train.row_ids)
        raw_cols[name] = filled
        if spec.kind == "real":
            feature_names.append(name)
            x = filled.astype(float)
            mu = float(x.mean())
            sd = float(x.std(ddof=1)) if len(x) > 1 else 0.0
            if not sd > 0:
                warnings.warn(f"feature {name!r} is constant on the training rows; scale set to 1")
                sd = 1.0
            moments[name] = (mu, sd)
        elif spec.kind == "binary":
            encoders[name] = {"kind": "binary", "levels": list(spec.levels)}
            feature_names.append(name)
        else:
            levels = _level_order(set(filled.tolist()), spec.levels)
            encoders[name] = {"kind": "onehot", "levels": levels}
            feature_names.extend(f"{name}={lv}" for lv in levels)

    tvals, tmask = train._raw(target)
    if tmask.any():
        raise SchemaMismatch(f"target {target!r} has missing values in the training rows")
    y = np.asarray(tvals, dtype=float)
    if np.any(y <= 0):
        raise DegenerateInput("target must be positive for the decadic log")
    ylog = np.log10(y)
    lam = yj_fit_lambda(ylog)
    t = yj_forward(ylog, lam)
    mu_t = float(t.mean())
    sd_t = float(t.std(ddof=1))
    if not sd_t > 0:
        raise DegenerateInput("transformed target has zero spread")
    return FittedPipeline(
        features=feats,
        target=target,
        imputers=imputers,
        encoders=encoders,
        feature_names=feature_names,
        feature_moments=moments,
        target_transform={"log10": True, "yj_lambda": float(lam), "mu": mu_t, "sigma": sd_t},
        kinds=kinds,
        units=units,
        seed=int(seed),
    )


def _impute_column(imp, vals, mask, is_real, seed, column, row_ids):
    out = vals.astype(float if is_real else object).copy()
    if not mask.any():
        return out
    if imp["strategy"] in ("median", "constant"):
        out[mask] = imp["value"]
    else:
        pool = imp["pool"]
        h = cell_hash(seed, column, row_ids[mask])
        idx = (h % np.uint64(len(pool))).astype(np.int64)
        picked = np.asarray(pool, dtype=float if is_real else object)[idx]
        out[mask] = picked
    return out


def apply_pipeline(p: FittedPipeline, ds: Dataset, seed=None, standardize=True):
    """Impute, encode and scale ``ds``; returns ``(X, y, feature_names)``.

    ``y`` is the transformed target, or ``None`` when the target column is
    absent. Random-sample draws are keyed on (seed, column, row id).
    """
    seed = p.seed if seed is None else seed
    n = ds.n_rows
    blocks = []
    for name in p.features:
        if name not in ds.schema:
            raise SchemaMismatch(f"column {name!r} missing from dataset")
        if ds.schema[name].kind != p.kinds.get(name, ds.schema[name].kind):
            raise SchemaMismatch(f"column {name!r} changed kind")
        vals, mask = ds._raw(name)
        kind = p.kinds[name]
        filled = _impute_column(p.imputers[name], vals, mask, kind == "real", seed, name, ds.row_ids)
        if kind == "real":
            x = filled.astype(float)
            if standardize:
                mu, sd = p.feature_moments[name]
                x = (x - mu) / sd
            blocks.append(x[:, None])
        elif kind == "binary":
            blocks.append((filled == p.encoders[name]["levels"][1]).astype(float)[:, None])
        else:
            levels = p.encoders[name]["levels"]
            block = np.zeros((n, len(levels)))
            lookup = {lv: j for j, lv in enumerate(levels)}
            for i, v in enumerate(filled):
                j = lookup.get(v)
                if j is not None:
                    block[i, j] = 1.0
            blocks.append(block)
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    y = None
    if p.target in ds.schema:
        tvals, tmask = ds._raw(p.target)
        if not tmask.any():
            y = transform_target(p, np.asarray(tvals, dtype=float))
    return X, y, list(p.feature_names)


def transform_target(p: FittedPipeline, y_mpa):
    tt = p.target_transform
    t = np.log10(np.asarray(y_mpa, dtype=float)) if tt["log10"] else np.asarray(y_mpa, dtype=float)
    return (yj_forward(t, tt["yj_lambda"]) - tt["mu"]) / tt["sigma"]


def inverse_target(p: FittedPipeline, y_transformed):
    """Map transformed predictions back to MPa: unscale, invert Yeo-Johnson, 10**."""
    tt = p.target_transform
    z = np.asarray(y_transformed, dtype=float) * tt["sigma"] + tt["mu"]
    t = yj_inverse(z, tt["yj_lambda"])
    return 10.0 ** t if tt["log10"] else t
