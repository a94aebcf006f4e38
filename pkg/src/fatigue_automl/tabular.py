"""Typed tabular data: column schema, CSV ingestion, EDA summary and the fixed split."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml

from .errors import EmptyColumn, MissingColumn, ParseError, RangeViolation, SchemaMismatch

KINDS = ("binary", "categorical", "real")
DEFAULT_MISSING_TOKENS = ("", "NA", "NaN", "-")


class _Missing:
    """Marker returned for masked cells."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __bool__(self):
        return False


MISSING = _Missing()


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    unit: str = "-"
    range: tuple[float, float] | None = None
    levels: tuple[str, ...] | None = None
    description: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"{self.name}: kind must be one of {KINDS}, got {self.kind!r}")
        if self.range is not None:
            lo, hi = self.range
            if not lo < hi:
                raise ValueError(f"{self.name}: range low must be < high")
            object.__setattr__(self, "range", (float(lo), float(hi)))
        if self.kind in ("binary", "categorical"):
            if not self.levels:
                raise ValueError(f"{self.name}: {self.kind} columns need levels")
            object.__setattr__(self, "levels", tuple(str(v) for v in self.levels))
            if self.kind == "binary" and len(self.levels) != 2:
                raise ValueError(f"{self.name}: binary columns need exactly two levels")

    @property
    def is_real(self):
        return self.kind == "real"

    def to_dict(self):
        d = {"name": self.name, "kind": self.kind, "unit": self.unit}
        if self.range is not None:
            d["range"] = list(self.range)
        if self.levels is not None:
            d["levels"] = list(self.levels)
        if self.description:
            d["description"] = self.description
        return d

    @classmethod
    def from_dict(cls, d):
        rng = d.get("range")
        levels = d.get("levels")
        return cls(
            name=str(d["name"]),
            kind=str(d["kind"]),
            unit=str(d.get("unit", "-")),
            range=tuple(rng) if rng is not None else None,
            levels=tuple(levels) if levels is not None else None,
            description=str(d.get("description", "")),
        )


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[ColumnSpec, ...]
    target_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "target_names", tuple(self.target_names))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        for t in self.target_names:
            if names.count(t) != 1:
                raise ValueError(f"target {t!r} must appear exactly once in the columns")
        object.__setattr__(self, "_index", {c.name: c for c in self.columns})

    def __getitem__(self, name) -> ColumnSpec:
        try:
            return self._index[name]
        except KeyError:
            raise MissingColumn(name) from None

    def __contains__(self, name):
        return name in self._index

    @property
    def names(self):
        return [c.name for c in self.columns]

    @property
    def feature_names(self):
        return [c.name for c in self.columns if c.name not in self.target_names]

    def with_column(self, spec: ColumnSpec) -> "FeatureSchema":
        if spec.name in self:
            cols = tuple(spec if c.name == spec.name else c for c in self.columns)
        else:
            cols = self.columns + (spec,)
        return FeatureSchema(cols, self.target_names)

    def subset(self, names: Iterable[str]) -> "FeatureSchema":
        keep = set(names)
        cols = tuple(c for c in self.columns if c.name in keep)
        return FeatureSchema(cols, tuple(t for t in self.target_names if t in keep))

    def to_dict(self):
        return {"columns": [c.to_dict() for c in self.columns], "targets": list(self.target_names)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(ColumnSpec.from_dict(c) for c in d["columns"]), tuple(d.get("targets", ())))

    def dump_yaml(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False, allow_unicode=True)

    @classmethod
    def load_yaml(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))


TARGET = "delta_sigma_c50"

POST_TREAT_NONE = "no weld post-treatment"
TIG_DRESSING = "TIG dressing"


def default_schema() -> FeatureSchema:
    """Transverse-stiffener fatigue columns with their units and admissible ranges.

    Two welding descriptors (position and process) are added on top of the
    tabulated feature list because the larger hypotheses need them.
    """
    C = ColumnSpec
    cols = (
        C("Scale", "binary", "-", levels=("small", "large"), description="Test scale"),
        C("Loading", "binary", "-", levels=("axial", "bending"), description="Loading type"),
        C("I_A", "binary", "-", levels=("no", "yes"), description="Variable amplitude"),
        C("f_T", "real", "Hz", (1.0, 32.0), description="Testing frequency"),
        C("R_eH", "real", "MPa", (235.0, 1125.0), description="Yield strength"),
        C("R_m", "real", "MPa", (275.0, 1420.0), description="Tensile strength"),
        C("Pre-Treat", "categorical", "-", levels=("none", "heat", "other"), description="Weld pre-treatment"),
        C(
            "Post-Treat",
            "categorical",
            "-",
            levels=(POST_TREAT_NONE, TIG_DRESSING, "grinding", "hammer peening", "ultrasonic impact treatment"),
            description="Weld post-treatment",
        ),
        C("Weld type", "categorical", "-", levels=("Fillet Weld", "Butt Weld"), description="Weld type"),
        C("R_eH_filler", "real", "MPa", (200.0, 800.0), description="Yield strength of filler"),
        C("R_m_filler", "real", "MPa", (300.0, 900.0), description="Tensile strength of filler"),
        C("l_BP", "real", "mm", (50.0, 2000.0), description="Base plate length"),
        C("w_BP", "real", "mm", (10.0, 500.0), description="Base plate width"),
        C("t_BP", "real", "mm", (1.0, 100.0), description="Base plate thickness"),
        C("h_S", "real", "mm", (5.0, 300.0), description="Stiffener height"),
        C("l_S", "real", "mm", (10.0, 1000.0), description="Stiffener length"),
        C("t_S", "real", "mm", (1.0, 50.0), description="Stiffener thickness"),
        C("a_w", "real", "mm", (1.0, 20.0), description="Weld throat thickness"),
        C("Corrosion", "binary", "-", levels=("no", "yes"), description="Corrosive conditions"),
        C("R", "real", "-", (-1.0, 0.8), description="Stress ratio"),
        C("delta_sigma_i", "real", "MPa", (50.0, 1125.0), description="Stress range"),
        C("Weld position", "categorical", "-", levels=("PA", "PB", "PC", "PF"), description="Welding position"),
        C("Weld process", "categorical", "-", levels=("111", "121", "135", "136", "141"), description="Welding process"),
        C("N_i", "real", "-", None, description="Cycles to failure"),
        C(TARGET, "real", "MPa", (0.0, 500.0), description="Fatigue strength at 2e6 cycles, 50% survival"),
    )
    return FeatureSchema(cols, ("N_i", TARGET))


class Dataset:
    """Immutable column-major table with a per-cell missingness mask.

    Real columns are stored as float64, binary and categorical columns as
    object arrays of strings. Masked cells hold a placeholder that is never
    handed out: readers get :data:`MISSING` or a masked array instead.
    """

    def __init__(self, schema: FeatureSchema, columns: Mapping[str, Sequence], missing=None, row_ids=None,
                 violations=(), meta=None):
        self.schema = schema
        missing = dict(missing or {})
        n = None
        cols, masks = {}, {}
        for spec in schema.columns:
            if spec.name not in columns:
                raise MissingColumn(spec.name)
            raw = columns[spec.name]
            mask = np.asarray(missing.get(spec.name, np.zeros(len(raw), dtype=bool)), dtype=bool).copy()
            if spec.is_real:
                vals = np.asarray(raw, dtype=np.float64).copy()
                mask |= np.isnan(vals)
                vals[mask] = np.nan
                if not np.all(np.isfinite(vals[~mask])):
                    raise SchemaMismatch(f"non-finite values in real column {spec.name!r}")
            else:
                vals = np.empty(len(raw), dtype=object)
                for i, v in enumerate(raw):
                    if mask[i] or v is None or v is MISSING:
                        mask[i] = True
                        vals[i] = None
                    else:
                        vals[i] = str(v)
            if n is None:
                n = len(vals)
            elif len(vals) != n or len(mask) != n:
                raise SchemaMismatch(f"column {spec.name!r} has {len(vals)} rows, expected {n}")
            vals.setflags(write=False)
            mask.setflags(write=False)
            cols[spec.name] = vals
            masks[spec.name] = mask
        self.n_rows = int(n or 0)
        self._cols = cols
        self._mask = masks
        ids = np.arange(self.n_rows, dtype=np.int64) if row_ids is None else np.asarray(row_ids, dtype=np.int64)
        if len(ids) != self.n_rows:
            raise SchemaMismatch("row_ids length does not match the number of rows")
        ids = ids.copy()
        ids.setflags(write=False)
        self.row_ids = ids
        self.violations = tuple(violations)
        self.meta = MappingProxyType(dict(meta or {}))

    def __len__(self):
        return self.n_rows

    def __repr__(self):
        return f"Dataset(n_rows={self.n_rows}, columns={len(self._cols)})"

    @property
    def names(self):
        return self.schema.names

    def missing_mask(self, name) -> np.ndarray:
        self.schema[name]
        return self._mask[name]

    def column(self, name) -> np.ma.MaskedArray:
        """Column as a read-only masked array; masked cells carry no value."""
        spec = self.schema[name]
        fill = np.nan if spec.is_real else None
        vals = self._cols[name].copy()
        vals[self._mask[name]] = fill
        out = np.ma.masked_array(vals, mask=self._mask[name].copy())
        return out

    def observed(self, name) -> np.ndarray:
        """Non-missing values of a column, in row order."""
        self.schema[name]
        return self._cols[name][~self._mask[name]].copy()

    def get(self, name, row):
        self.schema[name]
        if self._mask[name][row]:
            return MISSING
        v = self._cols[name][row]
        return float(v) if self.schema[name].is_real else v

    def _raw(self, name):
        # (values, mask) for in-package consumers that honour the mask
        return self._cols[name], self._mask[name]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        cols = {k: v[rows] for k, v in self._cols.items()}
        masks = {k: v[rows] for k, v in self._mask.items()}
        keep = set(int(r) for r in self.row_ids[rows])
        viol = [v for v in self.violations if v.row in keep]
        return Dataset(self.schema, cols, masks, self.row_ids[rows], viol, self.meta)

    def with_column(self, spec: ColumnSpec, values, missing=None) -> "Dataset":
        schema = self.schema.with_column(spec)
        cols = dict(self._cols)
        masks = dict(self._mask)
        cols[spec.name] = values
        masks[spec.name] = np.zeros(self.n_rows, bool) if missing is None else np.asarray(missing, bool)
        return Dataset(schema, cols, masks, self.row_ids, self.violations, self.meta)

    def select(self, names) -> "Dataset":
        schema = self.schema.subset(names)
        return Dataset(schema, {k: self._cols[k] for k in schema.names}, {k: self._mask[k] for k in schema.names},
                       self.row_ids, [v for v in self.violations if v.column in set(schema.names)], self.meta)

    def with_meta(self, **meta) -> "Dataset":
        merged = dict(self.meta)
        merged.update(meta)
        return Dataset(self.schema, self._cols, self._mask, self.row_ids, self.violations, merged)

    def to_csv(self, path, missing_token=""):
        names = self.schema.names
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for i in range(self.n_rows):
                row = []
                for name in names:
                    if self._mask[name][i]:
                        row.append(missing_token)
                    elif self.schema[name].is_real:
                        row.append(repr(float(self._cols[name][i])))
                    else:
                        row.append(self._cols[name][i])
                w.writerow(row)


def _check_domain(spec: ColumnSpec, row, value, out):
    if spec.is_real:
        if spec.range is not None and not (spec.range[0] <= value <= spec.range[1]):
            out.append(RangeViolation(row, spec.name, value))
    elif value not in spec.levels:
        out.append(RangeViolation(row, spec.name, value))


def load_csv(path, schema: FeatureSchema, missing_tokens=DEFAULT_MISSING_TOKENS, on_violation="collect") -> Dataset:
    """Read a comma-separated UTF-8 file with a header row into a :class:`Dataset`.

    Columns are matched by header name; extra columns are ignored. Cells equal
    to one of ``missing_tokens`` (after stripping whitespace) are masked.
    Out-of-range reals and unknown levels are kept and listed in
    ``Dataset.violations``; pass ``on_violation="raise"`` to fail on the first.
    """
    tokens = {t.strip() for t in missing_tokens}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file, header row expected") from None
        index = {h: i for i, h in enumerate(header)}
        for spec in schema.columns:
            if spec.name not in index:
                raise MissingColumn(spec.name)
        rows = list(reader)
    n = len(rows)
    cols, masks, violations = {}, {}, []
    for spec in schema.columns:
        j = index[spec.name]
        mask = np.zeros(n, dtype=bool)
        if spec.is_real:
            vals = np.full(n, np.nan)
        else:
            vals = [None] * n
        for i, row in enumerate(rows):
            cell = row[j].strip() if j < len(row) else ""
            if cell in tokens:
                mask[i] = True
                continue
            if spec.is_real:
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(i, spec.name, cell) from None
                if not math.isfinite(v):
                    raise ParseError(i, spec.name, cell)
                vals[i] = v
            else:
                v = cell
                vals[i] = v
            _check_domain(spec, i, v, violations)
            if violations and on_violation == "raise":
                raise violations[0]
        cols[spec.name] = vals
        masks[spec.name] = mask
    violations.sort(key=lambda v: (v.row, schema.names.index(v.column)))
    return Dataset(schema, cols, masks, violations=violations)


@dataclass
class ColumnSummary:
    name: str
    kind: str
    n: int
    n_missing: int
    missing_ratio: float
    stats: dict = field(default_factory=dict)
    levels: dict = field(default_factory=dict)
    hist_edges: list = field(default_factory=list)
    hist_counts: list = field(default_factory=list)
    empty: bool = False


@dataclass
class EdaReport:
    columns: dict
    warnings: list = field(default_factory=list)

    def missingness_rows(self):
        return [(c.name, round(100.0 * c.missing_ratio, 6)) for c in self.columns.values()]

    def stats_rows(self):
        out = []
        for c in self.columns.values():
            if c.kind == "real":
                s = c.stats
                out.append((c.name, c.kind, c.n - c.n_missing, s.get("min"), s.get("max"), s.get("mean"),
                            s.get("median"), s.get("std"), ""))
            else:
                lv = ";".join(f"{k}:{v}" for k, v in c.levels.items())
                out.append((c.name, c.kind, c.n - c.n_missing, None, None, None, None, None, lv))
        return out

    def hist_rows(self, name):
        c = self.columns[name]
        if c.kind == "real":
            e = c.hist_edges
            return [(e[i], e[i + 1], c.hist_counts[i]) for i in range(len(c.hist_counts))]
        return list(c.levels.items())

    def to_dict(self):
        return {
            name: {
                "kind": c.kind,
                "n": c.n,
                "n_missing": c.n_missing,
                "missing_ratio": c.missing_ratio,
                "stats": c.stats,
                "levels": c.levels,
                "hist_edges": c.hist_edges,
                "hist_counts": c.hist_counts,
                "empty": c.empty,
            }
            for name, c in self.columns.items()
        }


def eda_summary(ds: Dataset, bins: int = 20) -> EdaReport:
    """Descriptive statistics, missingness and histograms over observed cells."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    out, warnings = {}, []
    for spec in ds.schema.columns:
        vals, mask = ds._raw(spec.name)
        obs = vals[~mask]
        n_missing = int(mask.sum())
        summary = ColumnSummary(
            name=spec.name,
            kind=spec.kind,
            n=ds.n_rows,
            n_missing=n_missing,
            missing_ratio=n_missing / ds.n_rows if ds.n_rows else 0.0,
        )
        if len(obs) == 0:
            summary.empty = True
            warnings.append(EmptyColumn(spec.name))
        elif spec.is_real:
            obs = obs.astype(np.float64)
            summary.stats = {
                "min": float(obs.min()),
                "max": float(obs.max()),
                "mean": float(obs.mean()),
                "median": float(np.median(obs)),
                "std": float(obs.std(ddof=1)) if len(obs) > 1 else 0.0,
            }
            counts, edges = np.histogram(obs, bins=bins)
            summary.hist_edges = [float(e) for e in edges]
            summary.hist_counts = [int(c) for c in counts]
        else:
            known = list(spec.levels)
            extra = sorted(set(obs) - set(known))
            uniq, cnt = np.unique(obs.astype(str), return_counts=True)
            freq = dict(zip(uniq.tolist(), cnt.tolist()))
            summary.levels = {lv: int(freq.get(lv, 0)) for lv in known + extra}
        out[spec.name] = summary
    return EdaReport(out, warnings)


def train_test_split(ds: Dataset, test_fraction: float = 0.1, seed: int = 0):
    """Shuffle rows with ``seed`` and cut ``ceil(n * test_fraction)`` test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    n = ds.n_rows
    n_test = int(math.ceil(n * test_fraction - 1e-12))
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return ds.take(train_idx), ds.take(test_idx)


def split_indices(ds: Dataset, test_fraction: float = 0.1, seed: int = 0):
    """Row ids of the train and test partitions, for persisting the split."""
    tr, te = train_test_split(ds, test_fraction, seed)
    return tr.row_ids.copy(), te.row_ids.copy()


def take_row_ids(ds: Dataset, row_ids) -> Dataset:
    pos = {int(r): i for i, r in enumerate(ds.row_ids)}
    try:
        idx = [pos[int(r)] for r in row_ids]
    except KeyError as exc:
        raise SchemaMismatch(f"row id {exc.args[0]} not present in dataset") from None
    return ds.take(idx)
