"""Correlation, variance inflation screening, derived geometry and golden features."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._golden_kernels import score_candidates
from ._rng import derive_rng
from .errors import ConstantColumn, TooFewRows
from .tabular import FeatureSchema

VIF_INF = math.inf
_R2_SENTINEL = 1.0 - 1e-12
GOLDEN_DEPTH = 3
GOLDEN_MIN_LEAF = 5
DENOM_FLOOR = 1e-9


# -- correlation -----------------------------------------------------------------------------------------------


def correlation_matrix(X, names):
    """Pearson correlation of the non-constant columns.

    Returns ``(R, kept_names, constant)`` where ``constant`` lists
    :class:`ConstantColumn` reports for excluded columns.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise TooFewRows("correlation needs at least 2 rows")
    sd = X.std(axis=0)
    keep = sd > 0
    constant = [ConstantColumn(n) for n, k in zip(names, keep) if not k]
    Z = X[:, keep]
    Z = (Z - Z.mean(axis=0)) / Z.std(axis=0)
    R = (Z.T @ Z) / Z.shape[0]
    R = np.clip(0.5 * (R + R.T), -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R, [n for n, k in zip(names, keep) if k], constant


# -- VIF ---------------------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class VifEntry:
    feature: str
    r_squared: float
    vif: float

    def to_row(self):
        return (self.feature, self.r_squared, self.vif)


def _aux_r2(X, i):
    y = X[:, i]
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        return 1.0
    A = np.hstack([np.ones((X.shape[0], 1)), np.delete(X, i, axis=1)])
    beta = np.linalg.lstsq(A, y, rcond=None)[0]
    r = y - A @ beta
    return float(min(max(1.0 - float(r @ r) / tss, 0.0), 1.0))


def compute_vif(X, names):
    """Variance inflation factors from auxiliary OLS regressions with intercept.

    Entries are sorted by descending VIF (ties keep column order). A constant
    column, or one explained to within 1e-12 by the others, gets ``inf``.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n <= d:
        raise TooFewRows(f"VIF needs n > d (n={n}, d={d})")
    out = []
    for i in range(d):
        if d == 1:
            r2 = 0.0 if np.ptp(X[:, 0]) > 0 else 1.0
        else:
            r2 = _aux_r2(X, i)
        vif = VIF_INF if r2 >= _R2_SENTINEL else 1.0 / (1.0 - r2)
        out.append(VifEntry(names[i], r2, vif))
    order = sorted(range(d), key=lambda k: -out[k].vif)
    return [out[k] for k in order]


@dataclass
class VifScreen:
    kept: list
    dropped: list
    rounds: list

    def table_rows(self):
        """Long format ``(round, feature, vif)`` mirroring a per-round VIF table."""
        return [(r, e.feature, e.vif) for r, tab in enumerate(self.rounds, 1) for e in tab]


def vif_screen(X, names, threshold=5.0):
    """Drop the highest-VIF feature while any exceeds ``threshold``."""
    if threshold <= 1:
        raise ValueError("threshold must be > 1")
    X = np.asarray(X, dtype=np.float64)
    names = list(names)
    cols = list(range(len(names)))
    dropped, rounds = [], []
    while cols:
        table = compute_vif(X[:, cols], [names[c] for c in cols])
        rounds.append(table)
        top = table[0]
        if not top.vif > threshold:
            break
        j = [names[c] for c in cols].index(top.feature)
        dropped.append(top.feature)
        del cols[j]
    return VifScreen([names[c] for c in cols], dropped, rounds)


def derive_overhang(w_BP, l_S):
    """Overhang of the base plate beyond the attachment: ``(w_BP - l_S) / 2``."""
    return (np.asarray(w_BP, dtype=np.float64) - np.asarray(l_S, dtype=np.float64)) / 2.0


# -- golden features ---------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class GoldenFeature:
    lhs: str
    rhs: str
    op: str
    score: float = float("nan")

    def __post_init__(self):
        if self.lhs == self.rhs:
            raise ValueError("golden feature operands must differ")
        if self.op not in ("subtract", "divide"):
            raise ValueError(f"unknown op {self.op!r}")

    @property
    def recipe(self):
        return f"{self.lhs} {self.op} {self.rhs}"

    @property
    def name(self):
        sym = "-" if self.op == "subtract" else "/"
        return f"({self.lhs}{sym}{self.rhs})"

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "op": self.op, "score": self.score, "recipe": self.recipe}


def guarded_denominator(d):
    d = np.asarray(d, dtype=np.float64)
    return np.where(d < 0, -1.0, 1.0) * np.maximum(np.abs(d), DENOM_FLOOR)


def _combine(a, b, op):
    return a - b if op == "subtract" else a / guarded_denominator(b)


def golden_values(gf: GoldenFeature, X, names):
    idx = {n: i for i, n in enumerate(names)}
    X = np.asarray(X, dtype=np.float64)
    return _combine(X[:, idx[gf.lhs]], X[:, idx[gf.rhs]], gf.op)


def golden_count(d):
    """round(5% of d) clamped to [5, 50], rounding halves up."""
    return int(min(50, max(5, (5 * int(d) + 50) // 100)))


def golden_candidates(names):
    """Candidate recipes: one subtraction and both divisions per unordered pair."""
    out = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            out.append((i, j, "subtract"))
            out.append((i, j, "divide"))
            out.append((j, i, "divide"))
    return out


def golden_split(n, seed):
    """Seeded 50/50 partition shared by every candidate."""
    perm = derive_rng(seed, "golden-split").permutation(n)
    h = n // 2
    return np.sort(perm[:h]), np.sort(perm[h:])


def score_golden(X, y, names, seed=0):
    """Score every candidate; returns all of them sorted by ascending score-half MSE."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if d < 2:
        raise ValueError("golden features need at least 2 columns")
    if n < 20:
        raise TooFewRows("golden features need at least 20 rows")
    cands = golden_candidates(names)
    C = np.empty((n, len(cands)))
    for k, (i, j, op) in enumerate(cands):
        C[:, k] = _combine(X[:, i], X[:, j], op)
    tr, sc = golden_split(n, seed)
    scores = score_candidates(np.ascontiguousarray(C[tr]), np.ascontiguousarray(y[tr]),
                              np.ascontiguousarray(C[sc]), np.ascontiguousarray(y[sc]), GOLDEN_DEPTH, GOLDEN_MIN_LEAF)
    order = np.argsort(scores, kind="stable")
    return [GoldenFeature(names[cands[k][0]], names[cands[k][1]], cands[k][2], float(scores[k])) for k in order]


def discover_golden(X, y, names, seed=0, count=None):
    """Best ``count`` candidates (default :func:`golden_count` of the column count)."""
    ranked = score_golden(X, y, names, seed)
    k = golden_count(len(names)) if count is None else int(count)
    return ranked[: min(k, len(ranked))]


# -- audit -------------------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditFlag:
    feature: GoldenFeature
    reason: str

    def to_dict(self):
        return {"recipe": self.feature.recipe, "reason": self.reason}


def _operand(name, schema: FeatureSchema):
    """(source column spec, is_indicator) for an encoded feature name."""
    if name in schema:
        spec = schema[name]
        return spec, spec.kind != "real"
    col, sep, _ = name.partition("=")
    spec = schema[col]
    return spec, True


def audit_golden(features, schema: FeatureSchema, policy="strict"):
    """Flag recipes that break unit or kind consistency.

    ``strict`` flags every unit difference; ``lenient`` tolerates unit
    differences for division, where a ratio of unlike quantities can still
    be meaningful.
    """
    if policy not in ("strict", "lenient"):
        raise ValueError(f"unknown audit policy {policy!r}")
    flags = []
    for gf in features:
        a, ia = _operand(gf.lhs, schema)
        b, ib = _operand(gf.rhs, schema)
        if ia != ib:
            flags.append(AuditFlag(gf, "indicator_arithmetic"))
        if a.kind != b.kind:
            flags.append(AuditFlag(gf, "mixed_kind"))
        if a.unit != b.unit and (policy == "strict" or gf.op == "subtract"):
            flags.append(AuditFlag(gf, "unit_mismatch"))
    return flags


def flagged_recipes(flags):
    return sorted({f.feature.recipe for f in flags})
