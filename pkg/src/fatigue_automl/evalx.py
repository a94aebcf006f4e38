"""Regression metrics, parity bands and range-restricted evaluation (all in MPa)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyBand, LengthMismatch

DEFAULT_BAND = (0.0, 150.0)
BAND_FACTORS = (1.5, 2.0)


@dataclass(frozen=True)
class Metrics:
    n: int
    mae: float
    mse: float
    rmse: float
    r2: float
    err_std: float

    def to_dict(self):
        return asdict(self)


def _pair(y, yhat):
    y = np.asarray(y, dtype=np.float64).ravel()
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    if y.shape != yhat.shape:
        raise LengthMismatch(f"{y.size} targets vs {yhat.size} predictions")
    if y.size < 2:
        raise LengthMismatch("need at least 2 rows")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yhat))):
        raise ValueError("metrics need finite inputs")
    return y, yhat


def regression_metrics(y, yhat) -> Metrics:
    """MAE, MSE, RMSE, R^2 and the residual standard deviation (n - 1).

    R^2 of a constant target is defined as 1 for a perfect fit and 0 otherwise.
    """
    y, yhat = _pair(y, yhat)
    e = y - yhat
    mse = float(np.mean(e * e))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(e * e))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res == 0 else 0.0
    return Metrics(int(y.size), float(np.mean(np.abs(e))), mse, math.sqrt(mse), r2, float(np.std(e, ddof=1)))


def banded_metrics(y, yhat, band=DEFAULT_BAND) -> Metrics:
    """Metrics over rows whose actual value lies in the closed ``band``."""
    lo, hi = band
    if not lo < hi:
        raise ValueError("band.low must be < band.high")
    y, yhat = _pair(y, yhat)
    keep = (y >= lo) & (y <= hi)
    if keep.sum() == 0:
        raise EmptyBand(f"no rows with actual value in [{lo}, {hi}]")
    if keep.sum() < 2:
        raise EmptyBand(f"only one row with actual value in [{lo}, {hi}]")
    return regression_metrics(y[keep], yhat[keep])


@dataclass(frozen=True)
class ParityTable:
    actual: np.ndarray
    predicted: np.ndarray
    residual: np.ndarray
    err_std: float
    inside: dict  # factor -> boolean mask (closed band)

    @property
    def counts(self):
        return {k: int(v.sum()) for k, v in self.inside.items()}

    def rows(self):
        out = []
        for i in range(self.actual.size):
            out.append((float(self.actual[i]), float(self.predicted[i]), float(self.residual[i]),
                        *(bool(self.inside[f][i]) for f in BAND_FACTORS)))
        return out

    @staticmethod
    def header():
        return ("actual", "predicted", "residual", *(f"inside_{f:g}sigma" for f in BAND_FACTORS))


def parity_table(y, yhat) -> ParityTable:
    """Residuals and membership of the +/-1.5 and +/-2 error-std bands (boundaries count as inside)."""
    y, yhat = _pair(y, yhat)
    r = y - yhat
    s = float(np.std(r, ddof=1))
    inside = {f: np.abs(r) <= f * s for f in BAND_FACTORS}
    return ParityTable(y, yhat, r, s, inside)


def metrics_table(train, test, band=DEFAULT_BAND):
    """The six headline quantities (R^2, RMSE, MAE on train and test) for the full and banded range.

    ``train`` and ``test`` are ``(y, yhat)`` pairs in MPa.
    """
    out = {}
    for rng_name, fn in (("full", regression_metrics), ("band", lambda a, b: banded_metrics(a, b, band))):
        block = {}
        for part, (y, yhat) in (("train", train), ("test", test)):
            try:
                block[part] = fn(y, yhat).to_dict()
            except EmptyBand as exc:
                block[part] = {"error": str(exc)}
        out[rng_name] = block
    out["band_limits"] = list(band)
    return out
