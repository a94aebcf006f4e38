import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fatigue_automl.errors import EmptyBand, LengthMismatch
from fatigue_automl.evalx import banded_metrics, metrics_table, parity_table, regression_metrics
from fatigue_automl.learners import LearnerSpec, fit


def test_hand_computed_case():
    m = regression_metrics([0.0, 2.0], [1.0, 1.0])
    assert (m.mae, m.mse, m.rmse, m.r2) == (1.0, 1.0, 1.0, 0.0)


def test_second_hand_case():
    m = regression_metrics([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 6.0])
    assert m.mae == 0.5 and m.mse == 1.0 and m.rmse == 1.0
    assert m.r2 == pytest.approx(1 - 4 / 5)
    assert m.err_std == pytest.approx(np.std([0, 0, 0, -2], ddof=1))


def test_constant_target_r2():
    assert regression_metrics([2.0, 2.0], [2.0, 2.0]).r2 == 1.0
    assert regression_metrics([2.0, 2.0], [1.0, 2.0]).r2 == 0.0


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(2, 50), elements=finite), st.integers(0, 2**31))
def test_rmse_squared_is_mse(y, seed):
    yhat = y + np.random.default_rng(seed).normal(size=y.size)
    m = regression_metrics(y, yhat)
    assert abs(m.rmse ** 2 - m.mse) <= 4 * np.finfo(float).eps * max(m.mse, 1e-300)


def test_baseline_r2_zero_on_training_rows():
    rng = np.random.default_rng(0)
    for _ in range(20):
        X = rng.normal(size=(50, 2))
        y = rng.normal(100, 30, size=50)
        p = fit(LearnerSpec("baseline"), X, y).predict(X)
        assert abs(regression_metrics(y, p).r2) < 1e-9


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        regression_metrics([1.0, 2.0], [1.0])


def test_band_filters_on_actual_value_inclusive():
    y = np.array([0.0, 100.0, 150.0, 151.0, 300.0])
    yhat = np.array([10.0, 90.0, 150.0, 0.0, 0.0])
    m = banded_metrics(y, yhat)
    assert m.n == 3
    assert m.mae == pytest.approx(20.0 / 3)
    with pytest.raises(EmptyBand):
        banded_metrics([200.0, 300.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        banded_metrics(y, yhat, (5.0, 5.0))


def test_parity_bands_closed():
    y = np.array([0.0, 0.0, 0.0, 0.0, 0.0])
    yhat = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    t = parity_table(y, yhat)
    s = np.std(yhat, ddof=1)
    assert t.err_std == pytest.approx(s)
    assert t.inside[1.5].tolist() == (np.abs(yhat) <= 1.5 * s).tolist()
    assert t.counts[2.0] >= t.counts[1.5]
    assert len(t.rows()[0]) == len(t.header())


def test_metrics_table_reports_empty_band():
    tr = (np.array([100.0, 120.0, 140.0]), np.array([101.0, 118.0, 141.0]))
    te = (np.array([200.0, 250.0]), np.array([190.0, 260.0]))
    out = metrics_table(tr, te)
    assert out["band"]["train"]["n"] == 3
    assert "error" in out["band"]["test"]
    assert out["full"]["test"]["rmse"] == pytest.approx(10.0)
