import json

import numpy as np
import pytest

from fatigue_automl.synth import PLANTED_COLLINEAR, SynthConfig, generate_synthetic, target_log10, write_synthetic
from fatigue_automl.tabular import TARGET, TIG_DRESSING, default_schema, load_csv


def test_deterministic_and_seed_sensitive():
    a = generate_synthetic(SynthConfig(n_rows=200, seed=3))
    b = generate_synthetic(SynthConfig(n_rows=200, seed=3))
    c = generate_synthetic(SynthConfig(n_rows=200, seed=4))
    assert np.array_equal(a.observed(TARGET), b.observed(TARGET))
    assert not np.array_equal(a.observed(TARGET), c.observed(TARGET))


def test_values_respect_schema_ranges():
    ds = generate_synthetic(SynthConfig(n_rows=2000, seed=1))
    assert not ds.violations
    s = default_schema()
    for col in s.columns:
        if col.is_real and col.range is not None and col.name in ds.schema:
            v = ds.observed(col.name).astype(float)
            assert v.min() >= col.range[0] and v.max() <= col.range[1], col.name


def test_noise_free_target_matches_formula():
    cfg = SynthConfig(n_rows=500, seed=2, noise_std_log10=0.0)
    ds = generate_synthetic(cfg)
    cols = {n: ds.observed(n) for n in ds.names}
    expected = 10.0 ** target_log10(cfg, cols)
    assert np.allclose(ds.observed(TARGET).astype(float), expected, rtol=1e-12)


def test_noise_level_recovered():
    cfg = SynthConfig(n_rows=3000, seed=5, noise_std_log10=0.05)
    ds = generate_synthetic(cfg)
    cols = {n: ds.observed(n) for n in ds.names}
    resid = np.log10(ds.observed(TARGET).astype(float)) - target_log10(cfg, cols)
    assert abs(resid.std() - 0.05) < 0.005


def test_imbalanced_categories():
    ds = generate_synthetic(SynthConfig(n_rows=3000, seed=0))
    load = ds.observed("Loading")
    assert np.mean(load == "axial") > 0.75
    assert 0.05 < np.mean(ds.observed("Post-Treat") == TIG_DRESSING) < 0.3


def test_missing_rates_and_target_guard():
    ds = generate_synthetic(SynthConfig(n_rows=1000, seed=0, missing_rates={"f_T": 0.25}))
    assert ds.missing_mask("f_T").sum() == 250
    with pytest.raises(ValueError):
        generate_synthetic(SynthConfig(n_rows=100, missing_rates={TARGET: 0.1}))
    with pytest.raises(ValueError):
        SynthConfig(missing_rates={"f_T": 1.0})


def test_planted_collinear_column():
    ds = generate_synthetic(SynthConfig(n_rows=300, seed=0, planted_collinear=True))
    assert PLANTED_COLLINEAR in ds.schema
    diff = ds.observed(PLANTED_COLLINEAR) - ds.observed("w_BP") - ds.observed("l_S")
    assert np.abs(diff).max() < 0.1


def test_metadata_names_dominant_feature():
    assert generate_synthetic(SynthConfig(n_rows=500)).meta["dominant_feature"] == "R"
    ds = generate_synthetic(SynthConfig(n_rows=500, planted_ratio_feature=True))
    assert ds.meta["dominant_feature"] == "w_BP/t_BP"


def test_csv_and_meta_written(tmp_path):
    ds = generate_synthetic(SynthConfig(n_rows=50, seed=9))
    write_synthetic(ds, tmp_path / "s.csv", tmp_path / "m.json")
    back = load_csv(tmp_path / "s.csv", default_schema())
    assert back.n_rows == 50
    meta = json.loads((tmp_path / "m.json").read_text())
    assert meta["config"]["seed"] == 9
