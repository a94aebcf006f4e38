import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fatigue_automl.errors import MissingColumn, ParseError, RangeViolation
from fatigue_automl.tabular import (
    MISSING,
    ColumnSpec,
    Dataset,
    FeatureSchema,
    default_schema,
    eda_summary,
    load_csv,
    train_test_split,
)


def _write(tmp_path, header, rows):
    p = tmp_path / "d.csv"
    p.write_text("\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n", encoding="utf-8")
    return p


def tiny_schema():
    return FeatureSchema(
        (
            ColumnSpec("f_T", "real", "Hz", (1.0, 32.0)),
            ColumnSpec("R_eH", "real", "MPa", (235.0, 1125.0)),
            ColumnSpec("Loading", "binary", "-", levels=("axial", "bending")),
            ColumnSpec("y", "real", "MPa", None),
        ),
        ("y",),
    )


def test_schema_lists_every_tabulated_column():
    s = default_schema()
    for name in ("Scale", "Loading", "I_A", "f_T", "R_eH", "R_m", "Pre-Treat", "Post-Treat", "Weld type",
                 "R_eH_filler", "R_m_filler", "l_BP", "w_BP", "t_BP", "h_S", "l_S", "t_S", "a_w", "Corrosion", "R",
                 "delta_sigma_i", "N_i", "delta_sigma_c50"):
        assert name in s
    assert s["R_eH"].range == (235.0, 1125.0)
    assert set(s.target_names) == {"N_i", "delta_sigma_c50"}


def test_schema_invariants():
    with pytest.raises(ValueError):
        ColumnSpec("a", "real", "mm", (2.0, 1.0))
    with pytest.raises(ValueError):
        ColumnSpec("a", "categorical", "-", levels=())
    with pytest.raises(ValueError):
        ColumnSpec("a", "ordinal", "-")
    c = ColumnSpec("a", "real", "mm")
    with pytest.raises(ValueError):
        FeatureSchema((c, c), ())
    with pytest.raises(MissingColumn):
        default_schema()["nope"]


def test_schema_yaml_round_trip(tmp_path):
    s = default_schema()
    s.dump_yaml(tmp_path / "s.yaml")
    assert FeatureSchema.load_yaml(tmp_path / "s.yaml") == s


def test_empty_cell_sets_mask(tmp_path):
    p = _write(tmp_path, ["f_T", "R_eH", "Loading", "y"],
               [["10", "355", "axial", "90"], ["", "460", "bending", "80"], ["5", "355", "axial", "70"]])
    ds = load_csv(p, tiny_schema())
    assert ds.n_rows == 3
    assert ds.missing_mask("f_T").tolist() == [False, True, False]
    assert ds.get("f_T", 1) is MISSING
    assert ds.get("f_T", 0) == 10.0
    col = ds.column("f_T")
    assert col.mask.tolist() == [False, True, False]


def test_missing_tokens_configurable(tmp_path):
    p = _write(tmp_path, ["f_T", "R_eH", "Loading", "y"], [["NA", "-", "axial", "1"], ["?", "355", "axial", "2"]])
    with pytest.raises(ParseError):
        load_csv(p, tiny_schema())
    ds = load_csv(p, tiny_schema(), missing_tokens=("NA", "-", "?"))
    assert ds.missing_mask("f_T").all()


def test_missing_header_column(tmp_path):
    s = default_schema()
    header = [n for n in s.names if n != "t_S"]
    p = _write(tmp_path, header, [])
    with pytest.raises(MissingColumn) as e:
        load_csv(p, s)
    assert e.value.name == "t_S"


def test_parse_error_reports_row_and_column(tmp_path):
    p = _write(tmp_path, ["f_T", "R_eH", "Loading", "y"], [["1", "355", "axial", "1"], ["x1", "355", "axial", "2"]])
    with pytest.raises(ParseError) as e:
        load_csv(p, tiny_schema())
    assert (e.value.row, e.value.column) == (1, "f_T")


def test_out_of_range_collected_and_retained(tmp_path):
    p = _write(tmp_path, ["f_T", "R_eH", "Loading", "y"],
               [["1", "2000", "axial", "1"], ["2", "355", "sideways", "2"]])
    ds = load_csv(p, tiny_schema())
    assert RangeViolation(0, "R_eH", 2000.0) in ds.violations
    assert RangeViolation(1, "Loading", "sideways") in ds.violations
    assert ds.get("R_eH", 0) == 2000.0
    assert not ds.missing_mask("R_eH")[0]
    with pytest.raises(RangeViolation):
        load_csv(p, tiny_schema(), on_violation="raise")


def test_masked_cells_unreadable_through_public_api(synth_small):
    ds = synth_small
    m = ds.missing_mask("R_eH")
    assert m.any()
    i = int(np.nonzero(m)[0][0])
    assert ds.get("R_eH", i) is MISSING
    assert np.ma.is_masked(ds.column("R_eH")[i])
    assert len(ds.observed("R_eH")) == ds.n_rows - m.sum()
    with pytest.raises(ValueError):
        ds.missing_mask("R_eH")[0] = True


def test_csv_round_trip(tmp_path, synth_small):
    synth_small.to_csv(tmp_path / "s.csv")
    back = load_csv(tmp_path / "s.csv", synth_small.schema)
    for name in synth_small.names:
        assert np.array_equal(back.missing_mask(name), synth_small.missing_mask(name))
        a, b = back.observed(name), synth_small.observed(name)
        assert list(a) == list(b)


def test_eda_basic_statistics():
    s = FeatureSchema((ColumnSpec("a", "real", "-"), ColumnSpec("y", "real", "-")), ("y",))
    ds = Dataset(s, {"a": [1.0, 2.0, 3.0], "y": [1.0, 1.0, 1.0]})
    rep = eda_summary(ds)
    c = rep.columns["a"]
    assert c.stats["mean"] == 2.0 and c.stats["median"] == 2.0 and c.missing_ratio == 0.0
    ds2 = Dataset(s, {"a": [1.0, np.nan, 3.0, np.nan], "y": [1.0] * 4})
    assert eda_summary(ds2).columns["a"].missing_ratio == 0.5


def test_eda_histogram_and_empty_column(synth_small):
    rep = eda_summary(synth_small, bins=7)
    for name, c in rep.columns.items():
        if c.kind == "real" and not c.empty:
            assert sum(c.hist_counts) == c.n - c.n_missing
            assert len(c.hist_counts) == 7
        assert c.missing_ratio == c.n_missing / c.n
    s = FeatureSchema((ColumnSpec("a", "real", "-"), ColumnSpec("y", "real", "-")), ("y",))
    rep2 = eda_summary(Dataset(s, {"a": [np.nan, np.nan], "y": [1.0, 2.0]}))
    assert rep2.columns["a"].empty and rep2.warnings[0].name == "a"


def test_eda_idempotent(synth_small):
    import json

    a = json.dumps(eda_summary(synth_small).to_dict(), sort_keys=True)
    b = json.dumps(eda_summary(synth_small).to_dict(), sort_keys=True)
    assert a == b


def _ds(n):
    s = FeatureSchema((ColumnSpec("a", "real", "-"), ColumnSpec("y", "real", "-")), ("y",))
    return Dataset(s, {"a": np.arange(n, dtype=float), "y": np.ones(n)})


def test_split_sizes_and_determinism():
    tr, te = train_test_split(_ds(100), 0.1, seed=7)
    assert (tr.n_rows, te.n_rows) == (90, 10)
    tr2, te2 = train_test_split(_ds(100), 0.1, seed=7)
    assert np.array_equal(te.row_ids, te2.row_ids)


def test_split_seeds_differ():
    parts = {tuple(train_test_split(_ds(10), 0.5, seed=s)[1].row_ids) for s in range(20)}
    assert len(parts) >= 2


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.floats(0.01, 0.99), st.integers(0, 10_000))
def test_split_is_a_partition(n, frac, seed):
    tr, te = train_test_split(_ds(n), frac, seed)
    a, b = set(tr.row_ids.tolist()), set(te.row_ids.tolist())
    assert not a & b and a | b == set(range(n))
    assert te.n_rows == int(np.ceil(n * frac - 1e-12))
