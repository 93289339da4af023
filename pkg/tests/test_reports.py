import json

import numpy as np
import pytest

from fenefp.reports import (DiagnosticsReport, config_hash, thin_indices,
                            write_csv)


def make_report():
    t = np.linspace(0.0, 1.0, 11)
    return DiagnosticsReport(
        scenario="demo",
        config={"scenario": "demo", "model": {"b": 4.0}},
        series={"t": t, "mass": np.cos(t)},
        trace_profile={"r": np.array([1.0, 1.5]), "d": np.array([1.0, 0.5]),
                       "trace": np.array([0.25, 0.125])},
        scalars={"weak_residual": 1e-9, "garding_C1": 0.3},
        tables={"sweep": [{"b": 4.0, "status": "ok"},
                          {"b": 2.0, "status": "rejected", "note": "b<=2"}]})


def test_thin_indices():
    assert list(thin_indices(5, 10)) == [0, 1, 2, 3, 4]
    idx = thin_indices(10001, 2000)
    assert len(idx) <= 2001
    assert idx[0] == 0 and idx[-1] == 10000
    assert np.all(np.diff(idx) > 0)


def test_config_hash_stable_and_order_free():
    a = config_hash({"x": 1, "y": [1, 2]})
    b = config_hash({"y": [1, 2], "x": 1})
    assert a == b and len(a) == 16
    assert config_hash({"x": 2}) != a


def test_csv_17_digit_roundtrip(tmp_path):
    path = tmp_path / "vals.csv"
    vals = np.array([1.0 / 3.0, np.pi, 1e-300, 123456789.123456789])
    write_csv(path, ["v"], [vals])
    lines = path.read_text().strip().splitlines()
    back = np.array([float(s) for s in lines[1:]])
    np.testing.assert_array_equal(back, vals)  # bit-exact through text


def test_write_artifacts(tmp_path):
    rep = make_report()
    written = rep.write(tmp_path)
    names = sorted(p.name for p in written)
    assert names == ["report.json", "sweep.csv", "timeseries.csv",
                     "trace_profile.csv"]
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["scenario"] == "demo"
    assert data["scalars"]["garding_C1"] == 0.3
    assert data["metadata"]["config_hash"] == config_hash(rep.config)
    # heterogeneous table rows union their columns
    sweep = (tmp_path / "sweep.csv").read_text().splitlines()
    assert sweep[0] == "b,status,note"
    assert sweep[1].endswith(",ok,")


def test_write_is_deterministic(tmp_path):
    rep = make_report()
    rep.write(tmp_path / "a")
    rep.write(tmp_path / "b")
    for name in ("timeseries.csv", "trace_profile.csv", "report.json",
                 "sweep.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_validate_finite_rejects_nan(tmp_path):
    rep = make_report()
    rep.series["mass"] = np.array([1.0, np.nan])
    with pytest.raises(ValueError):
        rep.validate_finite()
    with pytest.raises(ValueError):
        rep.write(tmp_path)


def test_series_thinning_in_write(tmp_path):
    t = np.linspace(0.0, 1.0, 6000)
    rep = DiagnosticsReport(scenario="demo", config={},
                            series={"t": t, "y": t ** 2})
    rep.write(tmp_path)
    lines = (tmp_path / "timeseries.csv").read_text().strip().splitlines()
    assert len(lines) - 1 <= 2001
    assert lines[1].split(",")[0] == "0"
    assert float(lines[-1].split(",")[0]) == 1.0
