import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from distorder import DomainError, Field1D, TimeSeries
from distorder.series import graded_grid, read_field_csv, read_timeseries_csv, uniform_grid

finite = st.floats(-1e300, 1e300, allow_nan=False)


def test_grids():
    assert np.array_equal(uniform_grid(2.0, 4), [0, 0.5, 1, 1.5, 2])
    g = graded_grid(1.0, 4, 2)
    assert g[0] == 0 and g[-1] == 1 and g[1] == pytest.approx(1 / 16)
    assert np.all(np.diff(np.diff(graded_grid(3.0, 50, 3))) > 0)
    with pytest.raises(DomainError):
        graded_grid(1.0, 4, 0.5)


def test_timeseries_validation():
    with pytest.raises(DomainError):
        TimeSeries([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        TimeSeries([0.0], [1.0])
    with pytest.raises(DomainError):
        TimeSeries([-1.0, 0.0], [1.0, 2.0])
    s = TimeSeries([0.0, 1.0], [0.0, 2.0])
    assert s(0.25) == 0.5 and s(5.0) == 2.0
    with pytest.raises(ValueError):
        s.value[0] = 3.0


@settings(max_examples=30, deadline=None)
@given(v=arrays(float, 7, elements=finite))
def test_timeseries_csv_round_trip(tmp_path_factory, v):
    path = tmp_path_factory.mktemp("ts") / "s.csv"
    s = TimeSeries(np.geomspace(1e-9, 3, 7), v)
    s.to_csv(path)
    back = read_timeseries_csv(path)
    assert np.array_equal(back.t, s.t) and np.array_equal(back.value, s.value)


@settings(max_examples=30, deadline=None)
@given(v=arrays(float, (4, 3), elements=finite))
def test_field_csv_round_trip(tmp_path_factory, v):
    path = tmp_path_factory.mktemp("fld") / "f.csv"
    f = Field1D(np.array([0.0, 0.3, 1.0]), np.array([0.0, 0.1, 0.7, 2.0]), v)
    f.to_csv(path)
    back = read_field_csv(path)
    assert back.max_abs_diff(f) == 0.0
    assert np.array_equal(back.trace(1).value, v[:, 1])


def test_bad_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("time,v\n0,1\n1,2\n")
    with pytest.raises(DomainError):
        read_timeseries_csv(p)
