"""Sampled time series, space-time fields and their CSV formats.

All CSV output uses 17 significant digits so that files round-trip without
loss through :func:`read_timeseries_csv` and :func:`read_field_csv`.
"""

from __future__ import annotations

import io
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_FMT = "%.17g"


def uniform_grid(t_max, n):
    """``n + 1`` equally spaced times on ``[0, t_max]``."""
    if n < 1 or t_max <= 0:
        raise DomainError("uniform_grid needs n >= 1 and t_max > 0")
    return np.linspace(0.0, float(t_max), int(n) + 1)


def graded_grid(t_max, n, exponent=2.0):
    """``n + 1`` times ``t_max * (j / n) ** exponent`` clustered toward 0."""
    if n < 1 or t_max <= 0 or exponent < 1:
        raise DomainError("graded_grid needs n >= 1, t_max > 0 and exponent >= 1")
    s = np.arange(int(n) + 1) / int(n)
    t = float(t_max) * s**exponent
    t[-1] = float(t_max)
    return t


@dataclass(frozen=True)
class TimeSeries:
    """A real function of time sampled on a strictly increasing grid.

    Parameters
    ----------
    t : array_like
        Sample times, strictly increasing and nonnegative.
    value : array_like
        Sample values, same length as ``t``.
    """

    t: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).copy()
        v = np.asarray(self.value, dtype=float).copy()
        if t.ndim != 1 or v.shape != t.shape:
            raise DomainError("TimeSeries needs 1-D t and value of equal length")
        if t.size < 2:
            raise DomainError("TimeSeries needs at least two samples")
        if np.any(np.diff(t) <= 0):
            raise DomainError("TimeSeries times must be strictly increasing")
        if t[0] < 0:
            raise DomainError("TimeSeries times must be nonnegative")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "value", v)

    @classmethod
    def from_function(cls, func, t):
        t = np.asarray(t, dtype=float)
        return cls(t, np.asarray(func(t), dtype=float) * np.ones_like(t))

    def __len__(self):
        return self.t.size

    def __call__(self, s):
        """Piecewise-linear interpolation (constant beyond the last sample)."""
        return np.interp(s, self.t, self.value)

    @property
    def t_max(self):
        return float(self.t[-1])

    def to_csv(self, path):
        buf = io.StringIO()
        buf.write("t,value\n")
        np.savetxt(buf, np.column_stack([self.t, self.value]), fmt=_FMT, delimiter=",")
        atomic_write_text(path, buf.getvalue())


def read_timeseries_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().replace(" ", "")
        if header != "t,value":
            raise DomainError(f"{path}: expected header 't,value', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return TimeSeries(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class Field1D:
    """Values ``u(x_i, t_j)`` on a tensor grid of ``[0, 1] x [0, T]``.

    ``values`` has shape ``(len(t), len(x))``: row ``j`` is the profile at
    time ``t[j]``.
    """

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        t = np.asarray(self.t, dtype=float)
        u = np.asarray(self.values, dtype=float)
        if u.shape != (t.size, x.size):
            raise DomainError(
                f"Field1D values have shape {u.shape}, expected {(t.size, x.size)}"
            )
        if np.any(np.diff(x) <= 0) or np.any(np.diff(t) <= 0):
            raise DomainError("Field1D grids must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", u)

    @classmethod
    def from_function(cls, func, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        X, T = np.meshgrid(x, t)
        return cls(x, t, np.asarray(func(X, T), dtype=float) * np.ones_like(X))

    @classmethod
    def zeros(cls, x, t):
        return cls(x, t, np.zeros((len(t), len(x))))

    def trace(self, i):
        """Time series at the ``i``-th spatial node."""
        return TimeSeries(self.t, self.values[:, i])

    def max_abs_diff(self, other):
        if self.values.shape != other.values.shape:
            raise DomainError("fields live on different grids")
        return float(np.max(np.abs(self.values - other.values)))

    def to_csv(self, path):
        X, T = np.meshgrid(self.x, self.t)
        buf = io.StringIO()
        buf.write("x,t,value\n")
        np.savetxt(
            buf,
            np.column_stack([X.ravel(), T.ravel(), self.values.ravel()]),
            fmt=_FMT,
            delimiter=",",
        )
        atomic_write_text(path, buf.getvalue())


def read_field_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().replace(" ", "")
        if header != "x,t,value":
            raise DomainError(f"{path}: expected header 'x,t,value', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    t = np.unique(data[:, 1])
    nx = data.shape[0] // t.size
    x = data[:nx, 0]
    return Field1D(x, t, data[:, 2].reshape(t.size, nx))


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
