"""Matrix-valued signals of time on uniform grids.

A :class:`MatrixSignal` hides whether a time-varying matrix is given by an
analytic evaluator or by samples on a :class:`TimeGrid`.  Everything
downstream (auxiliary system, Riccati integration, observer assembly) only
calls :meth:`MatrixSignal.eval`, :meth:`MatrixSignal.derivative` and their
vectorized counterparts :meth:`MatrixSignal.sample` and
:meth:`MatrixSignal.sample_derivative`.

Uniform boundedness over ``[0, inf)`` cannot be checked numerically;
:func:`boundedness_probe` is a finite-horizon surrogate (max induced 2-norm
over a grid).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ContractError, DomainError, EvaluationError

__all__ = [
    "TimeGrid",
    "MatrixSignal",
    "boundedness_probe",
    "load_signal_csv",
    "write_signal_csv",
]

# Relative slack (in units of the step) for snapping t onto a sample point.
_SNAP = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid ``t_start, t_start + step, ..., t_end``."""

    t_start: float
    step: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.step)):
            raise ContractError("grid start and step must be finite")
        if self.step <= 0:
            raise ContractError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ContractError(f"grid needs at least 2 points, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_span(cls, t_start, t_end, step):
        """Grid covering ``[t_start, t_end]`` with the given step.

        The span must be an integer multiple of ``step`` up to rounding.
        """
        n_steps = (t_end - t_start) / step
        k = int(round(n_steps))
        if k < 1 or abs(n_steps - k) > 1e-6 * max(1.0, k):
            raise ContractError(
                f"span [{t_start}, {t_end}] is not a multiple of step {step}")
        return cls(float(t_start), float(step), k + 1)

    @property
    def t_end(self):
        return self.t_start + (self.count - 1) * self.step

    @property
    def times(self):
        return self.t_start + self.step * np.arange(self.count)

    @property
    def midpoints(self):
        return self.t_start + self.step * (np.arange(self.count - 1) + 0.5)

    @property
    def n_steps(self):
        return self.count - 1

    def refined(self, factor=2):
        """Same span with the step divided by ``factor``."""
        return TimeGrid(self.t_start, self.step / factor,
                        (self.count - 1) * factor + 1)

    def truncated(self, count):
        return TimeGrid(self.t_start, self.step, count)

    def contains(self, t):
        tol = _SNAP * self.step
        return self.t_start - tol <= t <= self.t_end + tol

    def same_as(self, other):
        return (self.count == other.count
                and math.isclose(self.step, other.step, rel_tol=1e-12)
                and math.isclose(self.t_start, other.t_start,
                                 rel_tol=1e-12, abs_tol=1e-12 * self.step))


def _as_matrix(value, rows, cols, t):
    m = np.asarray(value, dtype=float)
    if m.ndim < 2:
        m = m.reshape(rows, cols)
    if m.shape != (rows, cols):
        raise ContractError(
            f"evaluator returned shape {m.shape}, expected {(rows, cols)}")
    if not np.all(np.isfinite(m)):
        raise EvaluationError(f"non-finite signal value at t={t}", t=t)
    return m


class MatrixSignal:
    """A ``rows x cols`` matrix-valued function of time.

    Use the constructors :meth:`constant`, :meth:`analytic` and
    :meth:`sampled` rather than calling ``__init__`` directly.  Instances are
    immutable; sample arrays are stored read-only.

    Parameters
    ----------
    rows, cols : int
        Matrix shape.  Zero is allowed for the empty-input convention
        (``q = 0``).
    evaluator : callable, optional
        ``f(t) -> (rows, cols)`` for analytic signals.  If ``vectorized`` is
        set, ``f`` also accepts a 1-D array of times and returns an array of
        shape ``(len(t), rows, cols)``.
    derivative : callable, optional
        Analytic derivative with the same calling convention.
    grid, values : TimeGrid, ndarray
        Samples ``values[k] = M(grid.times[k])`` for sampled signals.
    interp : {'linear', 'cubic'}
        Interpolation between samples.
    fd_step : float
        Central-difference step for analytic signals without a derivative.
    domain : (float, float)
        Admissible time interval of an analytic signal.
    """

    __slots__ = ("rows", "cols", "_f", "_df", "_vectorized", "grid",
                 "values", "interp", "fd_step", "domain", "is_constant",
                 "name", "_spline", "mid_values")

    def __init__(self, rows, cols, *, evaluator=None, derivative=None,
                 vectorized=False, grid=None, values=None, interp="linear",
                 fd_step=1e-5, domain=(-math.inf, math.inf),
                 is_constant=False, name=None):
        self.rows = int(rows)
        self.cols = int(cols)
        self._f = evaluator
        self._df = derivative
        self._vectorized = bool(vectorized)
        self.grid = grid
        self.values = values
        if interp not in ("linear", "cubic"):
            raise ContractError(f"unknown interpolation {interp!r}")
        self.interp = interp
        self.fd_step = float(fd_step)
        self.domain = (float(domain[0]), float(domain[1]))
        self.is_constant = bool(is_constant)
        self.name = name
        self._spline = None
        self.mid_values = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value, name=None):
        m = np.array(value, dtype=float, ndmin=2)
        if not np.all(np.isfinite(m)):
            raise EvaluationError("constant signal has non-finite entries")
        m.setflags(write=False)
        zero = np.zeros_like(m)
        zero.setflags(write=False)

        def f(t):
            if np.ndim(t):
                return np.broadcast_to(m, (len(t),) + m.shape)
            return m

        def df(t):
            if np.ndim(t):
                return np.broadcast_to(zero, (len(t),) + m.shape)
            return zero

        return cls(m.shape[0], m.shape[1], evaluator=f, derivative=df,
                   vectorized=True, is_constant=True, name=name)

    @classmethod
    def analytic(cls, evaluator, shape, derivative=None, *, vectorized=False,
                 fd_step=1e-5, domain=(-math.inf, math.inf), name=None):
        rows, cols = shape
        return cls(rows, cols, evaluator=evaluator, derivative=derivative,
                   vectorized=vectorized, fd_step=fd_step, domain=domain,
                   name=name)

    @classmethod
    def sampled(cls, grid, values, interp="linear", name=None, midpoints=None):
        """Signal defined by samples on a uniform grid.

        ``midpoints`` optionally holds exact values at the grid midpoints;
        RK4 stages on the same grid use them instead of interpolating.
        """
        v = np.array(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None, None]
        elif v.ndim == 2:
            v = v[:, :, None]
        if v.ndim != 3 or v.shape[0] != grid.count:
            raise ContractError(
                f"samples of shape {np.shape(values)} do not match a grid "
                f"of {grid.count} points")
        bad = ~np.isfinite(v).reshape(grid.count, -1).all(axis=1)
        if bad.any():
            k = int(np.argmax(bad))
            t = float(grid.times[k])
            raise EvaluationError(f"non-finite sample at t={t}", t=t)
        v.setflags(write=False)
        sig = cls(v.shape[1], v.shape[2], grid=grid, values=v,
                  interp=interp, name=name)
        if midpoints is not None:
            m = np.array(midpoints, dtype=float).reshape((grid.count - 1,) + v.shape[1:])
            m.setflags(write=False)
            sig.mid_values = m
        return sig

    # -- properties -------------------------------------------------------

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def is_sampled(self):
        return self.values is not None

    @property
    def t_min(self):
        return self.grid.t_start if self.is_sampled else self.domain[0]

    @property
    def t_max(self):
        return self.grid.t_end if self.is_sampled else self.domain[1]

    def __repr__(self):
        kind = "sampled" if self.is_sampled else (
            "constant" if self.is_constant else "analytic")
        label = f" {self.name!r}" if self.name else ""
        return f"<MatrixSignal{label} {kind} {self.rows}x{self.cols}>"

    # -- evaluation -------------------------------------------------------

    def _check_domain(self, t):
        if not math.isfinite(t):
            raise DomainError(f"time must be finite, got {t}")
        if self.is_sampled:
            if not self.grid.contains(t):
                raise DomainError(
                    f"t={t} outside sampled domain "
                    f"[{self.grid.t_start}, {self.grid.t_end}]")
        elif not (self.domain[0] <= t <= self.domain[1]):
            raise DomainError(f"t={t} outside domain {self.domain}")

    def eval(self, t):
        """Value of the signal at time ``t`` as a ``rows x cols`` array."""
        t = float(t)
        self._check_domain(t)
        if self.is_sampled:
            return self._interp_one(t)
        return _as_matrix(self._f(t), self.rows, self.cols, t)

    __call__ = eval

    def _interp_one(self, t):
        g, v = self.grid, self.values
        u = (t - g.t_start) / g.step
        r = round(u)
        if abs(u - r) <= _SNAP:
            return v[min(max(int(r), 0), g.count - 1)]
        if self.interp == "cubic":
            return self._cubic()(t)
        k = min(max(int(math.floor(u)), 0), g.count - 2)
        a = u - k
        return v[k] * (1.0 - a) + v[k + 1] * a

    def _cubic(self):
        if self._spline is None:
            from scipy.interpolate import CubicSpline
            self._spline = CubicSpline(self.grid.times, self.values, axis=0)
        return self._spline

    def sample(self, times):
        """Vectorized :meth:`eval`; returns ``(len(times), rows, cols)``."""
        ts = np.asarray(times, dtype=float)
        if ts.ndim != 1:
            raise ContractError("sample() expects a 1-D array of times")
        if ts.size == 0:
            return np.zeros((0, self.rows, self.cols))
        lo, hi = ts.min(), ts.max()
        self._check_domain(float(lo))
        self._check_domain(float(hi))
        if self.is_sampled:
            return self._interp_many(ts)
        if self._vectorized:
            out = np.asarray(self._f(ts), dtype=float)
            out = out.reshape(len(ts), self.rows, self.cols)
            _check_stack(out, ts)
            return np.array(out)
        return np.stack([self.eval(t) for t in ts])

    def _interp_many(self, ts):
        g, v = self.grid, self.values
        u = (ts - g.t_start) / g.step
        r = np.rint(u)
        snap = np.abs(u - r) <= _SNAP
        if self.interp == "cubic":
            out = np.asarray(self._cubic()(ts))
            idx = np.clip(r[snap].astype(int), 0, g.count - 1)
            out[snap] = v[idx]
            return out
        k = np.clip(np.floor(u).astype(int), 0, g.count - 2)
        a = u - k
        idx = np.clip(r.astype(int), 0, g.count - 1)
        k = np.where(snap, np.minimum(idx, g.count - 2), k)
        a = np.where(snap, (idx - k).astype(float), a)
        a = a[:, None, None]
        return v[k] * (1.0 - a) + v[k + 1] * a

    def derivative(self, t):
        """Time derivative at ``t``.

        Uses the analytic derivative when one was supplied.  Otherwise a
        central difference with the grid step (sampled) or ``fd_step``
        (analytic), switching to a second-order one-sided stencil within one
        step of a domain boundary.
        """
        t = float(t)
        self._check_domain(t)
        if self._df is not None:
            return _as_matrix(self._df(t), self.rows, self.cols, t)
        return self.sample_derivative(np.array([t]))[0]

    def sample_derivative(self, times):
        ts = np.asarray(times, dtype=float)
        if ts.size == 0:
            return np.zeros((0, self.rows, self.cols))
        self._check_domain(float(ts.min()))
        self._check_domain(float(ts.max()))
        if self._df is not None:
            if self._vectorized:
                out = np.asarray(self._df(ts), dtype=float)
                out = np.array(out.reshape(len(ts), self.rows, self.cols))
                _check_stack(out, ts)
                return out
            return np.stack([_as_matrix(self._df(t), self.rows, self.cols, t)
                             for t in ts])
        h = self.grid.step if self.is_sampled else self.fd_step
        lo, hi = self.t_min, self.t_max
        tol = _SNAP * h
        fwd = ts - h < lo - tol
        bwd = ts + h > hi + tol
        if np.any(fwd & bwd):
            # Domain shorter than two steps: plain first-order difference.
            return (self.sample(np.full_like(ts, hi))
                    - self.sample(np.full_like(ts, lo))) / (hi - lo)
        out = np.empty((len(ts), self.rows, self.cols))
        mid = ~(fwd | bwd)
        if mid.any():
            tm = ts[mid]
            out[mid] = (self.sample(tm + h) - self.sample(tm - h)) / (2 * h)
        if fwd.any():
            tf = ts[fwd]
            if self.is_sampled and self.grid.count < 3 or (tf + 2 * h > hi + tol).any():
                out[fwd] = (self.sample(tf + h) - self.sample(tf)) / h
            else:
                out[fwd] = (-3 * self.sample(tf) + 4 * self.sample(tf + h)
                            - self.sample(tf + 2 * h)) / (2 * h)
        if bwd.any():
            tb = ts[bwd]
            if self.is_sampled and self.grid.count < 3 or (tb - 2 * h < lo - tol).any():
                out[bwd] = (self.sample(tb) - self.sample(tb - h)) / h
            else:
                out[bwd] = (3 * self.sample(tb) - 4 * self.sample(tb - h)
                            + self.sample(tb - 2 * h)) / (2 * h)
        return out

    def on(self, grid, interp=None, name=None):
        """Materialize the signal as samples on ``grid``."""
        return MatrixSignal.sampled(grid, self.sample(grid.times),
                                    interp=interp or self.interp,
                                    name=name or self.name)

    def is_time_invariant(self, grid, rtol=1e-12):
        """True if every grid sample equals the first one to ``rtol``."""
        if self.is_constant:
            return True
        v = self.sample(grid.times)
        scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
        return bool(np.all(np.abs(v - v[0]) <= rtol * scale))


def _check_stack(out, ts):
    bad = ~np.isfinite(out).reshape(len(ts), -1).all(axis=1)
    if bad.any():
        t = float(ts[int(np.argmax(bad))])
        raise EvaluationError(f"non-finite signal value at t={t}", t=t)


def stack_norms(values):
    """Induced 2-norms of a stack of matrices, shape ``(k,)``."""
    values = np.asarray(values, dtype=float)
    if values.shape[1] == 0 or values.shape[2] == 0:
        return np.zeros(values.shape[0])
    return np.linalg.norm(values, ord=2, axis=(1, 2))


def boundedness_probe(signal, grid):
    """Max over ``grid`` of the induced 2-norm of ``signal``.

    Finite-horizon surrogate for uniform boundedness.  Raises
    :class:`EvaluationError` carrying the offending time when any grid
    value is non-finite.
    """
    return float(np.max(stack_norms(signal.sample(grid.times))))


def load_signal_csv(path, rows, cols, interp="linear", name=None):
    """Read a sampled signal from CSV.

    The file needs a header row.  Column 0 holds the time, the remaining
    ``rows * cols`` columns the matrix entries in row-major order.  Times
    must form a uniform grid.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ContractError(f"{path}: empty file") from None
        try:
            [float(x) for x in header]
        except ValueError:
            pass
        else:
            raise ContractError(f"{path}: header row required")
        data = np.array([[float(x) for x in row] for row in reader if row])
    if data.ndim != 2 or data.shape[1] != 1 + rows * cols:
        raise ContractError(
            f"{path}: expected {1 + rows * cols} columns for a "
            f"{rows}x{cols} signal")
    t = data[:, 0]
    if len(t) < 2:
        raise ContractError(f"{path}: need at least two samples")
    steps = np.diff(t)
    h = (t[-1] - t[0]) / (len(t) - 1)
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-6 * h:
        raise ContractError(f"{path}: samples are not uniformly spaced")
    grid = TimeGrid(float(t[0]), float(h), len(t))
    return MatrixSignal.sampled(grid, data[:, 1:].reshape(-1, rows, cols),
                                interp=interp, name=name or path.stem)


def write_signal_csv(path, signal, grid=None, fmt="%.17g"):
    """Write a signal in the layout read by :func:`load_signal_csv`."""
    grid = grid or signal.grid
    if grid is None:
        raise ContractError("analytic signals need an explicit grid")
    v = signal.sample(grid.times).reshape(grid.count, -1)
    header = ["t"] + [f"m{i + 1}_{j + 1}" for i in range(signal.rows)
                      for j in range(signal.cols)]
    from .io import write_csv
    write_csv(path, header, np.column_stack([grid.times, v]), fmt=fmt)
