"""Classical fixed-step Runge-Kutta (RK4) on a uniform grid.

Right-hand sides are addressed by ``(k, stage)`` rather than by time so that
callers can precompute coefficient tables at grid points and midpoints once:
stage 0 is ``t_k``, stage 1 is ``t_k + h/2`` and stage 2 is ``t_{k+1}``.
"""

from __future__ import annotations

import numpy as np

from .exceptions import IntegrationError

__all__ = ["rk4", "stage_tables"]


def stage_tables(signal, grid):
    """Signal values at grid points and at midpoints, as two stacks."""
    if signal.mid_values is not None and signal.grid.same_as(grid):
        return signal.values, signal.mid_values
    return signal.sample(grid.times), signal.sample(grid.midpoints)


def rk4(rhs, y0, grid, project=None, stop=None):
    """Integrate ``y' = rhs(k, stage, y)`` across ``grid``.

    Parameters
    ----------
    rhs : callable
        ``rhs(k, stage, y) -> array`` shaped like ``y``.
    y0 : array_like
        Initial value at ``grid.t_start``.
    grid : TimeGrid
    project : callable, optional
        Applied to every accepted step (e.g. symmetrization).
    stop : callable, optional
        ``stop(k, y) -> bool`` evaluated on each stored state; integration
        halts after storing the state for which it returns True.

    Returns
    -------
    ys : ndarray
        Stored states, shape ``(m, *y0.shape)`` with ``m <= grid.count``.
    """
    h = grid.step
    y = np.array(y0, dtype=float)
    out = np.empty((grid.count,) + y.shape)
    out[0] = y
    if stop is not None and stop(0, y):
        return out[:1]
    half = 0.5 * h
    sixth = h / 6.0
    for k in range(grid.n_steps):
        k1 = rhs(k, 0, y)
        k2 = rhs(k, 1, y + half * k1)
        k3 = rhs(k, 1, y + half * k2)
        k4 = rhs(k, 2, y + h * k3)
        y = y + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if project is not None:
            y = project(y)
        if not np.all(np.isfinite(y)):
            t = grid.t_start + (k + 1) * h
            raise IntegrationError(f"non-finite state at t={t}", t=t)
        out[k + 1] = y
        if stop is not None and stop(k + 1, y):
            return out[:k + 2]
    return out
