"""Filtering differential Riccati equation and Kalman-type gains.

Integrates

    P' = A(t) P + P A(t)^T - P C(t)^T C(t) P + Q(t),    P(t0) = P0

with fixed-step RK4, projecting every accepted step back onto the symmetric
PSD cone.  The sigma-extrema trace of ``P`` doubles as a boundedness probe:
a bounded PSD solution certifies detectability of ``(A, C)`` and yields the
gain ``L = P C^T`` for which ``A - L C`` is exponentially stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ContractError, GainUnavailableError
from .integrate import rk4, stage_tables
from .linalg import (psd_check, singular_value_extrema_stack,
                     symmetrize_project_psd)
from .signals import MatrixSignal, TimeGrid

__all__ = [
    "RiccatiConfig",
    "RiccatiSolution",
    "integrate_dre",
    "classify_trace",
    "kalman_gain",
]

BOUNDED = "bounded"
BLOW_UP = "blow_up"
GROWTH = "unbounded_growth"
INCONCLUSIVE = "inconclusive"


@dataclass
class RiccatiConfig:
    """Tuning and monitoring parameters for :func:`integrate_dre`.

    ``Q`` defaults to ``q_scale * I`` and ``P0`` to the identity.  The
    blow-up threshold and the growth-trend parameters are numerical choices;
    uniform boundedness on ``[0, inf)`` has no finite-horizon test.
    """

    Q: Optional[MatrixSignal] = None
    q_scale: float = 1.0
    P0: Optional[np.ndarray] = None
    blow_up_threshold: float = 1e6
    clip_floor: float = 0.0
    # growth-trend detection on the running max of sigma_max over the
    # second half of the horizon (four windows)
    growth_ratio: float = 0.5
    growth_rtol: float = 1e-3
    near_threshold_fraction: float = 0.1
    # Q must be positive definite for the detectability probe; pure
    # Lyapunov-type integrations may opt in to Q >= 0.
    allow_semidefinite_q: bool = False

    def resolve(self, n, grid):
        """Validated ``(Q signal, P0 array)`` for an ``n``-state pair."""
        if self.blow_up_threshold <= 0:
            raise ContractError("blow_up_threshold must be positive")
        P0 = np.eye(n) if self.P0 is None else np.array(self.P0, dtype=float)
        if P0.shape != (n, n):
            raise ContractError(f"P0 has shape {P0.shape}, expected {(n, n)}")
        if np.max(np.abs(P0 - P0.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(P0))):
            raise ContractError("P0 must be symmetric")
        rep = psd_check(P0, 1e-10)
        if not rep.is_psd_at_tol:
            raise ContractError(
                f"P0 must be PSD (min eigenvalue {rep.min_eigenvalue:.3e})")
        if self.Q is None:
            if self.q_scale < 0 or (self.q_scale == 0
                                    and not self.allow_semidefinite_q):
                raise ContractError("q_scale must be positive")
            Q = MatrixSignal.constant(self.q_scale * np.eye(n), name="Q")
        else:
            Q = self.Q
            if Q.shape != (n, n):
                raise ContractError(f"Q has shape {Q.shape}, expected {(n, n)}")
        qs = Q.sample(grid.times[:1]) if Q.is_constant else Q.sample(grid.times)
        qsym = 0.5 * (qs + np.swapaxes(qs, 1, 2))
        lam = np.linalg.eigvalsh(qsym)[:, 0]
        bad = lam < -1e-12 if self.allow_semidefinite_q else lam <= 0
        if np.any(bad):
            i = int(np.argmax(bad))
            kind = "semidefinite" if self.allow_semidefinite_q else "definite"
            raise ContractError(
                f"Q(t) must be positive {kind}; lambda_min = {lam[i]:.3e} "
                f"at t={grid.times[i]}")
        return Q, P0


@dataclass
class RiccatiSolution:
    grid: TimeGrid
    P: MatrixSignal
    sigma: np.ndarray = field(repr=False)
    verdict: str
    event_time: Optional[float]
    reason: str
    n_outputs: int
    threshold: float
    horizon: float

    @property
    def is_bounded(self):
        return self.verdict == BOUNDED

    @property
    def sigma_min(self):
        return self.sigma[:, 0]

    @property
    def sigma_max(self):
        return self.sigma[:, 1]

    def sigma_table(self):
        """Columns ``t, sigma_min, sigma_max``."""
        return np.column_stack([self.grid.times, self.sigma])

    def write_sigma_csv(self, path):
        from .io import write_csv
        return write_csv(path, ["t", "sigma_min", "sigma_max"],
                         self.sigma_table())


def classify_trace(times, sigma_max, cfg, horizon_end=None):
    """Boundedness verdict for a sigma_max trace.

    Returns ``(verdict, event_time, reason)`` where verdict is one of
    ``bounded``, ``blow_up``, ``unbounded_growth`` or ``inconclusive``.

    ``blow_up`` fires when sigma_max exceeds the threshold.  Slower
    (polynomial) divergence never reaches a fixed threshold on a finite
    horizon, so the running maximum over the second half of the horizon is
    also inspected: four consecutive windows that all set a noticeably new
    record, without the increments decaying, count as unbounded growth.
    """
    times = np.asarray(times, dtype=float)
    s = np.asarray(sigma_max, dtype=float)
    thr = cfg.blow_up_threshold
    over = s > thr
    if over.any():
        i = int(np.argmax(over))
        return (BLOW_UP, float(times[i]),
                f"sigma_max(P) = {s[i]:.3e} exceeded threshold {thr:.1e} "
                f"at t={times[i]:.6g}")
    if len(s) < 9:
        return BOUNDED, None, "horizon too short for trend analysis"
    run = np.maximum.accumulate(s)
    top = float(run[-1])
    edges = np.linspace(len(s) // 2, len(s) - 1, 5).astype(int)
    incs = np.diff(run[edges])
    tol = cfg.growth_rtol * max(top, np.finfo(float).tiny)
    if np.all(incs > tol) and incs[-1] >= cfg.growth_ratio * incs[0]:
        return (GROWTH, float(times[-1]),
                f"sigma_max(P) grows without deceleration over the second "
                f"half of the horizon (window increments "
                f"{', '.join(f'{d:.3g}' for d in incs)})")
    if top >= cfg.near_threshold_fraction * thr:
        return (INCONCLUSIVE, None,
                f"sigma_max(P) reached {top:.3e}, within a factor "
                f"{1 / cfg.near_threshold_fraction:g} of the threshold")
    if incs[-1] > tol:
        return (INCONCLUSIVE, None,
                "sigma_max(P) still rising at the end of the horizon")
    return (BOUNDED, None,
            f"sigma_max(P) stayed below {top:.3e} (threshold {thr:.1e})")


def integrate_dre(Apair, Cpair, cfg, grid):
    """Solve the filtering Riccati equation for the pair ``(Apair, Cpair)``.

    Parameters
    ----------
    Apair : MatrixSignal
        ``n x n`` state matrix.
    Cpair : MatrixSignal
        ``m x n`` output matrix.
    cfg : RiccatiConfig
    grid : TimeGrid
        Integration grid; RK4 midpoint stages evaluate the signals at
        ``t_k + h/2``.

    Returns
    -------
    RiccatiSolution
        Stored up to the blow-up time when the threshold is crossed.
    """
    cfg = cfg or RiccatiConfig()
    n = Apair.rows
    if Apair.shape != (n, n):
        raise ContractError(f"A has shape {Apair.shape}; expected square")
    if Cpair.cols != n:
        raise ContractError(f"C has {Cpair.cols} columns; expected {n}")
    Q, P0 = cfg.resolve(n, grid)

    An, Am = stage_tables(Apair, grid)
    Cn, Cm = stage_tables(Cpair, grid)
    Wn = np.swapaxes(Cn, 1, 2) @ Cn
    Wm = np.swapaxes(Cm, 1, 2) @ Cm
    if Q.is_constant:
        q0 = Q.eval(grid.t_start)
        Qn = Qm = None
    else:
        Qn, Qm = stage_tables(Q, grid)

    def rhs(k, stage, P):
        if stage == 0:
            A, W = An[k], Wn[k]
            Qk = q0 if Qn is None else Qn[k]
        elif stage == 1:
            A, W = Am[k], Wm[k]
            Qk = q0 if Qm is None else Qm[k]
        else:
            A, W = An[k + 1], Wn[k + 1]
            Qk = q0 if Qn is None else Qn[k + 1]
        AP = A @ P
        return AP + AP.T - P @ W @ P + Qk

    thr = cfg.blow_up_threshold

    def project(P):
        return symmetrize_project_psd(P, cfg.clip_floor)

    def stop(k, P):
        # trace bounds sigma_max from above for PSD P
        return np.trace(P) > thr and np.linalg.norm(P, 2) > thr

    Ps = rk4(rhs, symmetrize_project_psd(P0, cfg.clip_floor), grid,
             project=project, stop=stop)
    used = grid.truncated(len(Ps)) if len(Ps) < grid.count else grid
    sigma = singular_value_extrema_stack(Ps)
    verdict, t_event, reason = classify_trace(used.times, sigma[:, 1], cfg)
    if len(Ps) < 2:
        # threshold already exceeded by P0
        used = grid.truncated(2)
        Ps = np.concatenate([Ps, Ps])
        sigma = np.concatenate([sigma, sigma])
    return RiccatiSolution(
        grid=used,
        P=MatrixSignal.sampled(used, Ps, name="P"),
        sigma=sigma,
        verdict=verdict,
        event_time=t_event,
        reason=reason,
        n_outputs=Cpair.rows,
        threshold=thr,
        horizon=grid.t_end - grid.t_start,
    )


def kalman_gain(sol, Cpair):
    """Gain ``L(t) = P(t) C(t)^T`` sampled on the solution grid.

    Raises :class:`GainUnavailableError` unless the solution is bounded.
    """
    if not sol.is_bounded:
        raise GainUnavailableError(
            f"Riccati solution is {sol.verdict}: {sol.reason}")
    Ps = sol.P.values
    Cs = Cpair.sample(sol.grid.times)
    return MatrixSignal.sampled(sol.grid, Ps @ np.swapaxes(Cs, 1, 2), name="L")
