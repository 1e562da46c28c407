"""Strong (unknown-input) observer assembly and co-simulation.

The observer has the form

    z' = N(t) z + R(t) y,    xhat = z + S(t) y

and is assembled from the auxiliary pair and a bounded Riccati solution:

    L1 = P C^T,   L2 = P (C Atilde + C')^T          (L2 = 0 for the reduced design)
    S  = D Gamma^+ + L2 (I - Gamma Gamma^+)
    N  = Atilde - L1 C - L2 (C Atilde + C')
    R  = L1 + N S - S'

with ``S'`` taken by central differences of the sampled ``S``.  The
estimation error then obeys ``e' = N e`` and does not see ``w`` because
``D - S C D = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import (ContractError, IntegrationError, SimulationError,
                         SynthesisInconsistencyError, SynthesisUnavailableError)
from .integrate import rk4, stage_tables
from .signals import MatrixSignal, TimeGrid, stack_norms

__all__ = [
    "ObserverRealization",
    "RelationReport",
    "DecayFit",
    "SimulationResult",
    "synthesize",
    "verify_relations",
    "simulate",
    "decay_fit",
    "central_difference",
]

ERROR_FLOOR = 1e-10


def central_difference(values, h):
    """Derivative of samples along axis 0: central inside, second-order
    one-sided at both ends."""
    values = np.asarray(values, dtype=float)
    if len(values) < 3:
        return np.gradient(values, h, axis=0, edge_order=1)
    return np.gradient(values, h, axis=0, edge_order=2)


def _fourth_order_difference(values, h):
    # Reference derivative for residual checks; independent of the
    # three-point stencil used for S'.
    f = np.asarray(values, dtype=float)
    if len(f) < 5:
        return central_difference(f, h)
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


@dataclass
class ObserverRealization:
    """Sampled observer matrices plus the residuals of the decoupling relations.

    ``design`` is ``"full"`` (Riccati on ``(Atilde, Ctilde)``) or
    ``"reduced"`` (Riccati on ``(Atilde, C)`` with ``L2 = 0``).
    """

    grid: TimeGrid
    N: MatrixSignal
    R: MatrixSignal
    S: MatrixSignal
    Sdot: MatrixSignal
    L1: MatrixSignal
    L2: MatrixSignal
    decoupling: MatrixSignal  # D - S C D
    backing: object = field(repr=False)
    design: str = "full"
    r2_residual: np.ndarray = field(default=None, repr=False)
    r3_residual: np.ndarray = field(default=None, repr=False)
    r2_tol: float = math.nan
    r3_tol: float = math.nan

    @property
    def n(self):
        return self.N.rows


def _r2_residual(A, C, Cdot, N, R, S, Sdot_ref):
    # N - A + (R - N S + S') C + S (C A + C')
    res = N - A + (R - N @ S + Sdot_ref) @ C + S @ (C @ A + Cdot)
    return stack_norms(res)


def synthesize(sys, aux, sol, grid=None, r2_tol=None, r3_tol=None):
    """Assemble ``(N, R, S)`` from a bounded Riccati solution.

    Parameters
    ----------
    sys : LtvSystem
    aux : AuxiliarySystem
        Built on the same grid as ``sol``.
    sol : RiccatiSolution
        Solved for ``(Atilde, Ctilde)`` (full design) or ``(Atilde, C)``
        (reduced design, ``L2 = 0``); the design is inferred from the number
        of outputs.
    grid : TimeGrid, optional
        Defaults to ``aux.grid``.
    r2_tol, r3_tol : float, optional
        Residual tolerances.  Defaults ``1e-4 (1 + max||A||)`` and
        ``1e-8 (1 + max||D||)``.

    Returns
    -------
    ObserverRealization

    Raises
    ------
    SynthesisUnavailableError
        If the Riccati verdict is not ``bounded``.
    SynthesisInconsistencyError
        If a relation residual exceeds its tolerance; carries the worst time.
    """
    if not sol.is_bounded:
        raise SynthesisUnavailableError(
            f"no strong observer: Riccati solution is {sol.verdict} "
            f"({sol.reason})")
    grid = grid or aux.grid
    if not (aux.grid.same_as(grid) and sol.grid.same_as(grid)):
        raise ContractError("system, auxiliary pair and Riccati solution "
                            "must share one grid")
    p, n = sys.p, sys.n
    if sol.n_outputs == 2 * p:
        design = "full"
    elif sol.n_outputs == p:
        design = "reduced"
    else:
        raise ContractError(
            f"Riccati solution has {sol.n_outputs} outputs; expected "
            f"{p} (reduced) or {2 * p} (full)")

    ts, h = grid.times, grid.step
    A = sys.A.sample(ts)
    D = sys.D.sample(ts)
    C = sys.C.sample(ts)
    Cdot = sys.C.sample_derivative(ts)
    G = aux.Gamma.values
    Gp = aux.GammaPinv.values
    At = aux.Atilde.values
    CAt = aux.CAtilde.values
    P = sol.P.values
    Ct = np.swapaxes(C, 1, 2)

    L1 = P @ Ct
    if design == "full":
        L2 = P @ np.swapaxes(CAt, 1, 2)
    else:
        L2 = np.zeros((grid.count, n, p))
    proj = np.eye(p) - G @ Gp
    S = D @ Gp + L2 @ proj
    Sdot = central_difference(S, h)
    N = At - L1 @ C - L2 @ CAt
    R = L1 + N @ S - Sdot

    decoupling = D - S @ C @ D
    r3 = stack_norms(decoupling)
    r2 = _r2_residual(A, C, Cdot, N, R, S, _fourth_order_difference(S, h))
    maxA = float(np.max(stack_norms(A)))
    maxD = float(np.max(stack_norms(D))) if sys.q else 0.0
    r2_tol = 1e-4 * (1 + maxA) if r2_tol is None else r2_tol
    r3_tol = 1e-8 * (1 + maxD) if r3_tol is None else r3_tol
    for name, res, tol in (("r3", r3, r3_tol), ("r2", r2, r2_tol)):
        i = int(np.argmax(res))
        if res[i] > tol:
            raise SynthesisInconsistencyError(
                f"relation {name} residual {res[i]:.3e} exceeds {tol:.3e} "
                f"at t={ts[i]:.6g}", relation=name, residual=float(res[i]),
                t=float(ts[i]))

    def s(v, name):
        return MatrixSignal.sampled(grid, v, name=name)

    return ObserverRealization(
        grid=grid, N=s(N, "N"), R=s(R, "R"), S=s(S, "S"), Sdot=s(Sdot, "Sdot"),
        L1=s(L1, "L1"), L2=s(L2, "L2"), decoupling=s(decoupling, "D-SCD"),
        backing=sol, design=design, r2_residual=r2, r3_residual=r3,
        r2_tol=r2_tol, r3_tol=r3_tol)


def transition_matrix(Nsig, grid):
    """Phi(t_end, t_start) of ``e' = N(t) e`` by RK4 on ``grid``."""
    Nn, Nm = stage_tables(Nsig, grid)

    def rhs(k, stage, Phi):
        M = Nn[k] if stage == 0 else Nm[k] if stage == 1 else Nn[k + 1]
        return M @ Phi

    return rk4(rhs, np.eye(Nsig.rows), grid)[-1]


@dataclass
class RelationReport:
    r2_max: float
    r2_tol: float
    r2_worst_t: float
    r3_max: float
    r3_tol: float
    r3_worst_t: float
    r1_full_factor: float
    r1_windows: list
    r1_mu_hat: float

    @property
    def r2_pass(self):
        return self.r2_max <= self.r2_tol

    @property
    def r3_pass(self):
        return self.r3_max <= self.r3_tol

    @property
    def r1_pass(self):
        return all(f < 1.0 for _, f in self.r1_windows) and self.r1_mu_hat > 0

    @property
    def passed(self):
        return self.r1_pass and self.r2_pass and self.r3_pass

    def as_dict(self):
        return {
            "r1": {"pass": self.r1_pass, "full_horizon_factor": self.r1_full_factor,
                   "mu_hat": self.r1_mu_hat,
                   "windows": [{"t0": t, "factor": f} for t, f in self.r1_windows]},
            "r2": {"pass": self.r2_pass, "max": self.r2_max, "tol": self.r2_tol,
                   "worst_t": self.r2_worst_t},
            "r3": {"pass": self.r3_pass, "max": self.r3_max, "tol": self.r3_tol,
                   "worst_t": self.r3_worst_t},
        }


def verify_relations(sys, obs, grid=None, n_windows=5):
    """Residual report for the three strong-observer relations.

    (r2) and (r3) are max-over-grid residual norms; (r2) is evaluated with a
    fourth-order reference derivative of ``S``, so it measures the
    finite-difference error of the stored ``S'``.  (r1) is approximated by
    contraction of the transition matrix of ``e' = N e`` over the whole
    horizon and over ``n_windows`` half-horizon windows with evenly spaced
    start times.
    """
    grid = grid or obs.grid
    ts, h = grid.times, grid.step
    A = sys.A.sample(ts)
    C = sys.C.sample(ts)
    D = sys.D.sample(ts)
    Cdot = sys.C.sample_derivative(ts)
    S = obs.S.sample(ts)
    r2 = _r2_residual(A, C, Cdot, obs.N.sample(ts), obs.R.sample(ts), S,
                      _fourth_order_difference(S, h))
    r3 = stack_norms(D - S @ C @ D)
    i2, i3 = int(np.argmax(r2)), int(np.argmax(r3))

    full = float(np.linalg.norm(transition_matrix(obs.N, grid), 2))
    span = grid.n_steps
    width = max(span // 2, 1)
    starts = np.unique(np.linspace(0, span - width, max(n_windows, 1)).astype(int))
    windows, rates = [], []
    for k0 in starts:
        sub = TimeGrid(float(ts[k0]), h, width + 1)
        f = float(np.linalg.norm(transition_matrix(obs.N, sub), 2))
        windows.append((float(ts[k0]), f))
        rates.append(-math.log(f) / (width * h) if f > 0 else math.inf)
    return RelationReport(
        r2_max=float(r2[i2]), r2_tol=obs.r2_tol, r2_worst_t=float(ts[i2]),
        r3_max=float(r3[i3]), r3_tol=obs.r3_tol, r3_worst_t=float(ts[i3]),
        r1_full_factor=full, r1_windows=windows, r1_mu_hat=float(min(rates)))


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit ``log(||e(t)|| / ||e(t0)||) ~ log M - mu (t - t0)``."""

    mu_hat: float
    M_hat: float
    r_squared: float
    t_window_end: float
    n_samples: int


def decay_fit(times, error_norm, floor=ERROR_FLOOR):
    """Fit an exponential envelope to ``error_norm`` over the pre-floor window.

    The window is the leading run of samples with ``||e|| > floor``.
    """
    times = np.asarray(times, dtype=float)
    en = np.asarray(error_norm, dtype=float)
    below = en <= floor
    stop = int(np.argmax(below)) if below.any() else len(en)
    if stop < 2 or en[0] <= 0:
        return DecayFit(math.nan, math.nan, math.nan,
                        float(times[max(stop - 1, 0)]), stop)
    x = times[:stop] - times[0]
    y = np.log(en[:stop] / en[0])
    slope, intercept = np.polyfit(x, y, 1)
    fit = intercept + slope * x
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - fit) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), float(math.exp(intercept)), r2,
                    float(times[stop - 1]), stop)


@dataclass
class SimulationResult:
    """Trajectories on the simulation grid.

    In ``plant`` coordinates ``e`` is computed as ``x - xhat``.  In ``error``
    coordinates ``e`` is integrated directly and ``xhat = x - e`` for every
    sample after the first; ``xhat[0]`` is the prescribed initial estimate in
    both cases.
    """

    grid: TimeGrid
    x: np.ndarray = field(repr=False)
    xhat: np.ndarray = field(repr=False)
    e: np.ndarray = field(repr=False)
    error_norm: np.ndarray = field(repr=False)
    fit: DecayFit
    input_trace: np.ndarray = field(repr=False)
    coordinates: str = "error"

    @property
    def decay_fit(self):
        return (self.fit.mu_hat, self.fit.M_hat)

    def error_norm_table(self):
        return np.column_stack([self.grid.times, self.error_norm])

    def error_components_table(self):
        return np.column_stack([self.grid.times, self.e])

    def write_error_norm_csv(self, path):
        from .io import write_csv
        return write_csv(path, ["t", "error_norm"], self.error_norm_table())

    def write_error_components_csv(self, path):
        from .io import write_csv
        n = self.e.shape[1]
        return write_csv(path, ["t"] + [f"e{i + 1}" for i in range(n)],
                         self.error_components_table())

    def write_traces_csv(self, path):
        from .io import write_csv
        n = self.x.shape[1]
        header = (["t"] + [f"x{i + 1}" for i in range(n)]
                  + [f"xhat{i + 1}" for i in range(n)])
        return write_csv(path, header,
                         np.column_stack([self.grid.times, self.x, self.xhat]))


def _input_tables(w, q, grid):
    ts, tm = grid.times, grid.midpoints
    if w is None:
        return np.zeros((len(ts), q)), np.zeros((len(tm), q))
    if isinstance(w, MatrixSignal):
        if w.shape != (q, 1):
            raise ContractError(f"input signal must be {q}x1, got {w.shape}")
        return w.sample(ts)[:, :, 0], w.sample(tm)[:, :, 0]

    def table(times):
        try:
            v = np.asarray(w(times), dtype=float)
            if v.shape in ((len(times),), (len(times), q)):
                return v.reshape(len(times), q)
        except (TypeError, ValueError):
            pass
        return np.array([np.asarray(w(t), dtype=float).reshape(q)
                         for t in times])

    return table(ts), table(tm)


def simulate(sys, obs, x0, z0_policy="from_xhat0", xhat0=None, w=None,
             grid=None, coordinates="error"):
    """Co-simulate the plant and the strong observer.

    Parameters
    ----------
    sys : LtvSystem
    obs : ObserverRealization
    x0 : (n,) array_like
        Plant initial state.
    z0_policy : {'from_xhat0', 'zero'}
        ``from_xhat0`` picks ``z0 = xhat0 - S(t0) C(t0) x0`` so that the
        estimate starts at ``xhat0`` (default zeros).  ``zero`` starts the
        observer state at the origin.
    w : callable, MatrixSignal or None
        Unknown input ``w(t)`` (scalar or length-q); ``None`` means zero.
    grid : TimeGrid, optional
        Defaults to ``obs.grid``.
    coordinates : {'error', 'plant'}
        ``plant`` integrates ``(x, z)`` as written and forms
        ``e = x - xhat``.  ``error`` integrates the same linear system after
        the change of variables ``z = (I - S C) x - e``; the error then obeys
        ``e' = N e + (D - S C D) w`` and is free of the cancellation that
        ruins ``x - xhat`` once ``||x||`` grows past ``~1e-16 * ||e||``
        (unstable plants, unbounded inputs).

    Returns
    -------
    SimulationResult

    Raises
    ------
    SimulationError
        If the estimation error becomes non-finite, or the plant state does.
    """
    grid = grid or obs.grid
    if coordinates not in ("error", "plant"):
        raise ContractError(f"unknown coordinates {coordinates!r}")
    n, q = sys.n, sys.q
    x0 = np.asarray(x0, dtype=float).reshape(n)
    t0 = grid.t_start
    S0, C0 = obs.S.eval(t0), sys.C.eval(t0)
    if z0_policy == "from_xhat0":
        xh0 = np.zeros(n) if xhat0 is None else np.asarray(xhat0, float).reshape(n)
        z0 = xh0 - S0 @ (C0 @ x0)
    elif z0_policy == "zero":
        z0 = np.zeros(n)
        xh0 = S0 @ (C0 @ x0)
    else:
        raise ContractError(f"unknown z0 policy {z0_policy!r}")

    wn, wm = _input_tables(w, q, grid)
    An, Am = stage_tables(sys.A, grid)
    Dn, Dm = stage_tables(sys.D, grid)
    Dwn = np.einsum("kij,kj->ki", Dn, wn)
    Dwm = np.einsum("kij,kj->ki", Dm, wm)

    def plant_rhs(k, stage, x):
        if stage == 0:
            return An[k] @ x + Dwn[k]
        if stage == 1:
            return Am[k] @ x + Dwm[k]
        return An[k + 1] @ x + Dwn[k + 1]

    Nn, Nm = stage_tables(obs.N, grid)

    if coordinates == "error":
        Wn, Wm = stage_tables(obs.decoupling, grid)
        Wwn = np.einsum("kij,kj->ki", Wn, wn)
        Wwm = np.einsum("kij,kj->ki", Wm, wm)

        def err_rhs(k, stage, e):
            if stage == 0:
                return Nn[k] @ e + Wwn[k]
            if stage == 1:
                return Nm[k] @ e + Wwm[k]
            return Nn[k + 1] @ e + Wwn[k + 1]

        try:
            e = rk4(err_rhs, x0 - xh0, grid)
        except IntegrationError as exc:
            raise SimulationError(f"estimation error diverged: {exc}",
                                  t=exc.t) from exc
        try:
            x = rk4(plant_rhs, x0, grid)
        except IntegrationError as exc:
            raise SimulationError(f"plant state diverged: {exc}",
                                  t=exc.t) from exc
        xhat = x - e
        xhat[0] = xh0
        e[0] = x0 - xh0
    else:
        Rn, Rm = stage_tables(obs.R, grid)
        Cn, Cm = stage_tables(sys.C, grid)
        RCn, RCm = Rn @ Cn, Rm @ Cm

        def joint_rhs(k, stage, y):
            x, z = y[:n], y[n:]
            if stage == 0:
                Nk, RCk = Nn[k], RCn[k]
            elif stage == 1:
                Nk, RCk = Nm[k], RCm[k]
            else:
                Nk, RCk = Nn[k + 1], RCn[k + 1]
            return np.concatenate([plant_rhs(k, stage, x), Nk @ z + RCk @ x])

        try:
            y = rk4(joint_rhs, np.concatenate([x0, z0]), grid)
        except IntegrationError as exc:
            raise SimulationError(f"co-simulation diverged: {exc}",
                                  t=exc.t) from exc
        x, z = y[:, :n], y[:, n:]
        Sn = obs.S.sample(grid.times)
        xhat = z + np.einsum("kij,kj->ki", Sn @ Cn, x)
        xhat[0] = xh0
        e = x - xhat

    en = np.linalg.norm(e, axis=1)
    return SimulationResult(grid=grid, x=x, xhat=xhat, e=e, error_norm=en,
                            fit=decay_fit(grid.times, en), input_trace=wn,
                            coordinates=coordinates)
