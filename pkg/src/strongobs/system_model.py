"""LTV plant with unknown input and its auxiliary pair.

The plant is

    x' = A(t) x + D(t) w,    y = C(t) x

with unknown input ``w``.  Its strong (unknown-input) observer exists exactly
when the auxiliary pair

    Atilde = A - D Gamma^+ (C A + C'),    Ctilde = [C; C Atilde + C']

with ``Gamma = C D`` is uniformly exponentially detectable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ContractError, EvaluationError
from .linalg import DEFAULT_GAMMA_FLOOR, pinv_full_column_rank_stack
from .riccati import (BLOW_UP, BOUNDED, GROWTH, RiccatiConfig,
                      RiccatiSolution, integrate_dre)
from .signals import MatrixSignal, TimeGrid, boundedness_probe, stack_norms

__all__ = [
    "LtvSystem",
    "AssumptionReport",
    "AuxiliarySystem",
    "DetectabilityVerdict",
    "check_assumptions",
    "build_auxiliary",
    "is_detectable_pair",
    "pbh_detectable",
]


@dataclass(frozen=True)
class LtvSystem:
    """Triple ``(A, D, C)`` of matrix signals with shapes n x n, n x q, p x n."""

    A: MatrixSignal
    D: MatrixSignal
    C: MatrixSignal
    name: str = "ltv"

    def __post_init__(self):
        n = self.A.rows
        if self.A.shape != (n, n):
            raise ContractError(f"A must be square, got {self.A.shape}")
        if self.D.rows != n:
            raise ContractError(f"D has {self.D.rows} rows, expected {n}")
        if self.C.cols != n:
            raise ContractError(f"C has {self.C.cols} columns, expected {n}")
        if self.p < self.q:
            raise ContractError(
                f"need p >= q for the rank condition (p={self.p}, q={self.q})")

    @property
    def n(self):
        return self.A.rows

    @property
    def p(self):
        return self.C.rows

    @property
    def q(self):
        return self.D.cols

    @classmethod
    def from_matrices(cls, A, D, C, name="lti"):
        """Time-invariant system from constant matrices."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        D = np.asarray(D, dtype=float)
        if D.ndim == 1:
            D = D[:, None]
        C = np.atleast_2d(np.asarray(C, dtype=float))
        return cls(MatrixSignal.constant(A, name="A"),
                   MatrixSignal.constant(D, name="D"),
                   MatrixSignal.constant(C, name="C"), name=name)

    def is_time_invariant(self, grid):
        return all(s.is_time_invariant(grid) for s in (self.A, self.D, self.C))


@dataclass
class AssumptionReport:
    a1_bounds: dict
    a2_bounds: dict
    a3_min_eig: float
    gamma_floor: float
    passed: bool
    a3_worst_t: Optional[float] = None

    def lines(self):
        out = []
        for k, v in {**self.a1_bounds, **self.a2_bounds}.items():
            out.append(f"max ||{k}|| = {v:.6g}")
        out.append(f"min eig(Gamma^T Gamma) = {self.a3_min_eig:.6g} "
                   f"(gamma floor {self.gamma_floor:g})")
        out.append("assumptions: " + ("PASSED" if self.passed else "FAILED"))
        return out


def _probe(signal, grid, derivative=False):
    try:
        if derivative:
            return float(np.max(stack_norms(signal.sample_derivative(grid.times))))
        return boundedness_probe(signal, grid)
    except EvaluationError:
        return math.inf


def gamma_samples(sys, grid):
    """``Gamma = C D`` sampled on ``grid``, shape ``(count, p, q)``."""
    ts = grid.times
    return sys.C.sample(ts) @ sys.D.sample(ts)


def check_assumptions(sys, grid, gamma_floor=DEFAULT_GAMMA_FLOOR):
    """Grid probes for boundedness of A, D, C and their derivatives, and the
    rank condition ``Gamma^T Gamma >= gamma_floor * I``.

    Boundedness over ``[0, inf)`` is approximated by maxima over ``grid``.
    """
    if not isinstance(sys, LtvSystem):
        raise ContractError("expected an LtvSystem")
    a1 = {"A": _probe(sys.A, grid), "Adot": _probe(sys.A, grid, True),
          "D": _probe(sys.D, grid), "Ddot": _probe(sys.D, grid, True)}
    a2 = {"C": _probe(sys.C, grid), "Cdot": _probe(sys.C, grid, True)}
    worst_t = None
    if sys.q == 0:
        a3 = math.inf
    else:
        try:
            G = gamma_samples(sys, grid)
            lam = np.linalg.eigvalsh(np.swapaxes(G, 1, 2) @ G)[:, 0]
            i = int(np.argmin(lam))
            a3, worst_t = float(lam[i]), float(grid.times[i])
        except EvaluationError:
            a3 = -math.inf
    finite = all(math.isfinite(v) for v in (*a1.values(), *a2.values()))
    passed = finite and a3 >= gamma_floor
    return AssumptionReport(a1, a2, a3, gamma_floor, passed, worst_t)


@dataclass(frozen=True)
class AuxiliarySystem:
    """Auxiliary pair materialized on a grid.

    ``CAtilde`` holds the lower block ``C Atilde + C'`` of ``Ctilde``.
    """

    grid: TimeGrid
    Gamma: MatrixSignal
    GammaPinv: MatrixSignal
    Atilde: MatrixSignal
    Ctilde: MatrixSignal
    CAtilde: MatrixSignal
    min_eig: float = field(default=math.inf)

    @property
    def p(self):
        return self.CAtilde.rows


def build_auxiliary(sys, grid, gamma_floor=DEFAULT_GAMMA_FLOOR,
                    interp="linear"):
    """Construct ``(Atilde, Ctilde)`` on ``grid``.

    Parameters
    ----------
    sys : LtvSystem
    grid : TimeGrid
    gamma_floor : float
        Pointwise lower bound required for ``lambda_min(Gamma^T Gamma)``.
    interp : {'linear', 'cubic'}
        Interpolation for the sampled outputs.

    Returns
    -------
    AuxiliarySystem

    Raises
    ------
    RankConditionError
        At the first grid time where the rank condition fails.

    Notes
    -----
    For ``q = 0`` (no unknown input) the construction reduces to
    ``Atilde = A`` and ``Ctilde = [C; C A + C']``.
    """
    def construct(ts, check):
        A = sys.A.sample(ts)
        D = sys.D.sample(ts)
        C = sys.C.sample(ts)
        Cdot = sys.C.sample_derivative(ts)
        G = C @ D
        Gp, lam = pinv_full_column_rank_stack(G, gamma_floor if check else 0.0,
                                              times=ts)
        At = A - D @ (Gp @ (C @ A + Cdot))
        lower = C @ At + Cdot
        return G, Gp, lam, At, np.concatenate([C, lower], axis=1), lower

    G, Gp, lam, At, Ct, lower = construct(grid.times, True)
    # exact stage values for RK4; the rank floor is enforced on the nodes
    mid = construct(grid.midpoints, False) if grid.count > 1 else [None] * 6

    def s(v, name, vm):
        return MatrixSignal.sampled(grid, v, interp=interp, name=name,
                                    midpoints=vm)

    return AuxiliarySystem(
        grid=grid,
        Gamma=s(G, "Gamma", mid[0]),
        GammaPinv=s(Gp, "GammaPinv", mid[1]),
        Atilde=s(At, "Atilde", mid[3]),
        Ctilde=s(Ct, "Ctilde", mid[4]),
        CAtilde=s(lower, "CAtilde+Cdot", mid[5]),
        min_eig=float(np.min(lam)) if sys.q else math.inf,
    )


def pbh_detectable(A, C, tol=1e-9):
    """PBH detectability test for a constant pair.

    Every eigenvalue of ``A`` with nonnegative real part must be observable,
    i.e. ``[lambda I - A; C]`` must have full column rank.  Rank is decided
    by the smallest singular value relative to the matrix scale.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    scale = max(1.0, np.linalg.norm(A, 2), np.linalg.norm(C, 2) if C.size else 0.0)
    for lam in np.linalg.eigvals(A):
        if lam.real < -tol * scale:
            continue
        M = np.vstack([lam * np.eye(n) - A, C.astype(complex)])
        smin = np.linalg.svd(M, compute_uv=False)[-1]
        if smin <= 1e-7 * scale:
            return False
    return True


@dataclass
class DetectabilityVerdict:
    """Outcome of the finite-horizon Riccati boundedness probe.

    ``status`` is ``detectable``, ``not-detectable`` or ``inconclusive``.
    The threshold and horizon are numerical choices, not part of the
    mathematical definition; they are carried along for the record.
    """

    status: str
    solution: RiccatiSolution
    reason: str
    threshold: float
    horizon: float
    pbh: Optional[bool] = None

    @property
    def detectable(self):
        return self.status == "detectable"

    @property
    def pbh_agrees(self):
        if self.pbh is None:
            return None
        if self.status == "inconclusive":
            return False
        return self.pbh == self.detectable

    @property
    def sigma_trace(self):
        return self.solution.sigma_table()


def is_detectable_pair(Apair, Cpair, grid, riccati_cfg=None, pbh=None):
    """Detectability of ``(Apair, Cpair)`` from Riccati boundedness on ``grid``.

    For time-invariant pairs a PBH test is run as a second opinion (set
    ``pbh=False`` to skip it); disagreement is reported via
    :attr:`DetectabilityVerdict.pbh_agrees`, never resolved silently.
    """
    if Apair.cols != Cpair.cols:
        raise ContractError("A and C column counts differ")
    cfg = riccati_cfg or RiccatiConfig()
    sol = integrate_dre(Apair, Cpair, cfg, grid)
    if sol.verdict == BOUNDED:
        status = "detectable"
    elif sol.verdict in (BLOW_UP, GROWTH):
        status = "not-detectable"
    else:
        status = "inconclusive"
    pbh_result = None
    if pbh is not False and Apair.is_time_invariant(grid) \
            and Cpair.is_time_invariant(grid):
        t0 = grid.t_start
        pbh_result = pbh_detectable(Apair.eval(t0), Cpair.eval(t0))
    return DetectabilityVerdict(status, sol, sol.reason, cfg.blow_up_threshold,
                                grid.t_end - grid.t_start, pbh_result)
