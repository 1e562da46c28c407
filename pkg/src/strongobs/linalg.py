"""Dense linear algebra used by the observer construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .exceptions import ContractError, RankConditionError

__all__ = [
    "PsdCheckReport",
    "psd_check",
    "pinv_full_column_rank",
    "pinv_full_column_rank_stack",
    "singular_value_extrema",
    "singular_value_extrema_stack",
    "symmetrize_project_psd",
]

DEFAULT_GAMMA_FLOOR = 1e-6


@dataclass(frozen=True)
class PsdCheckReport:
    min_eigenvalue: float
    is_psd_at_tol: bool
    tolerance: float


def psd_check(M, tolerance=1e-10):
    """Smallest eigenvalue of the symmetric part of ``M`` against ``-tolerance``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return PsdCheckReport(0.0, True, tolerance)
    lam = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    return PsdCheckReport(lam, lam >= -tolerance, tolerance)


def pinv_full_column_rank(G, gamma_floor=DEFAULT_GAMMA_FLOOR):
    """Moore-Penrose pseudoinverse of a full-column-rank matrix.

    Computes ``(G^T G)^{-1} G^T`` through a Cholesky factorization of the
    normal matrix.  Falls back to an SVD-based pseudoinverse if the
    factorization fails numerically.

    Parameters
    ----------
    G : (p, q) array_like
        Matrix with ``p >= q``.
    gamma_floor : float
        Required lower bound on the smallest eigenvalue of ``G^T G``.

    Returns
    -------
    (q, p) ndarray

    Raises
    ------
    RankConditionError
        If ``lambda_min(G^T G) < gamma_floor``; the eigenvalue is attached.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    p, q = G.shape
    if q == 0:
        return np.zeros((0, p))
    if p < q:
        raise RankConditionError(f"{p}x{q} matrix cannot have full column rank")
    GtG = G.T @ G
    lam = float(np.linalg.eigvalsh(GtG)[0])
    if lam < gamma_floor:
        raise RankConditionError(
            f"lambda_min(G^T G) = {lam:.3e} below gamma floor {gamma_floor:.3e}",
            min_eigenvalue=lam)
    try:
        return la.cho_solve(la.cho_factor(GtG), G.T)
    except la.LinAlgError:
        return np.linalg.pinv(G)


def pinv_full_column_rank_stack(Gs, gamma_floor=DEFAULT_GAMMA_FLOOR, times=None):
    """Batched :func:`pinv_full_column_rank` over a stack ``(k, p, q)``.

    Returns ``(pinv_stack, min_eigs)``.  The error, if any, reports the first
    offending sample (and its time when ``times`` is given).
    """
    Gs = np.asarray(Gs, dtype=float)
    k, p, q = Gs.shape
    if q == 0:
        return np.zeros((k, 0, p)), np.full(k, np.inf)
    Gt = np.swapaxes(Gs, 1, 2)
    GtG = Gt @ Gs
    lam = np.linalg.eigvalsh(GtG)[:, 0]
    bad = lam < gamma_floor
    if bad.any():
        i = int(np.argmax(bad))
        t = None if times is None else float(times[i])
        where = f" at t={t}" if t is not None else f" at sample {i}"
        raise RankConditionError(
            f"lambda_min(Gamma^T Gamma) = {lam[i]:.3e} below gamma floor "
            f"{gamma_floor:.3e}{where}", min_eigenvalue=float(lam[i]), t=t)
    try:
        L = np.linalg.cholesky(GtG)
        Y = np.linalg.solve(L, Gt)
        pinv = np.linalg.solve(np.swapaxes(L, 1, 2), Y)
    except np.linalg.LinAlgError:
        pinv = np.linalg.pinv(Gs)
    return pinv, lam


def _check_symmetric(M, rtol):
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    asym = float(np.max(np.abs(M - np.swapaxes(M, -1, -2)))) if M.size else 0.0
    if asym > rtol * max(scale, np.finfo(float).tiny):
        raise ContractError(
            f"matrix not symmetric: max|M - M^T| = {asym:.3e} "
            f"exceeds {rtol:g} * {scale:.3e}")


def singular_value_extrema(M, sym_rtol=1e-8):
    """(sigma_min, sigma_max) of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {M.shape}")
    _check_symmetric(M, sym_rtol)
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[-1]), float(s[0])


def singular_value_extrema_stack(Ms, sym_rtol=1e-8):
    """Per-sample (sigma_min, sigma_max) for a stack ``(k, n, n)``; shape ``(k, 2)``."""
    Ms = np.asarray(Ms, dtype=float)
    _check_symmetric(Ms, sym_rtol)
    s = np.linalg.svd(Ms, compute_uv=False)
    return np.column_stack([s[:, -1], s[:, 0]])


def symmetrize_project_psd(M, clip_floor=0.0):
    """Eigenvalue-clipped projection of ``(M + M^T)/2``.

    Eigenvalues below ``clip_floor`` are raised to ``clip_floor``.  When no
    eigenvalue needs clipping the symmetric part is returned as is, so PSD
    inputs are fixed points up to the symmetrization itself.
    """
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + M.T)
    if S.size == 0:
        return S
    if np.linalg.eigvalsh(S)[0] >= clip_floor:
        return S
    lam, V = np.linalg.eigh(S)
    lam = np.maximum(lam, clip_floor)
    out = (V * lam) @ V.T
    return 0.5 * (out + out.T)
