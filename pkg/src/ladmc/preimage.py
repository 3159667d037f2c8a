"""Recover a column from its completed lifted vector.

For p=2 the lifted vector is unfolded into a symmetric d x d matrix whose
principal singular pair gives the column up to sign; the sign is fixed
from an observed entry.  For p=3 the cubical symmetric tensor is rebuilt
and its best rank-one approximation is found with the symmetric
higher-order power method.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .tensorize import TensorIndexMap, tensorize_column

# Relative scale below which an observed entry is too small to decide a sign.
SIGN_TOL_SCALE = 1e-9

HOPM_ITERS = 100
HOPM_TOL = 1e-12
HOPM_RESTARTS = 5
HOPM_SEED = 0x1AD


@dataclass(frozen=True, eq=False)
class SymmetricLift:
    d: int
    values: np.ndarray  # d x d symmetric


def assemble_symmetric(t: np.ndarray, imap: TensorIndexMap) -> SymmetricLift:
    """Unfold a p=2 lifted vector into the symmetric matrix it came from."""
    if imap.p != 2:
        raise ValueError(f"symmetric matrix assembly requires p=2, got p={imap.p}")
    t = np.asarray(t, dtype=float)
    if t.shape[0] != imap.D:
        raise ValueError(f"lifted vector length {t.shape[0]} != D={imap.D}")
    S = np.zeros((imap.d, imap.d))
    rows, cols = imap.entries[:, 0], imap.entries[:, 1]
    S[rows, cols] = t
    S[cols, rows] = t
    return SymmetricLift(d=imap.d, values=S)


def extract_rank1(lift: SymmetricLift) -> tuple[float, np.ndarray]:
    """Principal singular pair (sigma, u) of a symmetric matrix.

    Ties in the spectrum are broken deterministically by taking the first
    eigenpair (in ascending-eigenvalue order) attaining the largest
    absolute eigenvalue; u has its first nonzero component positive.
    """
    w, V = np.linalg.eigh(lift.values)
    i = int(np.argmax(np.abs(w)))
    sigma = float(abs(w[i]))
    u = V[:, i].copy()
    nz = np.nonzero(np.abs(u) > 1e-12)[0]
    if nz.size and u[nz[0]] < 0:
        u = -u
    return sigma, u


def resolve_sign(
    candidate: np.ndarray, values: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    """Flip the candidate's global sign to match its largest observed entry.

    If no observed entry is reliably nonzero, the convention sign is kept.
    """
    candidate = np.asarray(candidate, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return candidate
    values = np.asarray(values, dtype=float)
    best = idx[np.argmax(np.abs(values[idx]))]
    tol = SIGN_TOL_SCALE * max(np.max(np.abs(candidate)), 1e-300)
    if abs(values[best]) <= tol:
        return candidate
    if values[best] * candidate[best] < 0:
        return -candidate
    return candidate


def _rebuild_cubic(t: np.ndarray, imap: TensorIndexMap) -> np.ndarray:
    T = np.zeros((imap.d,) * 3)
    for q, multi in enumerate(map(tuple, imap.entries)):
        for perm in set(itertools.permutations(multi)):
            T[perm] = t[q]
    return T


def _hopm(T: np.ndarray) -> tuple[float, np.ndarray]:
    """Best-of-restarts symmetric higher-order power method, order 3."""
    d = T.shape[0]
    rng = np.random.default_rng(HOPM_SEED)
    best_lam, best_u = 0.0, np.zeros(d)
    for _ in range(HOPM_RESTARTS):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        for _ in range(HOPM_ITERS):
            v = np.einsum("ijk,j,k->i", T, u, u)
            nv = np.linalg.norm(v)
            if nv == 0.0:
                break
            u_new = v / nv
            if np.linalg.norm(u_new - u) < HOPM_TOL:
                u = u_new
                break
            u = u_new
        lam = float(np.einsum("ijk,i,j,k->", T, u, u, u))
        if abs(lam) > abs(best_lam):
            best_lam, best_u = lam, u
    return best_lam, best_u


def rank1_gap(t: np.ndarray, imap: TensorIndexMap) -> float:
    """sigma_2 / sigma_1 of the unfolded lift (0 for an exact rank-1 lift).

    For p=3 the analogous measure sqrt(|T|_F^2 - lambda^2) / |lambda| from
    the dominant HOPM pair is used.
    """
    if imap.p == 2:
        lift = assemble_symmetric(t, imap)
        s = np.abs(np.linalg.eigvalsh(lift.values))
        s.sort()
        if s[-1] == 0.0:
            return 0.0
        return float(s[-2] / s[-1]) if s.size > 1 else 0.0
    if imap.p == 3:
        T = _rebuild_cubic(t, imap)
        lam, _ = _hopm(T)
        if lam == 0.0:
            return 0.0 if not np.any(T) else np.inf
        rest = max(float(np.sum(T * T) - lam * lam), 0.0)
        return float(np.sqrt(rest) / abs(lam))
    raise ValueError(f"unsupported tensor order p={imap.p}")


def preimage_column(
    t: np.ndarray,
    imap: TensorIndexMap,
    values: np.ndarray | None = None,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Map a completed lifted column back to R^d.

    ``values``/``mask`` give the observed entries of the original column
    and are used only for sign resolution.  An all-zero lift returns the
    zero column.
    """
    t = np.asarray(t, dtype=float)
    if values is None or mask is None:
        values = np.zeros(imap.d)
        mask = np.zeros(imap.d, dtype=bool)
    if imap.p == 2:
        sigma, u = extract_rank1(assemble_symmetric(t, imap))
        candidate = np.sqrt(sigma) * u
        return resolve_sign(candidate, values, mask)
    if imap.p == 3:
        T = _rebuild_cubic(t, imap)
        lam, u = _hopm(T)
        candidate = np.cbrt(lam) * u
        return resolve_sign(candidate, values, mask)
    raise ValueError(f"pre-image supports p in {{2, 3}}, got p={imap.p}")


# re-export for callers that already hold a lifted column
__all__ = [
    "SymmetricLift",
    "assemble_symmetric",
    "extract_rank1",
    "resolve_sign",
    "rank1_gap",
    "preimage_column",
    "tensorize_column",
]
