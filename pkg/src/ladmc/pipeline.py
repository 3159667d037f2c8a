"""End-to-end completion: lift, low-rank complete, unlift.

``ladmc`` runs the three stages once; ``iladmc`` alternates short bursts
of hard thresholding in the lifted space with unlifting and known-entry
refill until the estimate stabilizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lrmc import SolveDiagnostics, SvpOptions, svp_complete
from .preimage import preimage_column, rank1_gap
from .tensorize import augment_ones, build_index_map, tensorize_matrix

SUCCESS_TOL = 1e-4


@dataclass
class LadmcConfig:
    p: int = 2
    rank_R: int | str = "auto"
    svp: SvpOptions | None = None
    iladmc_inner_T: int = 30
    iladmc_max_outer: int = 100
    iladmc_rel_tol: float = 1e-7
    augment_ones: bool = False

    def __post_init__(self):
        if self.iladmc_inner_T < 1:
            raise ValueError("iladmc_inner_T must be >= 1")


@dataclass
class CompletionReport:
    X_hat: np.ndarray
    outer_iterations: int
    per_column_rank1_ratio: np.ndarray
    nrmse: float | None = None
    success: bool | None = None
    solver: SolveDiagnostics | None = None
    zero_columns: list = field(default_factory=list)
    rank_used: int = 0


def nrmse(X_hat: np.ndarray, X_true: np.ndarray) -> float:
    """Frobenius-norm relative error |X_hat - X_true|_F / |X_true|_F."""
    X_hat = np.asarray(X_hat, dtype=float)
    X_true = np.asarray(X_true, dtype=float)
    if X_hat.shape != X_true.shape:
        raise ValueError(f"shape mismatch {X_hat.shape} vs {X_true.shape}")
    denom = np.linalg.norm(X_true)
    if denom == 0.0:
        raise ValueError("ground truth has zero norm")
    return float(np.linalg.norm(X_hat - X_true) / denom)


def auto_rank(T_obs: np.ndarray) -> int:
    """Rank at the largest relative spectral gap of the zero-filled lift."""
    s = np.linalg.svd(T_obs, compute_uv=False)
    if s.size <= 1 or s[0] == 0.0:
        return 1
    # floor tiny values instead of dropping them so the gap at the true
    # rank of an exactly low-rank matrix stays visible
    s = np.maximum(s, 1e-14 * s[0])
    ratios = s[:-1] / s[1:]
    return int(np.argmax(ratios)) + 1


def _resolve_rank(cfg: LadmcConfig, T_obs: np.ndarray) -> int:
    D = T_obs.shape[0]
    if cfg.rank_R == "auto":
        R = auto_rank(T_obs)
    else:
        R = int(cfg.rank_R)
    if R > D:
        raise ValueError(f"rank {R} exceeds lifted dimension {D}")
    return R


def _svp_options(cfg: LadmcConfig, R: int, max_iters=None, rel_tol=None):
    base = cfg.svp
    return SvpOptions(
        rank=R,
        step_size=base.step_size if base else 1.0,
        max_iters=max_iters or (base.max_iters if base else 500),
        rel_tol=rel_tol or (base.rel_tol if base else 1e-6),
        seed=base.seed if base else None,
        accel=base.accel if base else False,
        accel_restart=base.accel_restart if base else 300,
    )


def _unlift(T_hat, imap, X_obs, mask, augmented):
    """Per-column pre-image with sign resolution from the observed entries."""
    N = T_hat.shape[1]
    d_out = imap.d - 1 if augmented else imap.d
    X_hat = np.zeros((d_out, N))
    ratios = np.zeros(N)
    for i in range(N):
        vals, m = X_obs[:, i], mask[:, i]
        x = preimage_column(T_hat[:, i], imap, vals, m)
        ratios[i] = rank1_gap(T_hat[:, i], imap)
        if augmented:
            # true augmented column is [1, x]; rescale when the constant
            # coordinate came back cleanly
            x = x[1:] / x[0] if abs(x[0]) > 1e-9 else x[1:]
        X_hat[:, i] = x
    return X_hat, ratios


def _finalize(X_hat, X_obs_orig, mask_orig, report, X_true):
    X_hat[mask_orig] = X_obs_orig[mask_orig]
    zero_cols = np.nonzero(mask_orig.sum(axis=0) == 0)[0]
    X_hat[:, zero_cols] = 0.0
    report.X_hat = X_hat
    report.zero_columns = list(map(int, zero_cols))
    if X_true is not None:
        report.nrmse = nrmse(X_hat, X_true)
        report.success = report.nrmse < SUCCESS_TOL
    return report


def ladmc(
    X_obs: np.ndarray,
    mask: np.ndarray,
    cfg: LadmcConfig | None = None,
    X_true: np.ndarray | None = None,
) -> CompletionReport:
    """One pass of lift / low-rank complete / unlift / refill known entries."""
    cfg = cfg or LadmcConfig()
    X_obs = np.asarray(X_obs, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    X_in, mask_in = (augment_ones(X_obs, mask) if cfg.augment_ones
                     else (X_obs, mask))
    imap = build_index_map(X_in.shape[0], cfg.p)
    T_obs, T_mask = tensorize_matrix(X_in, mask_in, imap)
    R = _resolve_rank(cfg, T_obs)
    T_hat, diag = svp_complete(T_obs, T_mask, _svp_options(cfg, R))
    X_hat, ratios = _unlift(T_hat, imap, X_in, mask_in, cfg.augment_ones)
    report = CompletionReport(
        X_hat=X_hat, outer_iterations=1, per_column_rank1_ratio=ratios,
        solver=diag, rank_used=R,
    )
    return _finalize(X_hat, X_obs, mask, report, X_true)


def iladmc(
    X_obs: np.ndarray,
    mask: np.ndarray,
    cfg: LadmcConfig | None = None,
    X_true: np.ndarray | None = None,
) -> CompletionReport:
    """Iterative variant: repeat T lifted hard-thresholding steps, unlift,
    refill the known entries, until the outer estimate stops changing."""
    cfg = cfg or LadmcConfig()
    X_obs = np.asarray(X_obs, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    X_in, mask_in = (augment_ones(X_obs, mask) if cfg.augment_ones
                     else (X_obs, mask))
    imap = build_index_map(X_in.shape[0], cfg.p)
    T_obs, T_mask = tensorize_matrix(X_in, mask_in, imap)
    R = _resolve_rank(cfg, T_obs)
    opts = _svp_options(cfg, R, max_iters=cfg.iladmc_inner_T)

    X_cur = np.where(mask_in, X_in, 0.0)
    outer = 0
    diag = None
    ratios = np.zeros(X_in.shape[1])
    full = np.ones_like(mask_in)
    for outer in range(1, cfg.iladmc_max_outer + 1):
        Z0, _ = tensorize_matrix(X_cur, full, imap)
        T_hat, diag = svp_complete(T_obs, T_mask, opts, Z0=Z0)
        X_new, ratios = _unlift(T_hat, imap, X_in, mask_in, False)
        X_new[mask_in] = X_in[mask_in]
        change = np.linalg.norm(X_new - X_cur) / max(np.linalg.norm(X_cur), 1e-30)
        X_cur = X_new
        if change < cfg.iladmc_rel_tol:
            break
    X_hat = X_cur[1:] if cfg.augment_ones else X_cur
    if cfg.augment_ones:
        # drop the constant row; observed-entry refill below restores scale
        ratios = ratios.copy()
    report = CompletionReport(
        X_hat=X_hat, outer_iterations=outer, per_column_rank1_ratio=ratios,
        solver=diag, rank_used=R,
    )
    return _finalize(X_hat, X_obs, mask, report, X_true)
