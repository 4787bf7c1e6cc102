"""Geographically weighted regression with an adaptive Gaussian kernel.

Each tract gets its own weighted least-squares fit, with weights decaying by
centroid distance under a bandwidth set adaptively as the distance to the
neighbors_k-th nearest tract (the tract itself counts as its first neighbor).
The neighbor count is chosen by minimizing small-sample-corrected AIC.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.spatial.distance import cdist

from .data_model import DesignData, TractSet
from .errors import SelectionError
from .ols import RANK_RTOL

log = logging.getLogger(__name__)

# Kernel weights below this are truncated to zero so far-away rows drop out
# of the local solves entirely.
WEIGHT_FLOOR = 1e-12

# Two-sided significance threshold used in the local-coefficient summaries.
T_CRIT = 1.96

# AICc ties within this tolerance are broken toward larger neighbor counts.
TIE_TOL = 1e-9

# Ranges at most this wide are scanned exhaustively instead of golden-section.
EXHAUSTIVE_LIMIT = 25


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel with an adaptive per-tract bandwidth.

    bandwidth_scale multiplies every adaptive bandwidth; values around 1e6
    flatten the kernel so local fits degenerate to the global fit, which is
    useful as a diagnostic.
    """

    neighbors_k: int
    family: str = "gaussian"
    bandwidth_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if self.neighbors_k < 1:
            raise ValueError(f"neighbors_k must be >= 1, got {self.neighbors_k}")
        if not self.bandwidth_scale > 0:
            raise ValueError(f"bandwidth_scale must be > 0, got {self.bandwidth_scale}")


@dataclass(frozen=True)
class LocalFit:
    """One tract's weighted fit. se_unit is the unit-sigma covariance diagonal;
    the caller scales it by the model-wide residual sigma."""

    ok: bool
    coefficients: np.ndarray
    se_unit: np.ndarray
    hat_row: np.ndarray
    hat_diag: float
    fitted: float
    local_r2: float
    local_r2_raw: float
    message: str = ""


@dataclass(frozen=True)
class GwrFit:
    local_coefficients: np.ndarray  # n x (k+1); NaN rows where the local fit failed
    local_se: np.ndarray
    local_t: np.ndarray
    local_r2: np.ndarray
    local_r2_raw: np.ndarray
    hat_diag: np.ndarray
    bandwidths: np.ndarray
    trace_S: float
    rss: float
    sigma2: float
    aicc: float
    neighbors_k: int
    failed: tuple[str, ...]
    column_names: tuple[str, ...]
    tract_ids: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.local_coefficients.shape[0]

    @property
    def k(self) -> int:
        return self.local_coefficients.shape[1] - 1


@dataclass(frozen=True)
class GwrSummary:
    column_names: tuple[str, ...]
    mean: np.ndarray
    min: np.ndarray
    max: np.ndarray
    pct_sig_neg: np.ndarray  # share of tracts with t < -T_CRIT, in [0, 1]
    pct_sig_pos: np.ndarray
    mean_local_r2: float
    min_local_r2: float
    max_local_r2: float
    neighbors_k: int
    aicc: float
    n_used: int
    n_failed: int


def gaussian_weights(distances: np.ndarray, bandwidth: float) -> np.ndarray:
    """w_i = exp(-(d_i / b)^2 / 2); 1 at d=0, strictly decreasing in d."""
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    d = np.asarray(distances, dtype=float)
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    return np.exp(-0.5 * (d / bandwidth) ** 2)


def adaptive_bandwidth(tracts: TractSet, j: int, neighbors_k: int) -> float:
    """Centroid distance from tract j to its neighbors_k-th nearest tract.

    The tract itself counts as its own first neighbor at distance zero, so
    neighbors_k = 1 gives bandwidth 0.
    """
    n = len(tracts)
    if not 1 <= neighbors_k <= n:
        raise ValueError(f"neighbors_k={neighbors_k} outside [1, {n}]")
    deltas = tracts.centroids - tracts.centroids[j]
    d = np.sqrt(deltas[:, 0] ** 2 + deltas[:, 1] ** 2)
    return float(np.partition(d, neighbors_k - 1)[neighbors_k - 1])


def _bandwidths(distances: np.ndarray, neighbors_k: int) -> np.ndarray:
    return np.partition(distances, neighbors_k - 1, axis=1)[:, neighbors_k - 1]


def fit_local(data: DesignData, weights: np.ndarray, j: int) -> LocalFit:
    """Weighted least squares for one tract.

    Returns coefficients, the unit-sigma SE diagonal, the full hat row
    (x_j (X'WX)^-1 X'W scattered over all n rows), and the weighted local R^2
    centered on the weighted mean of y. Local rank deficiency is reported via
    ok=False rather than an exception so a whole-surface fit can continue.
    """
    X, y = data.X, data.y
    n, p = X.shape
    w = np.asarray(weights, dtype=float)
    w = np.where(w > WEIGHT_FLOOR, w, 0.0)
    active = np.flatnonzero(w)
    nan_vec = np.full(p, np.nan)

    def failed(msg: str) -> LocalFit:
        return LocalFit(
            ok=False,
            coefficients=nan_vec,
            se_unit=nan_vec.copy(),
            hat_row=np.full(n, np.nan),
            hat_diag=math.nan,
            fitted=math.nan,
            local_r2=math.nan,
            local_r2_raw=math.nan,
            message=msg,
        )

    if active.size < p:
        return failed(f"only {active.size} active rows for {p} terms")

    wa = w[active]
    sw = np.sqrt(wa)
    Xa = X[active]
    Xw = Xa * sw[:, None]
    Q, R = np.linalg.qr(Xw)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or np.any(diag <= RANK_RTOL * diag.max()):
        return failed("locally rank-deficient design")

    beta = solve_triangular(R, Q.T @ (y[active] * sw))
    r_inv = solve_triangular(R, np.eye(p))
    M = r_inv @ r_inv.T  # (X'WX)^-1

    xj = X[j]
    v = M @ xj
    hat_active = (Xa @ v) * wa
    hat_row = np.zeros(n)
    hat_row[active] = hat_active
    hat_diag = float(hat_row[j])
    fitted = float(hat_row @ y)

    B = Xa @ M
    se_unit = np.sqrt(np.einsum("i,ij,ij->j", wa * wa, B, B))

    resid = y[active] - Xa @ beta
    rss_w = float(wa @ (resid * resid))
    ybar_w = float(wa @ y[active]) / float(wa.sum())
    dev = y[active] - ybar_w
    tss_w = float(wa @ (dev * dev))
    if tss_w > 0.0:
        r2_raw = 1.0 - rss_w / tss_w
    else:
        r2_raw = 1.0 if rss_w <= 1e-24 else 0.0
    return LocalFit(
        ok=True,
        coefficients=beta,
        se_unit=se_unit,
        hat_row=hat_row,
        hat_diag=hat_diag,
        fitted=fitted,
        local_r2=min(1.0, max(0.0, r2_raw)),
        local_r2_raw=r2_raw,
    )


def compute_aicc(rss: float, n: int, trace_s: float) -> float:
    """AICc = n ln(RSS/n) + n ln(2 pi) + n (n + tr(S)) / (n - 2 - tr(S))."""
    if n - 2.0 - trace_s <= 0.0:
        return math.inf
    if rss <= 0.0:
        return -math.inf
    return (
        n * math.log(rss / n)
        + n * math.log(2.0 * math.pi)
        + n * (n + trace_s) / (n - 2.0 - trace_s)
    )


def _pairwise_distances(data: DesignData, tracts: TractSet) -> np.ndarray:
    idx = [tracts.index_of(tid) for tid in data.tract_ids]
    pts = tracts.centroids[idx]
    return cdist(pts, pts)


def fit_gwr(
    data: DesignData,
    tracts: TractSet,
    kernel: KernelSpec,
    workers: int = 1,
    aicc_loo: bool = False,
    distances: np.ndarray | None = None,
) -> GwrFit:
    """Fit one local model per design row.

    Bandwidths adapt within the rows present in `data` (tracts dropped by
    complete-case filtering do not count as neighbors). Results are keyed by
    tract_id and identical under any worker count. `aicc_loo` switches the
    AICc residuals to leave-one-out fitted values (self weight zeroed before
    refitting); the default uses leave-in fitted values.
    """
    n, p = data.X.shape
    if not p + 1 <= kernel.neighbors_k <= n:
        raise ValueError(
            f"neighbors_k={kernel.neighbors_k} outside [{p + 1}, {n}] for this design"
        )
    if distances is None:
        distances = _pairwise_distances(data, tracts)
    bw = _bandwidths(distances, kernel.neighbors_k) * kernel.bandwidth_scale
    zero_bw = np.flatnonzero(bw <= 0.0)
    if zero_bw.size:
        names = ", ".join(data.tract_ids[i] for i in zero_bw[:5])
        raise ValueError(
            f"adaptive bandwidth is zero for {zero_bw.size} tract(s) ({names}); "
            "duplicate centroids within neighbors_k"
        )

    def one(j: int) -> tuple[LocalFit, float]:
        w = gaussian_weights(distances[j], bw[j])
        local = fit_local(data, w, j)
        fitted_for_aicc = local.fitted
        if aicc_loo and local.ok:
            w_loo = w.copy()
            w_loo[j] = 0.0
            loo = fit_local(data, w_loo, j)
            fitted_for_aicc = (
                float(data.X[j] @ loo.coefficients) if loo.ok else math.nan
            )
        return local, fitted_for_aicc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n)))
    else:
        results = [one(j) for j in range(n)]

    coef = np.vstack([r.coefficients for r, _ in results])
    se_unit = np.vstack([r.se_unit for r, _ in results])
    hat_diag = np.array([r.hat_diag for r, _ in results])
    r2 = np.array([r.local_r2 for r, _ in results])
    r2_raw = np.array([r.local_r2_raw for r, _ in results])
    fitted = np.array([f for _, f in results])
    ok = np.array([r.ok for r, _ in results])
    failed = tuple(tid for tid, good in zip(data.tract_ids, ok) if not good)
    if failed:
        level = logging.WARNING if len(failed) > 0.1 * n else logging.INFO
        log.log(
            level,
            "%d of %d local fits rank-deficient: %s",
            len(failed),
            n,
            ", ".join(failed[:10]) + (", ..." if len(failed) > 10 else ""),
        )

    if failed:
        trace_s = math.nan
        rss = math.nan
        sigma2 = math.nan
        aicc = math.inf
        se = np.full_like(se_unit, np.nan)
    else:
        trace_s = float(hat_diag.sum())
        resid = data.y - fitted
        rss = float(resid @ resid)
        denom = n - trace_s
        sigma2 = rss / denom if denom > 0 else math.nan
        aicc = compute_aicc(rss, n, trace_s)
        se = se_unit * math.sqrt(sigma2) if math.isfinite(sigma2) else np.full_like(
            se_unit, np.nan
        )

    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(se > 0, coef / se, 0.0)
    t = np.where(np.isnan(coef) | np.isnan(se), np.nan, t)

    return GwrFit(
        local_coefficients=coef,
        local_se=se,
        local_t=t,
        local_r2=r2,
        local_r2_raw=r2_raw,
        hat_diag=hat_diag,
        bandwidths=bw,
        trace_S=trace_s,
        rss=rss,
        sigma2=sigma2,
        aicc=aicc,
        neighbors_k=kernel.neighbors_k,
        failed=failed,
        column_names=tuple(data.column_names),
        tract_ids=tuple(data.tract_ids),
    )


def select_bandwidth(
    data: DesignData,
    tracts: TractSet,
    k_min: int,
    k_max: int,
    method: str = "golden",
    workers: int = 1,
    aicc_loo: bool = False,
) -> tuple[int, float]:
    """Pick the neighbor count minimizing AICc over [k_min, k_max].

    Golden-section over integers assuming unimodality, with an exhaustive
    scan whenever the (remaining) range is 25 candidates or fewer; ties
    within 1e-9 go to the larger count. method="exhaustive" forces the full
    scan and is the oracle for the golden path.
    """
    if method not in ("golden", "exhaustive"):
        raise ValueError(f"unknown method {method!r}")
    n, p = data.X.shape
    if not p + 1 <= k_min <= k_max <= n:
        raise ValueError(
            f"need {p + 1} <= k_min <= k_max <= {n}, got [{k_min}, {k_max}]"
        )

    distances = _pairwise_distances(data, tracts)
    cache: dict[int, float] = {}

    def objective(k: int) -> float:
        if k not in cache:
            fit = fit_gwr(
                data,
                tracts,
                KernelSpec(neighbors_k=k),
                workers=workers,
                aicc_loo=aicc_loo,
                distances=distances,
            )
            cache[k] = fit.aicc
        return cache[k]

    lo, hi = k_min, k_max
    if method == "golden":
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        while hi - lo + 1 > EXHAUSTIVE_LIMIT:
            span = hi - lo
            x1 = hi - int(round(span * invphi))
            x2 = lo + int(round(span * invphi))
            if x1 >= x2:
                x1 = max(lo, x2 - 1)
            f1, f2 = objective(x1), objective(x2)
            if f1 < f2 - TIE_TOL:
                hi = x2
            else:
                # Ties move toward larger k, matching the final tie rule.
                lo = x1
    for k in range(lo, hi + 1):
        objective(k)

    finite_min = min(cache.values())
    if math.isinf(finite_min) and finite_min > 0:
        raise SelectionError(
            f"every candidate in [{k_min}, {k_max}] failed (rank-deficient "
            "local fits or invalid AICc)"
        )
    winners = [k for k, v in cache.items() if v <= finite_min + TIE_TOL]
    best = max(winners)
    return best, cache[best]


def summarize_gwr(fit: GwrFit) -> GwrSummary:
    """Per-term mean/min/max and +-1.96 significance shares over clean tracts."""
    ok = ~np.isnan(fit.local_coefficients[:, 0])
    n_used = int(ok.sum())
    n_failed = fit.n - n_used
    if n_used == 0:
        raise SelectionError("no successful local fits to summarize")
    coef = fit.local_coefficients[ok]
    t = fit.local_t[ok]
    return GwrSummary(
        column_names=fit.column_names,
        mean=coef.mean(axis=0),
        min=coef.min(axis=0),
        max=coef.max(axis=0),
        pct_sig_neg=(t < -T_CRIT).mean(axis=0),
        pct_sig_pos=(t > T_CRIT).mean(axis=0),
        mean_local_r2=float(fit.local_r2[ok].mean()),
        min_local_r2=float(fit.local_r2[ok].min()),
        max_local_r2=float(fit.local_r2[ok].max()),
        neighbors_k=fit.neighbors_k,
        aicc=fit.aicc,
        n_used=n_used,
        n_failed=n_failed,
    )
