"""Ordinary least squares with fit statistics and school-clustered inference.

Estimation is QR-based. Exact-collinear columns (including all-zero columns
from empty category levels) are pruned deterministically left to right by a
Gram-matrix rank guard before the solve, and reported, so coefficient tables
stay reproducible rather than depending on a pseudo-inverse.

The clustered covariance is the CR1 sandwich,

    V = c * (X'X)^-1 [ sum_g X_g' e_g e_g' X_g ] (X'X)^-1,
    c = G/(G-1) * (N-1)/(N-k),

summing over clusters g. With every observation its own cluster this reduces
to the familiar heteroskedasticity-robust form with the same correction.

Significance stars use the normal critical value 1.959964; at national
sample sizes the difference from a t distribution is negligible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .design import DesignMatrix
from .errors import FitError

Z95 = 1.959964

# Relative Schur-complement threshold below which a column counts as exactly
# collinear with the columns retained before it.
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit: coefficients over retained columns, diagnostics.

    ``design_labels`` is the full label order of the design; ``labels`` the
    retained subset (same order) that ``coefficients`` and ``xtx_inverse``
    refer to. Coefficients and residuals are on the outcome (points) scale.
    """

    design_labels: tuple[str, ...]
    labels: tuple[str, ...]
    dropped_columns: tuple[str, ...]
    coefficients: np.ndarray
    residuals: np.ndarray
    rss: float
    tss: float
    r_squared: float
    adjusted_r_squared: float
    n: int
    k_effective: int
    xtx_inverse: np.ndarray

    def coefficient(self, label: str) -> float:
        return float(self.coefficients[self.labels.index(label)])


@dataclass(frozen=True)
class ClusterCovariance:
    """CR1 sandwich covariance for a fit; aligned with the retained labels."""

    covariance: np.ndarray
    standard_errors: np.ndarray
    n_clusters: int
    correction: float


@dataclass(frozen=True)
class CoefficientRow:
    """One row of a coefficient table; estimate/se are None for dropped columns."""

    label: str
    estimate: float | None
    se: float | None
    significant: bool


def _prune_collinear(gram: np.ndarray) -> tuple[list[int], list[int]]:
    """Left-to-right exact-collinearity scan on the Gram matrix.

    Walks columns in order, keeping a Cholesky factor of the retained block;
    a column whose conditional variance falls below _RANK_TOL of its own
    norm is dropped. Deterministic: earlier columns always win.
    """
    k = gram.shape[0]
    kept: list[int] = []
    dropped: list[int] = []
    chol = np.zeros((k, k))
    for j in range(k):
        gjj = gram[j, j]
        if gjj <= 0.0:
            dropped.append(j)
            continue
        m = len(kept)
        if m:
            w = solve_triangular(chol[:m, :m], gram[kept, j], lower=True)
            d = gjj - float(w @ w)
        else:
            w = np.empty(0)
            d = gjj
        if d <= _RANK_TOL * gjj:
            dropped.append(j)
            continue
        chol[m, :m] = w
        chol[m, m] = np.sqrt(d)
        kept.append(j)
    return kept, dropped


def _qr_residualise(
    x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Solve min ||y - x b|| by reduced QR; return (b, residuals, rss, R)."""
    q, r = np.linalg.qr(x)
    beta = solve_triangular(r, q.T @ y, lower=False)
    resid = y - x @ beta
    return beta, resid, float(resid @ resid), r


def fit_ols(design: DesignMatrix, outcome) -> FitResult:
    """Fit outcome on the design by least squares.

    Collinear columns are pruned (see module docstring) and listed in
    ``dropped_columns``. Fatal if the outcome is non-finite or there are no
    more observations than retained parameters.
    """
    x = design.values
    y = np.asarray(outcome, dtype=float)
    n = x.shape[0]
    if y.shape != (n,):
        raise FitError(f"outcome length {y.shape} does not match design rows {n}")
    bad = np.flatnonzero(~np.isfinite(y))
    if bad.size:
        raise FitError(f"outcome is non-finite at row {int(bad[0]) + 1}")

    gram = x.T @ x
    kept, dropped = _prune_collinear(gram)
    if n <= len(kept):
        raise FitError(
            f"cannot fit: {n} observations for {len(kept)} retained parameters"
        )

    xs = x[:, kept]
    beta, resid, rss, r_factor = _qr_residualise(xs, y)

    # Total sum of squares through the same solver on the constant column
    # alone; for an intercept-only design this makes rss and tss bitwise
    # equal, so r_squared is exactly 0.
    if len(kept) == 1 and kept[0] == 0:
        tss = rss
    elif kept and kept[0] == 0:
        tss = _qr_residualise(x[:, :1], y)[2]
    else:  # degenerate design without a usable leading constant
        centred = y - y.mean()
        tss = float(centred @ centred)

    if tss > 0.0:
        r2 = min(1.0, max(0.0, 1.0 - rss / tss))
    else:
        r2 = 0.0
    k_eff = len(kept)
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - k_eff)

    r_inv = solve_triangular(r_factor, np.eye(k_eff), lower=False)
    xtx_inv = r_inv @ r_inv.T

    labels = design.column_labels
    return FitResult(
        design_labels=labels,
        labels=tuple(labels[j] for j in kept),
        dropped_columns=tuple(labels[j] for j in dropped),
        coefficients=beta,
        residuals=resid,
        rss=rss,
        tss=tss,
        r_squared=r2,
        adjusted_r_squared=adj_r2,
        n=n,
        k_effective=k_eff,
        xtx_inverse=xtx_inv,
    )


def cluster_robust_cov(fit: FitResult, design: DesignMatrix, cluster_ids) -> ClusterCovariance:
    """CR1 sandwich covariance of the fit, clustering on ``cluster_ids``.

    Requires the same design the fit was produced from (labels are checked)
    and at least two clusters.
    """
    if fit.design_labels != design.column_labels or design.n != fit.n:
        raise FitError("fit was not produced from this design")
    ids = list(cluster_ids)
    if len(ids) != fit.n:
        raise FitError(f"expected {fit.n} cluster ids, got {len(ids)}")
    codes, idx = np.unique(np.asarray(ids, dtype=object), return_inverse=True)
    n_clusters = codes.size
    if n_clusters < 2:
        raise FitError("clustered inference undefined: fewer than 2 clusters")

    kept = [design.column_labels.index(lab) for lab in fit.labels]
    xs = design.values[:, kept]
    xe = xs * fit.residuals[:, None]
    k_eff = fit.k_effective
    sums = np.empty((n_clusters, k_eff))
    for j in range(k_eff):
        sums[:, j] = np.bincount(idx, weights=xe[:, j], minlength=n_clusters)
    meat = sums.T @ sums

    n = fit.n
    correction = (n_clusters / (n_clusters - 1)) * ((n - 1) / (n - k_eff))
    cov = correction * (fit.xtx_inverse @ meat @ fit.xtx_inverse)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return ClusterCovariance(
        covariance=cov, standard_errors=se, n_clusters=n_clusters, correction=correction
    )


def coefficient_table(fit: FitResult, cov: ClusterCovariance) -> list[CoefficientRow]:
    """Rows (label, estimate, SE, significant at 5%) in design-column order.

    Dropped columns appear with blank estimates. Significance is
    |estimate| / SE > 1.959964.
    """
    if cov.standard_errors.shape != (fit.k_effective,):
        raise FitError("covariance does not match fit dimensions")
    by_label = {
        lab: (float(fit.coefficients[i]), float(cov.standard_errors[i]))
        for i, lab in enumerate(fit.labels)
    }
    rows = []
    for lab in fit.design_labels:
        if lab in by_label:
            est, se = by_label[lab]
            significant = se > 0.0 and abs(est) / se > Z95
            rows.append(CoefficientRow(lab, est, se, significant))
        else:
            rows.append(CoefficientRow(lab, None, None, False))
    return rows
