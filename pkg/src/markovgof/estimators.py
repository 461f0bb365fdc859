"""Parameter estimation, residuals and residual distribution functions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_toeplitz

from markovgof.errors import (
    DegeneratePoolError,
    EstimationError,
    NearUnitRootWarning,
    UnsupportedFamilyError,
)
from markovgof.models import Family, ModelSpec, Series, ar_roots, link_location_scale

__all__ = [
    "FittedModel",
    "build_innovation_pool",
    "compute_residuals",
    "edf_eval",
    "fit_ar_ls",
    "fit_arch_ls",
    "fit_model",
    "project_arch",
]

COND_LIMIT = 1e12
ROOT_MARGIN = 1e-6
SHRINK_FACTOR = 0.99
MAX_SHRINK = 200
ARCH_SLOPE_CAP = 1.0 - 1e-3
ARCH_INTERCEPT_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class FittedModel:
    """A null model fitted to a series.

    Attributes
    ----------
    spec : ModelSpec
        Family with the estimated parameter vector.
    raw_residuals : ndarray
        Residuals ``w(lags_t, X_t, theta_hat)`` in time order.
    residual_edf : ndarray
        Sorted copy of ``raw_residuals``; support of the residual EDF.
    pool : ndarray
        Sorted centered (and, for ARCH, standardized) residuals used to draw
        bootstrap innovations.
    projection_applied : bool
        The raw estimate was moved back into the parameter space.
    method : str
        Estimator used (``"ls"`` or ``"yw"``).
    """

    spec: ModelSpec
    raw_residuals: np.ndarray = field(repr=False)
    residual_edf: np.ndarray = field(repr=False)
    pool: np.ndarray = field(repr=False)
    projection_applied: bool = False
    method: str = "ls"

    @property
    def theta(self) -> np.ndarray:
        return self.spec.theta_array

    @property
    def n(self) -> int:
        return self.raw_residuals.size


def _lstsq_checked(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    if design.shape[0] < design.shape[1]:
        raise EstimationError("fewer observations than parameters")
    q, r = np.linalg.qr(design)
    sv = np.linalg.svd(r, compute_uv=False)
    if sv[-1] == 0 or not np.isfinite(sv).all() or sv[0] / sv[-1] > COND_LIMIT:
        raise EstimationError(
            "singular or ill-conditioned regression "
            f"(condition estimate {sv[0] / sv[-1] if sv[-1] else np.inf:.3g})"
        )
    if design.shape[1] == 1:
        # closed form; exact when the target is an exact multiple of the regressor
        col = design[:, 0]
        return np.array([(col @ target) / (col @ col)])
    return np.linalg.solve(r, q.T @ target)


def _shrink_to_stationary(theta: np.ndarray) -> tuple[np.ndarray, bool]:
    shrunk = False
    for _ in range(MAX_SHRINK + 1):
        roots = ar_roots(theta)
        if roots.size == 0 or np.min(np.abs(roots)) > 1.0 + ROOT_MARGIN:
            return theta, shrunk
        theta = theta * SHRINK_FACTOR
        shrunk = True
    raise EstimationError("could not shrink AR estimate into the stationary region")


def _fit_ar(series: Series, p: int, method: str) -> tuple[np.ndarray, bool]:
    if series.p != p:
        series = series.with_order(p)
    x = series.current
    if series.n <= p:
        raise EstimationError(f"need n > p for AR({p}), got n = {series.n}")
    if method == "ls":
        theta = _lstsq_checked(series.lags, x)
    elif method == "yw":
        values = series.values
        m = values.size
        acov = np.array([values[: m - h] @ values[h:] for h in range(p + 1)]) / m
        if not acov[0] > 0:
            raise EstimationError("zero sample variance; Yule-Walker undefined")
        try:
            theta = solve_toeplitz(acov[:p], acov[1:])
        except np.linalg.LinAlgError as exc:
            raise EstimationError(f"singular Yule-Walker system: {exc}") from None
    else:
        raise ValueError(f"unknown AR estimator {method!r}")
    return _shrink_to_stationary(np.asarray(theta, dtype=float))


def fit_ar_ls(series: Series, p: int, method: str = "ls") -> np.ndarray:
    """Estimate AR(p) coefficients without intercept.

    ``method`` is ``"ls"`` (least squares on ``X_t = theta' lags + e``) or
    ``"yw"`` (Yule-Walker).  If the estimate is not strictly stationary it
    is shrunk and a :class:`NearUnitRootWarning` is issued.
    """
    theta, shrunk = _fit_ar(series, p, method)
    if shrunk:
        warnings.warn("AR estimate shrunk into the stationary region", NearUnitRootWarning,
                      stacklevel=2)
    return theta


def project_arch(theta) -> tuple[np.ndarray, bool]:
    """Move an ARCH estimate into the admissible parameter space."""
    theta = np.array(theta, dtype=float)
    orig = theta.copy()
    slopes = np.maximum(theta[1:], 0.0)
    total = slopes.sum()
    if total > ARCH_SLOPE_CAP:
        # a sum exactly at the cap is a fixed point, which keeps projection idempotent
        factor = ARCH_SLOPE_CAP / total
        slopes = slopes * factor
        while slopes.sum() > ARCH_SLOPE_CAP:
            factor = np.nextafter(factor, 0.0)
            slopes = np.maximum(theta[1:], 0.0) * factor
    theta[1:] = slopes
    theta[0] = max(theta[0], ARCH_INTERCEPT_FLOOR)
    return theta, not np.array_equal(theta, orig)


def _fit_arch(series: Series, p: int) -> tuple[np.ndarray, bool]:
    if series.p != p:
        series = series.with_order(p)
    if series.n < p + 1:
        raise EstimationError(f"need n >= p + 1 for ARCH({p}), got n = {series.n}")
    lags = series.lags
    design = np.column_stack((np.ones(series.n), lags * lags))
    x = series.current
    return project_arch(_lstsq_checked(design, x * x))


def fit_arch_ls(series: Series, p: int) -> np.ndarray:
    """Least-squares ARCH(p) estimate, projected onto the parameter space."""
    return _fit_arch(series, p)[0]


def compute_residuals(series: Series, spec: ModelSpec) -> np.ndarray:
    """Residuals ``w(lags_t, X_t, theta)`` for ``t = 1..n``."""
    if not spec.family.testable:
        raise UnsupportedFamilyError(f"{spec.family.value} has no residual link")
    if series.p != spec.p:
        series = series.with_order(spec.p)
    loc, scale = link_location_scale(spec.family, spec.theta_array, series.lags)
    return (series.current - loc) / scale


def build_innovation_pool(raw_residuals, family) -> np.ndarray:
    """Centered (ARCH: centered and standardized) residuals, sorted."""
    resid = np.asarray(raw_residuals, dtype=float)
    if resid.size == 0:
        raise ValueError("empty residual array")
    pool = resid - resid.mean()
    if Family(family) is Family.ARCH:
        ms = np.mean(pool * pool)
        if not ms > 0:
            raise DegeneratePoolError("residuals have zero variance; cannot standardize")
        pool = pool / np.sqrt(ms)
    return np.sort(pool)


def edf_eval(sorted_pool, w):
    """Empirical distribution function ``#{pool <= w} / n``."""
    pool = np.asarray(sorted_pool)
    if pool.size == 0:
        raise ValueError("empty pool")
    out = np.searchsorted(pool, w, side="right") / pool.size
    return out if np.ndim(out) else float(out)


def fit_model(series: Series, template: ModelSpec, method: str = "ls") -> FittedModel:
    """Estimate the null model and build its residual distributions."""
    family = template.family
    p = template.p
    if series.p != p:
        series = series.with_order(p)
    projected = False
    if family is Family.AR:
        theta, projected = _fit_ar(series, p, method)
    elif family is Family.ARCH:
        theta, projected = _fit_arch(series, p)
        method = "ls"
    elif family is Family.IID:
        theta = np.empty(0)
    else:
        raise UnsupportedFamilyError(f"{family.value} cannot be used as a null model")
    spec = template.with_theta(theta)
    resid = compute_residuals(series, spec)
    resid.flags.writeable = False
    edf = np.sort(resid)
    edf.flags.writeable = False
    pool = build_innovation_pool(resid, family)
    pool.flags.writeable = False
    return FittedModel(spec, resid, edf, pool, projected, method)
