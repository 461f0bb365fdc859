"""Model-based bootstrap for the supremum statistic.

Pseudo-series are generated from the fitted null with innovations drawn
from the centered (ARCH: standardized) residual pool; on every pseudo-series
the parameter is re-estimated and the statistic recomputed from the raw,
uncentered bootstrap residuals.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from markovgof.errors import BootstrapAbort, DegeneratePoolError, EstimationError
from markovgof.estimators import FittedModel, fit_model
from markovgof.gof import DeviationStat, Side, TestVariant, VariantKind, sup_statistic
from markovgof.models import (
    DEFAULT_BURN_IN,
    InnovationDistribution,
    ModelSpec,
    Series,
    simulate,
)

__all__ = [
    "BootstrapConfig",
    "BootstrapOutcome",
    "TestReport",
    "bootstrap_statistics",
    "critical_value",
    "generate_pseudo_series",
    "p_value",
    "quantile_index",
    "resample_seed",
    "run_bootstrap",
    "run_test",
]

MAX_ATTEMPTS = 10


def quantile_index(alpha: float, b: int) -> int:
    """1-based order statistic ``ceil((1 - alpha)(B + 1))`` before clipping."""
    # guard against (1 - alpha)(B + 1) landing a hair above an integer
    return math.ceil((1.0 - alpha) * (b + 1) - 1e-9)


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 500
    alpha: float = 0.05
    burn_in: int = DEFAULT_BURN_IN
    master_seed: int = 0
    resample_residuals: bool = False

    def __post_init__(self) -> None:
        errors = self.validate()
        if errors:
            raise ValueError("; ".join(errors))

    def validate(self, alphas=None) -> list[str]:
        errors = []
        if int(self.B) != self.B or self.B < 1:
            errors.append("B must be a positive integer")
        if self.burn_in < 0:
            errors.append("burn_in must be nonnegative")
        if self.master_seed < 0:
            errors.append("master_seed must be nonnegative")
        for alpha in alphas or (self.alpha,):
            if not 0 < alpha < 1:
                errors.append(f"alpha={alpha} must lie in (0, 1)")
            elif self.B >= 1 and quantile_index(alpha, self.B) > self.B:
                errors.append(f"alpha={alpha} is too small for B={self.B}")
        return errors


@dataclass(frozen=True, eq=False)
class BootstrapOutcome:
    stats: np.ndarray = field(repr=False)
    critical_value: float
    p_value: float
    reject: bool
    degenerate_count: int = 0


def critical_value(stats, alpha: float) -> float:
    """The ``ceil((1-alpha)(B+1))``-th smallest bootstrap statistic."""
    stats = np.sort(np.asarray(stats, dtype=float))
    if stats.size == 0:
        raise ValueError("no bootstrap statistics")
    k = min(max(quantile_index(alpha, stats.size), 1), stats.size)
    return float(stats[k - 1])


def p_value(stats, s_n: float) -> float:
    """``(1 + #{S*_b >= S_n}) / (B + 1)``."""
    stats = np.asarray(stats, dtype=float)
    if stats.size == 0:
        raise ValueError("no bootstrap statistics")
    return (1 + int(np.count_nonzero(stats >= s_n))) / (stats.size + 1)


def resample_seed(master_seed: int, b: int, attempt: int = 0) -> np.random.SeedSequence:
    """Stream for resample ``b``; retries get their own streams."""
    key = [master_seed, b] if attempt == 0 else [master_seed, b, attempt]
    return np.random.SeedSequence(key)


def _generating_spec(
    fitted: FittedModel | None, variant: TestVariant, resample_residuals: bool = False
) -> ModelSpec:
    if variant.kind is VariantKind.FULL:
        return variant.transition
    if fitted is None:
        raise ValueError("a fitted model is required for this variant")
    if fitted.pool.size == 0:
        raise ValueError("empty innovation pool")
    if variant.kind is VariantKind.PARAMETRIC and not resample_residuals:
        return fitted.spec.with_innovation(variant.innovation)
    return fitted.spec.with_innovation(InnovationDistribution.empirical(fitted.pool))


def generate_pseudo_series(
    fitted: FittedModel | None,
    variant: TestVariant,
    n: int,
    seed,
    burn_in: int = DEFAULT_BURN_IN,
    resample_residuals: bool = False,
) -> Series:
    """Simulate ``X*_t = G(lags*_t, theta_hat, eps*_t)`` from the null."""
    spec = _generating_spec(fitted, variant, resample_residuals)
    return simulate(spec, n, seed, burn_in)


def _resample_stat(
    b: int,
    n: int,
    variant: TestVariant,
    fitted: FittedModel | None,
    template: ModelSpec | None,
    config: BootstrapConfig,
) -> tuple[float, int]:
    spec = _generating_spec(fitted, variant, config.resample_residuals)
    for attempt in range(MAX_ATTEMPTS + 1):
        star = simulate(spec, n, resample_seed(config.master_seed, b, attempt), config.burn_in)
        if variant.kind is VariantKind.FULL:
            return sup_statistic(star, variant, None).s_n, attempt
        try:
            refit = fit_model(star, template, fitted.method)
        except (EstimationError, DegeneratePoolError):
            continue
        return sup_statistic(star, variant, refit).s_n, attempt
    raise BootstrapAbort(
        f"resample {b}: refitting failed on {MAX_ATTEMPTS + 1} consecutive pseudo-series "
        f"(null {spec.describe()}, n={n}, master_seed={config.master_seed})"
    )


def _resample_chunk(args) -> list[tuple[float, int]]:
    indices, n, variant, fitted, template, config = args
    return [_resample_stat(b, n, variant, fitted, template, config) for b in indices]


def run_bootstrap(
    series: Series,
    variant: TestVariant,
    fitted: FittedModel | None,
    config: BootstrapConfig,
    workers: int = 1,
) -> tuple[np.ndarray, int]:
    """Bootstrap statistics and the number of retried resamples."""
    template = None
    if fitted is not None:
        template = ModelSpec.template(fitted.spec.family, fitted.spec.p, fitted.spec.innovation)
    n = series.n
    indices = list(range(1, config.B + 1))
    if workers <= 1:
        results = _resample_chunk((indices, n, variant, fitted, template, config))
    else:
        chunks = [indices[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(
                _resample_chunk,
                [(c, n, variant, fitted, template, config) for c in chunks],
            ))
        results = [None] * config.B
        for chunk, part in zip(chunks, parts):
            for b, res in zip(chunk, part):
                results[b - 1] = res
    stats = np.array([r[0] for r in results])
    degenerate = sum(1 for r in results if r[1] > 0)
    return stats, degenerate


def bootstrap_statistics(
    series: Series,
    variant: TestVariant,
    fitted: FittedModel | None,
    config: BootstrapConfig,
    workers: int = 1,
) -> np.ndarray:
    """The ``B`` bootstrap replicates ``S*_1, ..., S*_B`` in resample order."""
    return run_bootstrap(series, variant, fitted, config, workers)[0]


@dataclass(frozen=True, eq=False)
class TestReport:
    """Outcome of one goodness-of-fit test."""

    __test__ = False

    null: ModelSpec
    variant: TestVariant
    fitted: FittedModel | None
    statistic: DeviationStat
    outcome: BootstrapOutcome
    config: BootstrapConfig
    n: int

    @property
    def s_n(self) -> float:
        return self.statistic.s_n

    @property
    def reject(self) -> bool:
        return self.outcome.reject

    @property
    def p_value(self) -> float:
        return self.outcome.p_value

    @property
    def critical_value(self) -> float:
        return self.outcome.critical_value

    @property
    def tie(self) -> bool:
        return self.s_n == self.outcome.critical_value

    def to_dict(self) -> dict:
        stats = self.outcome.stats
        theta = [] if self.fitted is None else list(self.fitted.theta)
        arg_y, side = self.statistic.arg_y
        return {
            "null": self.null.describe(),
            "family": self.null.family.value,
            "order": self.null.p,
            "variant": self.variant.describe(),
            "n": self.n,
            "theta_hat": theta,
            "estimator": None if self.fitted is None else self.fitted.method,
            "projection_applied": False if self.fitted is None else self.fitted.projection_applied,
            "S_n": self.s_n,
            "arg_x": list(self.statistic.arg_x),
            "arg_y": {"value": arg_y, "side": "left" if side is Side.LEFT else "at"},
            "grid_dims": list(self.statistic.grid_dims),
            "B": self.config.B,
            "alpha": self.config.alpha,
            "burn_in": self.config.burn_in,
            "master_seed": self.config.master_seed,
            "resample_residuals": self.config.resample_residuals,
            "critical_value": self.outcome.critical_value,
            "p_value": self.outcome.p_value,
            "reject": self.outcome.reject,
            "tie": self.tie,
            "degenerate_count": self.outcome.degenerate_count,
            "bootstrap_summary": {
                "min": float(stats.min()),
                "mean": float(stats.mean()),
                "max": float(stats.max()),
            },
            "bootstrap_stats": [float(s) for s in stats],
        }


def run_test(
    series: Series,
    variant: TestVariant,
    null: ModelSpec,
    config: BootstrapConfig,
    method: str = "ls",
    workers: int = 1,
) -> TestReport:
    """Fit the null, compute ``S_n`` and calibrate it by the bootstrap.

    ``null`` is a template (family, order, innovation) for the semiparametric
    and parametric variants and is ignored in favour of
    ``variant.transition`` for the fully specified one.
    """
    if variant.kind is VariantKind.FULL:
        null = variant.transition
        fitted = None
    else:
        if not null.family.testable:
            raise ValueError(f"{null.family.value} is simulation-only and cannot be a null model")
        fitted = fit_model(series.with_order(null.p), null, method)
    if series.p != null.p:
        series = series.with_order(null.p)
    stat = sup_statistic(series, variant, fitted)
    stats, degenerate = run_bootstrap(series, variant, fitted, config, workers)
    cv = critical_value(stats, config.alpha)
    outcome = BootstrapOutcome(
        stats=stats,
        critical_value=cv,
        p_value=p_value(stats, stat.s_n),
        reject=stat.s_n > cv,
        degenerate_count=degenerate,
    )
    return TestReport(null, variant, fitted, stat, outcome, config, series.n)
