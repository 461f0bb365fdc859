"""Deviation process ``U_n`` and its supremum ``S_n``.

For a lag vector ``x`` and level ``y`` the deviation process is

    U_n(x, y) = n^{-1/2} sum_t 1{lags_t <= x} [1{X_t <= y} - F(w(lags_t, y))]

where ``F`` is the residual EDF (semiparametric null), a specified
innovation law (parametric innovations) or a fully specified transition
law.  ``U_n`` is piecewise constant in ``x`` and nonincreasing in ``y``
between sample values, so its supremum is attained on a finite grid that
includes left limits ``X_t - 0``.  Left limits are carried as a side tag
rather than as perturbed values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from markovgof import _kernels
from markovgof.estimators import FittedModel
from markovgof.models import (
    Family,
    InnovationDistribution,
    ModelSpec,
    Series,
    link_location_scale,
)

__all__ = [
    "DeviationStat",
    "EvalGrid",
    "Side",
    "TestVariant",
    "VariantKind",
    "build_grid",
    "sup_statistic",
    "u_value",
    "u_values",
]


class Side(IntEnum):
    LEFT = 0
    AT = 1


class VariantKind(str, Enum):
    SEMIPARAMETRIC = "semi"
    PARAMETRIC = "param"
    FULL = "full"


@dataclass(frozen=True, eq=False)
class TestVariant:
    """Which null hypothesis the deviation process targets.

    ``PARAMETRIC`` carries the specified innovation law; ``FULL`` carries the
    fully parametrized transition model.
    """

    __test__ = False

    kind: VariantKind
    innovation: InnovationDistribution | None = None
    transition: ModelSpec | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", VariantKind(self.kind))
        if self.kind is VariantKind.SEMIPARAMETRIC:
            if self.innovation is not None or self.transition is not None:
                raise ValueError("semiparametric variant carries no innovation law")
        elif self.kind is VariantKind.PARAMETRIC:
            if self.innovation is None:
                raise ValueError("parametric-innovations variant needs an innovation law")
        else:
            if self.transition is None or self.transition.theta is None:
                raise ValueError("fully specified variant needs a parametrized transition")
            if not self.transition.family.testable:
                raise ValueError(f"{self.transition.family.value} cannot be a null model")

    @classmethod
    def semiparametric(cls) -> TestVariant:
        return cls(VariantKind.SEMIPARAMETRIC)

    @classmethod
    def parametric(cls, innovation: InnovationDistribution) -> TestVariant:
        return cls(VariantKind.PARAMETRIC, innovation=innovation)

    @classmethod
    def fully_specified(cls, transition: ModelSpec) -> TestVariant:
        return cls(VariantKind.FULL, transition=transition)

    def describe(self) -> str:
        if self.kind is VariantKind.PARAMETRIC:
            return f"param/{self.innovation.label}"
        if self.kind is VariantKind.FULL:
            return f"full/{self.transition.describe()}"
        return "semi"


@dataclass(frozen=True, eq=False)
class EvalGrid:
    """Candidate points on which ``|U_n|`` is maximized.

    ``x_candidates[k]`` holds ``-inf`` followed by the distinct values of
    ``X_{1-k-1}, ..., X_{n-k-1}`` in ascending order.  ``y_values`` and
    ``y_sides`` list ``-inf``, then ``(v, LEFT), (v, AT)`` for every distinct
    ``X_t``, then ``+inf``.
    """

    x_candidates: tuple[np.ndarray, ...]
    y_values: np.ndarray
    y_sides: np.ndarray

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.x_candidates) + (self.y_values.size,)

    def y_point(self, j: int) -> tuple[float, Side]:
        return float(self.y_values[j]), Side(int(self.y_sides[j]))


@dataclass(frozen=True)
class DeviationStat:
    s_n: float
    arg_x: tuple[float, ...]
    arg_y: tuple[float, Side]
    grid_dims: tuple[int, ...]


def build_grid(series: Series) -> EvalGrid:
    lags = series.lags
    xs = tuple(np.concatenate(([-np.inf], np.unique(lags[:, k]))) for k in range(series.p))
    v = np.unique(series.current)
    k = v.size
    y_values = np.empty(2 * k + 2)
    y_sides = np.full(2 * k + 2, Side.AT, dtype=np.int8)
    y_values[0], y_values[-1] = -np.inf, np.inf
    y_values[1:-1:2] = v
    y_values[2:-1:2] = v
    y_sides[1:-1:2] = Side.LEFT
    return EvalGrid(xs, y_values, y_sides)


def _model_term(variant: TestVariant, fitted: FittedModel | None):
    """Return the spec defining the link and the law ``F`` it feeds.

    The law is an :class:`InnovationDistribution`, or ``None`` for the
    residual EDF of ``fitted``.
    """
    if variant.kind is VariantKind.FULL:
        return variant.transition, variant.transition.innovation
    if fitted is None:
        raise ValueError(f"variant {variant.kind.value} needs a fitted model")
    if variant.kind is VariantKind.PARAMETRIC:
        return fitted.spec, variant.innovation
    return fitted.spec, None


def _cdf_for(dist: InnovationDistribution | None, fitted: FittedModel | None):
    if dist is not None:
        return dist.cdf
    edf = fitted.residual_edf

    def cdf(w, left=False):
        side = "left" if left else "right"
        return np.searchsorted(edf, w, side=side) / edf.size

    return cdf


def _prepare(series: Series, variant: TestVariant, fitted: FittedModel | None):
    spec, dist = _model_term(variant, fitted)
    cdf = _cdf_for(dist, fitted)
    if spec.p != series.p:
        raise ValueError(f"series lag order {series.p} differs from model order {spec.p}")
    lags = series.lags
    loc, scale = link_location_scale(spec.family, spec.theta_array, lags)
    return lags, loc, scale, cdf


def u_values(series: Series, variant: TestVariant, fitted: FittedModel | None, x, ys, sides):
    """Vectorized direct evaluation of ``U_n(x, y)`` over many ``y``."""
    lags, loc, scale, cdf = _prepare(series, variant, fitted)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != series.p:
        raise ValueError(f"x has dimension {x.size}, expected {series.p}")
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    sides = np.broadcast_to(np.asarray(sides), ys.shape)
    active = np.all(lags <= x, axis=1)
    xt = series.current[active]
    loc, scale = loc[active], scale[active]
    out = np.zeros(ys.size)
    for j, (y, side) in enumerate(zip(ys, sides)):
        if np.isinf(y):
            # both terms are 0 at -inf and 1 at +inf
            continue
        left = int(side) == Side.LEFT
        ind = (xt < y) if left else (xt <= y)
        w = (y - loc) / scale
        out[j] = np.sum(ind - np.asarray(cdf(w, left=left)))
    return out / math.sqrt(series.n)


def u_value(series: Series, variant: TestVariant, fitted: FittedModel | None, x, y) -> float:
    """Direct O(n) evaluation of ``U_n(x, y)``.

    ``y`` is a float (evaluated at the point) or a ``(value, Side)`` pair.
    """
    if isinstance(y, tuple):
        yv, side = y
    else:
        yv, side = y, Side.AT
    return float(u_values(series, variant, fitted, x, [yv], [side])[0])


def _contributions(series: Series, variant: TestVariant, fitted: FittedModel | None):
    spec, dist = _model_term(variant, fitted)
    if spec.p != series.p:
        raise ValueError(f"series lag order {series.p} differs from model order {spec.p}")
    lags = series.lags
    loc, scale = link_location_scale(spec.family, spec.theta_array, lags)
    xt = series.current
    v = np.unique(xt)
    ranks = np.searchsorted(v, xt).astype(np.int64)
    if dist is not None and dist.kind == "normal":
        f_at = _kernels.normal_cdf_affine(v, loc, scale)
        return lags, ranks, f_at, f_at
    cdf = _cdf_for(dist, fitted)
    w = (v[None, :] - loc[:, None]) / scale[:, None]
    f_at = np.ascontiguousarray(cdf(w), dtype=float)
    if dist is not None and dist.continuous:
        return lags, ranks, f_at, f_at
    f_left = np.ascontiguousarray(cdf(w, left=True), dtype=float)
    return lags, ranks, f_at, f_left


def _groups(lag_col: np.ndarray, rows: np.ndarray, candidates: np.ndarray):
    order = rows[np.argsort(lag_col[rows], kind="stable")]
    vals = lag_col[order]
    group_end = np.empty(order.size, dtype=np.bool_)
    group_end[:-1] = vals[1:] != vals[:-1]
    group_end[-1] = True
    xidx = np.searchsorted(candidates, vals).astype(np.int64)
    return order.astype(np.int64), group_end, xidx


def sup_statistic(series: Series, variant: TestVariant, fitted: FittedModel | None) -> DeviationStat:
    """Exact ``S_n = max |U_n|`` over the evaluation grid.

    For ``p = 1`` rows are admitted in increasing order of ``X_{t-1}`` and a
    running accumulator over the y-grid is maximized after every distinct
    lag value (O(n^2)).  For ``p >= 2`` the leading coordinates are
    enumerated cell by cell and the same sweep runs along the last one.
    """
    grid = build_grid(series)
    lags, ranks, f_at, f_left = _contributions(series, variant, fitted)
    p = series.p
    n = series.n
    all_rows = np.arange(n)
    best, best_x, best_y = 0.0, (0,) * p, 0

    if p == 0:
        raise ValueError("the deviation process needs p >= 1")
    last = p - 1
    lead_ranges = [range(1, grid.x_candidates[k].size) for k in range(last)]
    for lead in itertools.product(*lead_ranges):
        rows = all_rows
        for k, idx in enumerate(lead):
            rows = rows[lags[rows, k] <= grid.x_candidates[k][idx]]
        if rows.size == 0:
            continue
        order, group_end, xidx = _groups(lags[:, last], rows, grid.x_candidates[last])
        val, bx, by = _kernels.sweep_max(order, group_end, xidx, ranks, f_at, f_left)
        if val > best:
            best, best_x, best_y = val, lead + (int(bx),), int(by)
    s_n = best / math.sqrt(n)
    arg_x = tuple(float(grid.x_candidates[k][i]) for k, i in enumerate(best_x))
    return DeviationStat(s_n, arg_x, grid.y_point(best_y), grid.dims)
