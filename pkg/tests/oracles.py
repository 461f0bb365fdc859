"""Independent reference computations used as test oracles.

Nothing here goes through the sweep in ``markovgof.gof``: the deviation
process is evaluated from its definition at every grid point, with the
residual link written out per family and distribution functions taken
from ``scipy.stats`` or explicit counting.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import special, stats

from markovgof.gof import VariantKind


def lag_matrix(values: np.ndarray, p: int) -> np.ndarray:
    n = values.size - p
    return np.column_stack([values[p - k:p - k + n] for k in range(1, p + 1)])


def residual_link(family: str, theta, lags: np.ndarray, y: np.ndarray) -> np.ndarray:
    """w(lags_t, y_j) as an (n, m) matrix."""
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float)[None, :]
    if family == "ar":
        return y - (lags @ theta)[:, None]
    if family == "arch":
        vol = np.sqrt(theta[0] + (lags**2) @ theta[1:])
        return y / vol[:, None]
    if family == "iid":
        return np.broadcast_to(y, (lags.shape[0], y.shape[1])).copy()
    raise ValueError(family)


def law_cdf(dist, w: np.ndarray, left: bool) -> np.ndarray:
    if dist.kind == "normal":
        return special.ndtr(w)
    if dist.kind == "t":
        scale = math.sqrt((dist.df - 2) / dist.df)
        return special.stdtr(dist.df, w / scale)
    if dist.kind == "uniform":
        return stats.uniform.cdf(w, loc=-math.sqrt(3), scale=2 * math.sqrt(3))
    return counting_edf(dist.pool, w, left)


def counting_edf(sample: np.ndarray, w: np.ndarray, left: bool = False) -> np.ndarray:
    sample = np.sort(np.asarray(sample))
    return np.searchsorted(sample, w, side="left" if left else "right") / sample.size


def contribution_matrix(series, variant, fitted, ys, sides):
    """c_t(y_j) = 1{X_t <= y_j} - F(w(lags_t, y_j)) (left limits for side 0)."""
    values = np.asarray(series.values)
    p = series.p
    lags = lag_matrix(values, p)
    xt = values[p:]
    if variant.kind is VariantKind.FULL:
        spec, dist = variant.transition, variant.transition.innovation
    else:
        spec = fitted.spec
        dist = variant.innovation if variant.kind is VariantKind.PARAMETRIC else None
    ys = np.asarray(ys, dtype=float)
    sides = np.asarray(sides)
    finite = np.isfinite(ys)
    out = np.zeros((xt.size, ys.size))
    yf = ys[finite]
    w = residual_link(spec.family.value, spec.theta, lags, yf)
    left = sides[finite] == 0
    ind = np.where(left[None, :], xt[:, None] < yf[None, :], xt[:, None] <= yf[None, :])
    if dist is None:
        model = np.empty_like(w)
        for side in (True, False):
            cols = left == side
            if cols.any():
                model[:, cols] = counting_edf(fitted.raw_residuals, w[:, cols], side)
    else:
        # continuous laws have no atoms, so both sides agree
        model = law_cdf(dist, w, False)
    out[:, finite] = ind - model
    return out


def x_grid(series) -> list[np.ndarray]:
    lags = lag_matrix(np.asarray(series.values), series.p)
    return [np.concatenate(([-np.inf], np.unique(lags[:, k]))) for k in range(series.p)]


def y_grid(series):
    v = np.unique(np.asarray(series.values)[series.p:])
    ys = [-np.inf]
    sides = [1]
    for value in v:
        ys += [value, value]
        sides += [0, 1]
    ys.append(np.inf)
    sides.append(1)
    return np.array(ys), np.array(sides)


def u_surface(series, variant, fitted, ys, sides):
    """|x-grid| x |ys| array of U_n, x-grid flattened lexicographically."""
    lags = lag_matrix(np.asarray(series.values), series.p)
    contrib = contribution_matrix(series, variant, fitted, ys, sides)
    rows = []
    points = list(itertools.product(*x_grid(series)))
    for x in points:
        active = np.all(lags <= np.asarray(x), axis=1)
        rows.append(contrib[active].sum(axis=0))
    return points, np.array(rows) / math.sqrt(series.n)


def brute_force_sup(series, variant, fitted):
    """(S_n, x, (y, side)) by exhaustive evaluation over the grid."""
    ys, sides = y_grid(series)
    points, surface = u_surface(series, variant, fitted, ys, sides)
    flat = np.abs(surface)
    i, j = np.unravel_index(np.argmax(flat), flat.shape)
    return float(flat[i, j]), points[i], (float(ys[j]), int(sides[j]))


def dense_mesh(series, factor: int = 200) -> np.ndarray:
    """Real y values ~``factor`` times denser than the grid, at-point side."""
    v = np.unique(np.asarray(series.values)[series.p:])
    span = max(v[-1] - v[0], 1.0)
    knots = np.concatenate(([v[0] - span], v, [v[-1] + span]))
    per_gap = max(2, (factor * (2 * v.size + 2)) // (knots.size - 1))
    pieces = [np.linspace(a, b, per_gap + 2)[1:-1] for a, b in zip(knots[:-1], knots[1:])]
    return np.concatenate(pieces)


def dense_sup(series, variant, fitted, factor: int = 200) -> float:
    ys = dense_mesh(series, factor)
    sides = np.ones(ys.size, dtype=int)
    if series.p != 1:
        _, surface = u_surface(series, variant, fitted, ys, sides)
        return float(np.abs(surface).max())
    # p = 1: prefix sums over rows sorted by lag give every x at once
    lag = lag_matrix(np.asarray(series.values), 1)[:, 0]
    order = np.argsort(lag, kind="stable")
    contrib = contribution_matrix(series, variant, fitted, ys, sides)[order]
    prefix = np.cumsum(contrib, axis=0)
    counts = np.searchsorted(lag[order], x_grid(series)[0], side="right")
    rows = prefix[counts[counts > 0] - 1]
    return float(np.abs(rows).max(initial=0.0)) / math.sqrt(series.n)


def random_instance(rng: np.random.Generator, family: str, kind: str, n: int, p: int = 1,
                    ties: bool = False):
    """Random (series, variant, fitted) triple for oracle comparisons."""
    from markovgof.estimators import fit_model
    from markovgof.gof import TestVariant
    from markovgof.models import InnovationDistribution, ModelSpec, simulate

    laws = [InnovationDistribution.normal(), InnovationDistribution.student_t(5.0),
            InnovationDistribution.uniform()]
    law = laws[rng.integers(len(laws))]
    if family == "ar":
        theta = rng.uniform(-0.7, 0.7, p) / p
        truth = ModelSpec.ar(theta, law)
    elif family == "arch":
        slopes = rng.uniform(0.0, 0.8, p) / p
        truth = ModelSpec.arch(np.concatenate(([rng.uniform(0.05, 1.0)], slopes)), law)
    else:
        truth = ModelSpec.iid(law, p)
    seed = int(rng.integers(2**31))
    series = simulate(truth, n, seed, burn_in=50)
    if ties:
        series = type(series)(np.round(series.values, 1), series.p)
    if kind == "full":
        return series, TestVariant.fully_specified(truth), None
    fitted = fit_model(series, ModelSpec.template(family, p))
    if kind == "param":
        return series, TestVariant.parametric(law), fitted
    return series, TestVariant.semiparametric(), fitted
