"""Compiled inner loops: model recursions and the grid sweep."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def ar_recursion(theta, eps):
    p = theta.shape[0]
    total = eps.shape[0]
    x = np.zeros(total)
    for i in range(total):
        acc = eps[i]
        for k in range(1, p + 1):
            if i - k >= 0:
                acc += theta[k - 1] * x[i - k]
        x[i] = acc
    return x


@njit(cache=True, nogil=True)
def arch_recursion(theta, eps, sigma2_start):
    # pre-sample lags are zero; the first variance is the stationary one
    p = theta.shape[0] - 1
    total = eps.shape[0]
    x = np.zeros(total)
    for i in range(total):
        if i == 0:
            s2 = sigma2_start
        else:
            s2 = theta[0]
            for k in range(1, p + 1):
                if i - k >= 0:
                    s2 += theta[k] * x[i - k] * x[i - k]
        x[i] = np.sqrt(s2) * eps[i]
    return x


@njit(cache=True, nogil=True)
def garch11_recursion(omega, alpha, beta, eps, sigma2_start):
    total = eps.shape[0]
    x = np.zeros(total)
    s2 = sigma2_start
    prev_x = 0.0
    for i in range(total):
        if i > 0:
            s2 = omega + alpha * prev_x * prev_x + beta * s2
        x[i] = np.sqrt(s2) * eps[i]
        prev_x = x[i]
    return x


@njit(cache=True, nogil=True)
def sv_recursion(intercept, phi, vol_of_vol, eps, omega, h_start):
    total = eps.shape[0]
    x = np.zeros(total)
    h = h_start
    for i in range(total):
        h = intercept + phi * h + vol_of_vol * omega[i]
        x[i] = np.exp(0.5 * h) * eps[i]
    return x


@njit(cache=True, nogil=True)
def sweep_max(order, group_end, group_xidx, ranks, f_at, f_left):
    """Running maximum of |sum of contributions| while rows are admitted.

    Rows are admitted in ``order``; after the last row of each group the
    accumulators over the y-grid are scanned.  Returns the unscaled maximum
    and its (x index, y index), ties resolved towards the smallest indices.
    """
    n_k = f_at.shape[1]
    a_at = np.zeros(n_k)
    a_left = np.zeros(n_k)
    best = 0.0
    best_x = 0
    best_y = 0
    for i in range(order.shape[0]):
        t = order[i]
        r = ranks[t]
        for k in range(n_k):
            ind_left = 1.0 if r < k else 0.0
            ind_at = 1.0 if r <= k else 0.0
            a_left[k] += ind_left - f_left[t, k]
            a_at[k] += ind_at - f_at[t, k]
        if group_end[i]:
            for k in range(n_k):
                v = abs(a_left[k])
                if v > best:
                    best = v
                    best_x = group_xidx[i]
                    best_y = 1 + 2 * k
                v = abs(a_at[k])
                if v > best:
                    best = v
                    best_x = group_xidx[i]
                    best_y = 2 + 2 * k
    return best, best_x, best_y


@njit(cache=True, nogil=True)
def normal_cdf_affine(v, loc, scale):
    """Matrix of Phi((v_k - loc_t) / scale_t)."""
    n = loc.shape[0]
    k = v.shape[0]
    out = np.empty((n, k))
    r = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(k):
            w = (v[j] - loc[i]) / scale[i]
            out[i, j] = 0.5 * math.erfc(-w * r)
    return out
