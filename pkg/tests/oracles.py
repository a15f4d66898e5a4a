"""Brute-force oracles the tests check the fast implementations against.

Everything here is deliberately written from the definitions (grid searches
over the quantities being optimized) instead of reusing the package's
closed forms or solver.
"""

import itertools

import numpy as np


def alt_infimum_grid_gaussian(means, weights, n=150, zooms=2, pad=0.75):
    """Grid minimization over alternative instances (different best arm).

    For each candidate arm the free coordinates are optimal at the original
    means, leaving a 2-D minimization over (lambda_best, lambda_a) under
    lambda_a >= lambda_best, refined by zooming around the incumbent.
    """
    means = np.asarray(means, dtype=float)
    weights = np.asarray(weights, dtype=float)
    astar = int(np.argmax(means))
    lo, hi = means.min() - pad, means.max() + pad
    best = np.inf
    for a in range(means.size):
        if a == astar:
            continue
        lo1, hi1, lo2, hi2 = lo, hi, lo, hi
        val = np.inf
        for _ in range(zooms + 1):
            g1 = np.linspace(lo1, hi1, n)
            g2 = np.linspace(lo2, hi2, n)
            L1 = g1[:, None]
            La = g2[None, :]
            obj = 0.5 * weights[astar] * (means[astar] - L1) ** 2 + 0.5 * weights[a] * (
                means[a] - La
            ) ** 2
            obj = np.where(La >= L1, obj, np.inf)
            i, j = np.unravel_index(np.argmin(obj), obj.shape)
            val = obj[i, j]
            h1 = (hi1 - lo1) / (n - 1)
            h2 = (hi2 - lo2) / (n - 1)
            lo1, hi1 = g1[i] - 2 * h1, g1[i] + 2 * h1
            lo2, hi2 = g2[j] - 2 * h2, g2[j] + 2 * h2
        best = min(best, val)
    return float(best)


def g_batch_gaussian(means, W):
    """Vectorized game value at many arm-proportion rows (Gaussian identity)."""
    means = np.asarray(means, dtype=float)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    astar = int(np.argmax(means))
    best = np.full(W.shape[0], np.inf)
    for a in range(means.size):
        if a == astar:
            continue
        s = W[:, astar] + W[:, a]
        gap = means[astar] - means[a]
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.where(s > 0, W[:, astar] / np.where(s > 0, s, 1.0), 0.0)
        cand = np.where(s > 0, 0.5 * alpha * (1.0 - alpha) * s * gap * gap, 0.0)
        best = np.minimum(best, cand)
    return best


def _simplex_grid(dim, n):
    """All points of the regular n-subdivision of the (dim-1)-simplex."""
    if dim == 1:
        return np.ones((1, 1))
    pts = []
    for combo in itertools.product(range(n + 1), repeat=dim - 1):
        s = sum(combo)
        if s <= n:
            pts.append([c / n for c in combo] + [(n - s) / n])
    return np.asarray(pts)


def characteristic_value_grid_gaussian(means, policies, n=120, zooms=3):
    """Refined grid brute-force of the max over mediator weights (Gaussian).

    Evaluates the game value on a simplex grid over the weights, then zooms
    around the incumbent with shrinking local grids.
    """
    means = np.asarray(means, dtype=float)
    policies = np.asarray(policies, dtype=float)
    E = policies.shape[0]
    if E == 1:
        return float(g_batch_gaussian(means, policies)[0])
    pts = _simplex_grid(E, n)
    vals = g_batch_gaussian(means, pts @ policies)
    best_idx = int(np.argmax(vals))
    best_pt, best = pts[best_idx], float(vals[best_idx])
    width = 2.0 / n
    for _ in range(zooms):
        local = _simplex_grid(E, 24)
        cand = best_pt[None, :] * (1.0 - width) + local * width
        cand /= cand.sum(axis=1, keepdims=True)
        vals = g_batch_gaussian(means, cand @ policies)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_pt = float(vals[i]), cand[i]
        width /= 12.0
    return best
