"""Independent reference implementations used to verify the library:
a direct-definition log-likelihood, a brute-force coordinate curvature
weight, and an exhaustive grid search over the survival-ratio box."""

import math

import numpy as np


def naive_loglik(theta, pooled, lam):
    """Direct evaluation of the objective from its defining sums, without
    the coefficient bookkeeping the library uses."""
    theta = np.asarray(theta, dtype=float)
    val = 0.0
    for i in sorted(pooled.Sbar):
        for j in range(i):
            val += math.log(theta[j])
    val -= lam * float(np.sum(pooled.ttilde * np.cumprod(theta)))
    if pooled.ell > 0:
        for ul in pooled.u:
            val += math.log1p(-theta[ul - 1])
            for j in range(ul - 1):
                val += math.log(theta[j])
    return val


def naive_curvature_weight(theta, i, pooled, lam):
    """Brute-force A_i: lam * sum_{j>=i} ttilde_j * prod_{k<=j, k!=i} theta_k
    (1-based i)."""
    theta = np.asarray(theta, dtype=float)
    n = len(theta)
    total = 0.0
    for j in range(i - 1, n):
        prod = 1.0
        for k in range(j + 1):
            if k != i - 1:
                prod *= theta[k]
        total += pooled.ttilde[j] * prod
    return lam * total


def _node_values(grid, coef, jump):
    """Separable part of the objective for one coordinate on the grid."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = coef * np.log(grid) if coef > 0 else np.zeros_like(grid)
        if jump:
            out = out + np.log1p(-grid)
    return out


def _upper_envelope(slopes, intercepts):
    """Upper envelope of the lines y = m*a + b as (slopes, intercepts,
    breakpoints); line i is active for queries in [breakpoints[i-1],
    breakpoints[i])."""
    order = np.lexsort((intercepts, slopes))
    ms = np.asarray(slopes, dtype=float)[order]
    bs = np.asarray(intercepts, dtype=float)[order]
    # for duplicate slopes only the largest intercept can matter
    keep = np.concatenate((ms[1:] != ms[:-1], [True]))
    ms, bs = ms[keep], bs[keep]
    hm, hb, hx = [], [], []
    for m, b in zip(ms, bs):
        while hm:
            # query value where the new (steeper) line overtakes the top
            x = (hb[-1] - b) / (m - hm[-1])
            if hx and x <= hx[-1]:
                hm.pop()
                hb.pop()
                hx.pop()
            else:
                hx.append(x)
                break
        hm.append(m)
        hb.append(b)
    return np.array(hm), np.array(hb), np.array(hx)


def envelope_max(slopes, intercepts, queries):
    """max_i slopes[i]*a + intercepts[i] for each a in queries."""
    finite = np.isfinite(intercepts)
    hm, hb, hx = _upper_envelope(np.asarray(slopes)[finite],
                                 np.asarray(intercepts)[finite])
    idx = np.searchsorted(hx, queries, side="right")
    return hm[idx] * queries + hb[idx]


def _structure(pooled):
    coef = pooled.qsize.astype(float)
    if pooled.ell > 0:
        coef = coef + (pooled.ell - pooled.l)
    is_jump = np.zeros(pooled.n, dtype=bool)
    is_jump[pooled.u - 1] = True
    return coef, is_jump


def _objective_on_product(axes, pooled, lam):
    """Vectorized objective over the cartesian product of per-coordinate
    value arrays, returning (best value, best point)."""
    coef, is_jump = _structure(pooled)
    n = pooled.n
    total = np.zeros(())
    prod = np.ones(())
    for i in range(n):
        shape = [1] * n
        shape[i] = len(axes[i])
        ax = np.asarray(axes[i]).reshape(shape)
        prod = prod * ax
        total = total + _node_values(ax, coef[i], is_jump[i]) \
            - lam * pooled.ttilde[i] * prod
    flat = int(np.argmax(total))
    idx = np.unravel_index(flat, total.shape)
    point = np.array([axes[i][idx[i]] for i in range(n)])
    return float(total[idx]), point


def grid_search_objective(pooled, lam, step=0.005, refine=True):
    """Exhaustive maximization of the objective over the survival-ratio
    box on a regular grid (every coordinate restricted to the grid),
    optionally polished by one local pass at 10x finer resolution around
    the grid argmax (the coarse grid undershoots the optimum by up to
    ~1e-4 purely from discretization).

    The last coordinate enters the objective only through a linear term
    in the running product of the others, so its grid maximization is
    factored out as an upper envelope of lines; the remaining coordinates
    are enumerated by broadcasting.
    """
    n = pooled.n
    coef, is_jump = _structure(pooled)
    grid = np.round(np.arange(0.0, 1.0 + 0.5 * step, step), 10)
    ttilde = pooled.ttilde

    if n == 1:
        vals = _node_values(grid, coef[0], is_jump[0]) - lam * ttilde[0] * grid
        best = float(np.max(vals))
        point = np.array([grid[int(np.argmax(vals))]])
    else:
        total = None
        prod = None
        for i in range(n - 1):
            f = _node_values(grid, coef[i], is_jump[i])
            if total is None:
                total = f - lam * ttilde[i] * grid
                prod = grid.copy()
            else:
                prod = prod[..., None] * grid
                total = total[..., None] + f - lam * ttilde[i] * prod
        f_last = _node_values(grid, coef[n - 1], is_jump[n - 1])
        queries = lam * ttilde[n - 1] * prod.ravel()
        best_last = envelope_max(-grid, f_last, queries).reshape(prod.shape)
        combined = total + best_last
        flat = int(np.argmax(combined))
        idx = np.unravel_index(flat, combined.shape)
        head = [grid[j] for j in idx]
        last_vals = f_last - lam * ttilde[n - 1] * float(prod[idx]) * grid
        point = np.array(head + [grid[int(np.argmax(last_vals))]])
        best = float(combined[idx])

    if refine:
        axes = [np.clip(point[i] + np.arange(-10, 11) * (step / 10.0),
                        0.0, 1.0) for i in range(n)]
        local_best, local_point = _objective_on_product(axes, pooled, lam)
        if local_best > best:
            best, point = local_best, local_point
    return best, point
