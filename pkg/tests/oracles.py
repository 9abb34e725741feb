"""Slow, obviously-correct reference computations used to check the fast paths.

Nothing here imports the package's DP, QR or incomplete-beta code.
"""
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy import stats


@lru_cache(maxsize=None)
def warping_paths(n, m):
    """Every monotone path (0,0) -> (n-1,m-1) with steps (1,0), (0,1), (1,1)."""
    out = []

    def walk(i, j, path):
        if i == n - 1 and j == m - 1:
            out.append(tuple(path))
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                path.append((a, b))
                walk(a, b, path)
                path.pop()

    walk(0, 0, [(0, 0)])
    return tuple(out)


@lru_cache(maxsize=None)
def _path_tables(n, m, r):
    """Padded flat-index table for all paths admissible under reach ``r`` (None = unbounded)."""
    paths = [p for p in warping_paths(n, m) if r is None or all(abs(i - j) <= r for i, j in p)]
    width = max(len(p) for p in paths)
    pad = n * m  # points at an appended zero-cost cell
    table = np.full((len(paths), width), pad, dtype=np.int64)
    for row, p in enumerate(paths):
        table[row, :len(p)] = [i * m + j for i, j in p]
    return table


def dtw_enumerate(a, b, r=None):
    """Minimum over enumerated warping paths of the summed squared differences, square-rooted."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cost = np.append(((a[:, None] - b[None, :]) ** 2).ravel(), 0.0)
    table = _path_tables(a.size, b.size, r)
    return float(np.sqrt(cost[table].sum(axis=1).min()))


def euclidean(a, b):
    return float(np.sqrt(((np.asarray(a, float) - np.asarray(b, float)) ** 2).sum()))


def one_medoid(D):
    """Exhaustive 1-medoid: (index, total distance) minimising the column sum."""
    totals = D.sum(axis=0)
    j = int(np.argmin(totals))
    return j, float(totals[j])


def best_k_medoids(D, k):
    """Exhaustive optimum of the k-medoids objective on a small matrix."""
    n = D.shape[0]
    best = None
    for meds in combinations(range(n), k):
        cost = D[:, list(meds)].min(axis=1).sum()
        if best is None or cost < best[1]:
            best = (meds, float(cost))
    return best


def ols_normal_equations(X, y):
    """Textbook OLS: (X'X)^-1 X'y with t-tests from scipy's Student-t survival function."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    n, p = X.shape
    xtx_inv = np.linalg.inv(X.T @ X)
    beta = xtx_inv @ X.T @ y
    resid = y - X @ beta
    sigma2 = resid @ resid / (n - p)
    se = np.sqrt(np.diag(xtx_inv) * sigma2)
    t = beta / se
    pvals = 2.0 * stats.t.sf(np.abs(t), n - p)
    return beta, se, pvals


def dropout_two_pass(mat):
    """Column mean and population std by explicit two-pass loops."""
    mat = np.asarray(mat, float)
    m, t = mat.shape
    mean = np.zeros(t)
    std = np.zeros(t)
    for col in range(t):
        s = 0.0
        for row in range(m):
            s += mat[row, col]
        mu = s / m
        acc = 0.0
        for row in range(m):
            acc += (mat[row, col] - mu) ** 2
        mean[col] = mu
        std[col] = (acc / m) ** 0.5
    return mean, std


def smooth_loop(x, kernel):
    """Truncated-and-renormalised weighted average, one output at a time."""
    x = np.asarray(x, float)
    w = len(kernel)
    lead = w // 2  # even windows reach one further back than forward
    out = np.zeros(x.size)
    for t in range(x.size):
        num = den = 0.0
        for i in range(w):
            src = t + i - lead
            if 0 <= src < x.size:
                num += kernel[i] * x[src]
                den += kernel[i]
        out[t] = num / den
    return out
