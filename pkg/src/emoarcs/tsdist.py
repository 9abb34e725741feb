"""Banded dynamic time warping and the LB_Keogh lower bound.

Distances are reported as the square root of the cumulative squared cost so that
``dtw`` and ``lb_keogh`` live on the same scale and can be compared for pruning.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from . import _csvio
from .errors import EmptyInput, LengthMismatch, ParseError, RangeError

UNBOUNDED = None
DEFAULT_REACH_FRACTION = 0.025


@dataclass(frozen=True)
class DistanceConfig:
    reach_fraction: float = DEFAULT_REACH_FRACTION
    resample_length: int = 500

    def __post_init__(self):
        if not 0.0 <= self.reach_fraction <= 1.0:
            raise RangeError(f"reach_fraction must be in [0, 1], got {self.reach_fraction}")
        if self.resample_length < 1:
            raise RangeError("resample_length must be positive")

    @property
    def reach(self) -> int:
        return reach_for(self.reach_fraction, self.resample_length)


def reach_for(fraction: float, n: int) -> int:
    return min(max(0, round(fraction * n)), max(n - 1, 0))


@dataclass(frozen=True, eq=False)
class Envelope:
    upper: np.ndarray
    lower: np.ndarray
    reach: int


def _as_series(x) -> np.ndarray:
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("series must be one-dimensional")
    return a


@njit(cache=True, nogil=True)
def _envelope(a, r):
    n = a.shape[0]
    upper = np.empty(n)
    lower = np.empty(n)
    for i in range(n):
        lo = max(0, i - r)
        hi = min(n - 1, i + r)
        u = a[lo]
        m = a[lo]
        for j in range(lo + 1, hi + 1):
            v = a[j]
            if v > u:
                u = v
            if v < m:
                m = v
        upper[i] = u
        lower[i] = m
    return upper, lower


def keogh_envelope(a, r: int) -> Envelope:
    """Running max/min of ``a`` over ``[i - r, i + r]`` clamped to the series."""
    a = _as_series(a)
    if r < 0:
        raise RangeError("reach must be non-negative")
    upper, lower = _envelope(a, int(r))
    return Envelope(upper, lower, int(r))


@njit(cache=True, nogil=True)
def _lb_sq(b, upper, lower):
    total = 0.0
    for i in range(b.shape[0]):
        v = b[i]
        if v > upper[i]:
            d = v - upper[i]
            total += d * d
        elif v < lower[i]:
            d = v - lower[i]
            total += d * d
    return total


def lb_keogh(a, b, r: int, envelope: Envelope | None = None) -> float:
    """LB_Keogh of ``b`` against the envelope of ``a``."""
    a, b = _as_series(a), _as_series(b)
    if a.size != b.size:
        raise LengthMismatch(f"lb_keogh needs equal lengths, got {a.size} and {b.size}")
    env = envelope if envelope is not None else keogh_envelope(a, r)
    return math.sqrt(_lb_sq(b, env.upper, env.lower))


@njit(cache=True, nogil=True)
def _dtw_full_sq(a, b):
    n = a.shape[0]
    m = b.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    d = a[0] - b[0]
    prev[0] = d * d
    for j in range(1, m):
        d = a[0] - b[j]
        prev[j] = prev[j - 1] + d * d
    for i in range(1, n):
        d = a[i] - b[0]
        cur[0] = prev[0] + d * d
        for j in range(1, m):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            d = a[i] - b[j]
            cur[j] = best + d * d
        prev, cur = cur, prev
    return prev[m - 1]


@njit(cache=True, nogil=True)
def _dtw_band_sq(a, b, r):
    # Row i holds columns j = i - r + k for k in [0, 2r]; storage O(r).
    n = a.shape[0]
    width = 2 * r + 1
    inf = np.inf
    prev = np.full(width, inf)
    cur = np.full(width, inf)
    # row 0
    for k in range(r, width):
        j = k - r
        if j >= n:
            break
        d = a[0] - b[j]
        if j == 0:
            prev[k] = d * d
        else:
            prev[k] = prev[k - 1] + d * d
    for i in range(1, n):
        for k in range(width):
            j = i - r + k
            if j < 0 or j >= n:
                cur[k] = inf
                continue
            # (i-1, j-1) -> prev[k]; (i-1, j) -> prev[k+1]; (i, j-1) -> cur[k-1]
            best = prev[k]
            if k + 1 < width and prev[k + 1] < best:
                best = prev[k + 1]
            if k > 0 and cur[k - 1] < best:
                best = cur[k - 1]
            d = a[i] - b[j]
            cur[k] = best + d * d
        prev, cur = cur, prev
    return prev[r]


def dtw(a, b, r: int | None = UNBOUNDED) -> float:
    """DTW distance with steps (1,0), (0,1), (1,1); ``r`` is the Sakoe-Chiba reach.

    ``r=None`` allows any monotone warping and accepts unequal lengths.
    """
    a, b = _as_series(a), _as_series(b)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("dtw needs non-empty series")
    if r is None:
        return math.sqrt(_dtw_full_sq(a, b))
    if r < 0:
        raise RangeError("reach must be non-negative")
    if a.size != b.size:
        raise LengthMismatch(f"banded dtw needs equal lengths, got {a.size} and {b.size}")
    r = min(int(r), a.size - 1)
    if r == a.size - 1:
        return math.sqrt(_dtw_full_sq(a, b))
    return math.sqrt(_dtw_band_sq(a, b, r))


class Pruned:
    """Marker returned by :func:`pruned_distance` when the lower bound rules a pair out."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Pruned"


PRUNED = Pruned()


def pruned_distance(a, b, r: int, best_so_far: float,
                    env_a: Envelope | None = None, env_b: Envelope | None = None):
    """Exact banded DTW, or ``PRUNED`` when max(LB(a,b), LB(b,a)) >= best_so_far."""
    a, b = _as_series(a), _as_series(b)
    if a.size != b.size:
        raise LengthMismatch(f"pruned_distance needs equal lengths, got {a.size} and {b.size}")
    lb = lb_keogh(a, b, r, env_a)
    if lb >= best_so_far:
        return PRUNED
    lb = max(lb, lb_keogh(b, a, r, env_b))
    if lb >= best_so_far:
        return PRUNED
    return dtw(a, b, r)


# ---------------------------------------------------------------- matrices

def _rows_block(mat, series, r, rows):
    n = series.shape[0]
    out = []
    for i in rows:
        a = series[i]
        for j in range(i + 1, n):
            if r is None or r >= a.size - 1:
                d = _dtw_full_sq(a, series[j])
            else:
                d = _dtw_band_sq(a, series[j], r)
            out.append((i, j, math.sqrt(d)))
    return out


def distance_matrix(series, r: int | None, jobs: int = 1) -> np.ndarray:
    """Symmetric pairwise DTW matrix. Entries are independent so ``jobs`` never changes the result."""
    series = np.ascontiguousarray(series, dtype=np.float64)
    n = series.shape[0]
    mat = np.zeros((n, n))
    rows = list(range(n))
    if jobs <= 1 or n < 4:
        blocks = [rows]
    else:
        blocks = [rows[k::jobs] for k in range(jobs)]
    if len(blocks) == 1:
        results = [_rows_block(mat, series, r, blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda blk: _rows_block(mat, series, r, blk), blocks))
    for res in results:
        for i, j, d in res:
            mat[i, j] = mat[j, i] = d
    return mat


def write_distance_matrix(mat: np.ndarray, path, config: DistanceConfig, extra: dict | None = None) -> None:
    n = mat.shape[0]
    head = {"n": n, "reach_fraction": float(config.reach_fraction), "resample": config.resample_length}
    head.update(extra or {})
    iu = np.triu_indices(n, k=1)
    lines = [_csvio.header_line(head)]
    lines.extend(_csvio.fmt(v) + "\n" for v in mat[iu])
    Path(path).write_text("".join(lines))


def load_distance_matrix(path):
    """Returns ``(matrix, DistanceConfig)`` from a condensed upper-triangular file."""
    path = Path(path)
    lines = _csvio.read_text(path).splitlines()
    head = _csvio.parse_header(lines[0])
    n = int(head["n"])
    vals = [float(x) for x in lines[1:] if x.strip() and not x.startswith("#")]
    if len(vals) != n * (n - 1) // 2:
        raise ParseError(f"{path}: expected {n * (n - 1) // 2} entries, got {len(vals)}")
    mat = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    mat[iu] = vals
    mat = mat + mat.T
    cfg = DistanceConfig(float(head["reach_fraction"]), int(head["resample"]))
    return mat, cfg
