"""k-medoids over equal-length z-normalised arcs under banded DTW."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _csvio
from .arc import ZNORM_TOL, EmotionalArc, is_znormed
from .errors import InvalidK, LengthMismatch, ParseError, UnnormalizedInput
from .tsdist import (PRUNED, DistanceConfig, distance_matrix, dtw, keogh_envelope,
                     pruned_distance, reach_for)

CACHE_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    medoid_indices: tuple
    assignments: np.ndarray
    wcd: float
    config: DistanceConfig
    seed: int
    iterations_run: int
    video_ids: tuple = ()
    wcd_history: tuple = ()
    n_init: int = 1

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)

    @property
    def medoid_video_ids(self) -> list:
        if not self.video_ids:
            return []
        return [self.video_ids[m] for m in self.medoid_indices]


@dataclass(frozen=True)
class ElbowCurve:
    entries: tuple = field(default_factory=tuple)  # (k, best wcd)

    @property
    def ks(self):
        return [k for k, _ in self.entries]

    @property
    def wcds(self):
        return [w for _, w in self.entries]

    def wcd(self, k: int) -> float:
        return dict(self.entries)[k]


def stack_arcs(arcs) -> np.ndarray:
    """Validate and stack arcs into an ``(n, length)`` matrix."""
    rows = []
    for i, a in enumerate(arcs):
        values = a.values if isinstance(a, EmotionalArc) else np.asarray(a, dtype=float)
        if isinstance(a, EmotionalArc) and not a.znormed:
            raise UnnormalizedInput(f"arc {i} ({a.video_id}) is not z-normalised")
        if not is_znormed(values, ZNORM_TOL):
            raise UnnormalizedInput(f"arc {i} does not have zero mean and unit variance")
        rows.append(values)
    if not rows:
        raise InvalidK("no arcs to cluster")
    lengths = {r.size for r in rows}
    if len(lengths) != 1:
        raise LengthMismatch(f"arcs must share one length, got {sorted(lengths)}")
    return np.ascontiguousarray(np.vstack(rows), dtype=np.float64)


def _video_ids(arcs) -> tuple:
    return tuple(a.video_id if isinstance(a, EmotionalArc) else str(i) for i, a in enumerate(arcs))


class _Oracle:
    """Point-to-point distances, either from a cached matrix or computed lazily with pruning."""

    def __init__(self, X: np.ndarray, r: int, matrix: np.ndarray | None):
        self.X = X
        self.r = r
        self.matrix = matrix
        self._memo = {}
        self._env = {}

    def exact(self, i: int, j: int) -> float:
        if self.matrix is not None:
            return float(self.matrix[i, j])
        if i == j:
            return 0.0
        key = (i, j) if i < j else (j, i)
        d = self._memo.get(key)
        if d is None:
            d = dtw(self.X[key[0]], self.X[key[1]], self.r)
            self._memo[key] = d
        return d

    def _envelope(self, i):
        env = self._env.get(i)
        if env is None:
            env = self._env[i] = keogh_envelope(self.X[i], self.r)
        return env

    def assign(self, medoids: list):
        """Nearest medoid for every point; ties to the lowest cluster id; medoids own themselves."""
        n = self.X.shape[0]
        if self.matrix is not None:
            sub = self.matrix[:, medoids]
            labels = np.argmin(sub, axis=1)
            dists = sub[np.arange(n), labels]
        else:
            labels = np.empty(n, dtype=np.int64)
            dists = np.empty(n)
            for i in range(n):
                best, lab = np.inf, -1
                for c, m in enumerate(medoids):
                    key = (i, m) if i < m else (m, i)
                    if i == m:
                        d = 0.0
                    elif key in self._memo:
                        d = self._memo[key]
                    else:
                        d = pruned_distance(self.X[i], self.X[m], self.r, best,
                                            self._envelope(i), self._envelope(m))
                        if d is PRUNED:
                            continue
                        self._memo[key] = d
                    if d < best:
                        best, lab = d, c
                labels[i], dists[i] = lab, best
        for c, m in enumerate(medoids):
            labels[m] = c
            dists[m] = 0.0
        return labels.astype(np.int64), dists


def _update(oracle: _Oracle, medoids: list, labels: np.ndarray, dists: np.ndarray) -> list:
    new = []
    for c, m in enumerate(medoids):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            # unreachable while medoids own themselves; kept as a guard
            taken = set(new) | set(medoids)
            order = [i for i in np.argsort(-dists, kind="stable") if i not in taken]
            new.append(int(order[0]))
            continue
        if oracle.matrix is not None:
            costs = oracle.matrix[np.ix_(members, members)].sum(axis=1)
        else:
            costs = np.array([sum(oracle.exact(p, q) for q in members) for p in members])
        current = float(costs[members == m][0])
        best = int(np.argmin(costs))
        # only move on strict improvement so the loop cannot cycle
        new.append(int(members[best]) if costs[best] < current else m)
    return sorted(new)


def _one_restart(oracle: _Oracle, init, max_iter: int):
    medoids = sorted(int(i) for i in init)
    labels, dists = oracle.assign(medoids)
    history = [float(dists.sum())]
    iters = 0
    while iters < max_iter:
        iters += 1
        new = _update(oracle, medoids, labels, dists)
        if new == medoids:
            break
        medoids = new
        labels, dists = oracle.assign(medoids)
        history.append(float(dists.sum()))
    return medoids, labels, history, iters


def kmedoids(arcs, k: int, config: DistanceConfig | None = None, seed: int = 0,
             n_init: int = 10, max_iter: int = 100, *, distances: np.ndarray | None = None,
             cache_limit: int = CACHE_LIMIT, jobs: int = 1) -> ClusterModel:
    """Voronoi-iteration k-medoids with ``n_init`` seeded random restarts; best wcd wins.

    ``distances`` may carry a precomputed pairwise matrix (as from :func:`pairwise`).
    Without one, the matrix is built when ``len(arcs) <= cache_limit`` and otherwise
    distances are evaluated on demand with LB_Keogh pruning during assignment.
    """
    config = config or DistanceConfig()
    X = stack_arcs(arcs)
    n, length = X.shape
    if int(k) != k or not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    if n_init < 1 or max_iter < 1:
        raise ValueError("n_init and max_iter must be positive")
    r = reach_for(config.reach_fraction, length)
    if distances is None and n <= cache_limit:
        distances = distance_matrix(X, r, jobs=jobs)
    oracle = _Oracle(X, r, distances)

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        init = rng.choice(n, size=int(k), replace=False)
        medoids, labels, history, iters = _one_restart(oracle, init, max_iter)
        if best is None or history[-1] < best[2][-1]:
            best = (medoids, labels, history, iters)
    medoids, labels, history, iters = best
    return ClusterModel(
        k=int(k), medoid_indices=tuple(medoids), assignments=labels, wcd=history[-1],
        config=config, seed=seed, iterations_run=iters, video_ids=_video_ids(arcs),
        wcd_history=tuple(history), n_init=n_init,
    )


def pairwise(arcs, config: DistanceConfig | None = None, jobs: int = 1) -> np.ndarray:
    config = config or DistanceConfig()
    X = stack_arcs(arcs)
    return distance_matrix(X, reach_for(config.reach_fraction, X.shape[1]), jobs=jobs)


def elbow(arcs, k_range, config: DistanceConfig | None = None, seed: int = 0, n_init: int = 10,
          max_iter: int = 100, *, distances: np.ndarray | None = None, jobs: int = 1,
          return_models: bool = False):
    """Best within-cluster distance for each k in ``k_range`` (inclusive bounds or an iterable)."""
    config = config or DistanceConfig()
    if isinstance(k_range, tuple) and len(k_range) == 2:
        ks = list(range(k_range[0], k_range[1] + 1))
    else:
        ks = list(k_range)
    if ks != sorted(set(ks)):
        raise InvalidK("k values must be strictly increasing")
    if distances is None and len(arcs) <= CACHE_LIMIT:
        distances = pairwise(arcs, config, jobs=jobs)
    models = {}
    for k in ks:
        models[k] = kmedoids(arcs, k, config, seed, n_init, max_iter, distances=distances)
    curve = ElbowCurve(tuple((k, models[k].wcd) for k in ks))
    return (curve, models) if return_models else curve


def assign(arc, model: ClusterModel, arcs) -> int:
    """Cluster id of the medoid nearest to ``arc``; ties go to the lower id."""
    x = stack_arcs([arc])[0]
    X = np.asarray([a.values if isinstance(a, EmotionalArc) else a for a in arcs], dtype=float)
    if X.shape[1] != x.size:
        raise LengthMismatch(f"arc length {x.size} differs from clustered arcs ({X.shape[1]})")
    r = reach_for(model.config.reach_fraction, x.size)
    best, label = np.inf, -1
    for c, m in enumerate(model.medoid_indices):
        d = pruned_distance(x, X[m], r, best)
        if d is not PRUNED and d < best:
            best, label = d, c
    return label


def within_cluster_distance(model: ClusterModel, arcs) -> float:
    """Recompute wcd from scratch without pruning."""
    X = stack_arcs(arcs)
    r = reach_for(model.config.reach_fraction, X.shape[1])
    return float(sum(dtw(X[i], X[model.medoid_indices[c]], r)
                     for i, c in enumerate(model.assignments)))


# ---------------------------------------------------------------- files

def write_clusters(model: ClusterModel, csv_path, json_path, extra: dict | None = None) -> None:
    head = dict(extra or {})
    head["k"] = model.k
    _csvio.write_csv(csv_path, head, ["video_id", "cluster_id"],
                     ([vid, int(c)] for vid, c in zip(model.video_ids, model.assignments)))
    sidecar = {
        "k": model.k,
        "seed": model.seed,
        "wcd": model.wcd,
        "medoid_video_ids": model.medoid_video_ids,
        "medoid_indices": list(model.medoid_indices),
        "iterations_run": model.iterations_run,
        "n_init": model.n_init,
        "distance": {"reach_fraction": model.config.reach_fraction,
                   "resample_length": model.config.resample_length},
    }
    sidecar.update({k: v for k, v in (extra or {}).items() if k not in sidecar})
    Path(json_path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_assignments(csv_path) -> dict:
    """``video_id -> cluster_id`` from a cluster CSV."""
    rows = _csvio.csv_rows(_csvio.read_text(csv_path))
    if not rows or rows[0][:2] != ["video_id", "cluster_id"]:
        raise ParseError(f"{csv_path}: missing 'video_id,cluster_id' header")
    try:
        return {vid: int(c) for vid, c in rows[1:]}
    except ValueError as exc:
        raise ParseError(f"{csv_path}: {exc}") from None


def write_elbow(curve: ElbowCurve, path, extra: dict | None = None) -> None:
    _csvio.write_csv(path, extra, ["k", "wcd"], ([k, _csvio.fmt(w)] for k, w in curve.entries))
