"""Clip precision, least squares with t-tests, the combined valence model, engagement runs."""
from __future__ import annotations

import bisect
import enum
import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import _csvio
from .errors import (DataError, DegenerateCluster, EmptySet, RangeError, ShapeError,
                     SingularMatrix, Underdetermined, UnsortedEdges)
from .features import FEATURE_NAMES, PEAKINESS_NAMES
from .ingest import AnnotationRecord, Cut

NEUTRAL_RATING = 4
DEFAULT_BUCKET_EDGES = (0.0, 0.02, 0.04, 0.06, 0.08, 0.1)


class Polarity(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class ClipPolarity:
    clip_id: str
    mean_rating: float
    polarity: Polarity


def classify_clip(ratings, clip_id: str = "") -> ClipPolarity:
    ratings = [int(r) for r in ratings]
    if not ratings:
        raise RangeError(f"{clip_id}: no ratings")
    if any(not 1 <= r <= 7 for r in ratings):
        raise RangeError(f"{clip_id}: ratings must lie in 1..7, got {ratings}")
    total, n = sum(ratings), len(ratings)
    if any(r > NEUTRAL_RATING for r in ratings) and any(r < NEUTRAL_RATING for r in ratings):
        pol = Polarity.AMBIGUOUS
    elif total > NEUTRAL_RATING * n:
        pol = Polarity.POSITIVE
    elif total < NEUTRAL_RATING * n:
        pol = Polarity.NEGATIVE
    else:
        pol = Polarity.NEUTRAL
    return ClipPolarity(clip_id, total / n, pol)


def is_correct(cut: Cut, pol: Polarity) -> bool:
    if cut.is_peak:
        return pol is Polarity.POSITIVE
    return pol is Polarity.NEGATIVE


@dataclass(frozen=True)
class Precision:
    correct: int
    total: int

    @property
    def value(self) -> float:
        return self.correct / self.total


def _pairs(records):
    out = []
    for item in records:
        if isinstance(item, AnnotationRecord):
            out.append((item, classify_clip(item.ratings, item.clip_id)))
        else:
            rec, pol = item
            out.append((rec, pol))
    return out


def _count(pairs, drop_ambiguous: bool):
    correct = total = 0
    for rec, pol in pairs:
        if drop_ambiguous and pol.polarity is Polarity.AMBIGUOUS:
            continue
        total += 1
        correct += is_correct(rec.cut, pol.polarity)
    return correct, total


def precision(records, drop_ambiguous: bool = True) -> Precision:
    """Share of peak clips rated positive plus valley clips rated negative.

    Neutral clips stay in the denominator; ambiguous clips too unless dropped.
    """
    correct, total = _count(_pairs(records), drop_ambiguous)
    if total == 0:
        raise EmptySet("no clips left to score")
    return Precision(correct, total)


def precision_by_cut(records, drop_ambiguous: bool = True) -> dict:
    pairs = _pairs(records)
    out = {}
    for cut in Cut:
        correct, total = _count([p for p in pairs if p[0].cut is cut], drop_ambiguous)
        if total:
            out[cut] = Precision(correct, total)
    return out


@dataclass(frozen=True)
class BucketRow:
    lower: float
    upper: float
    cut: Cut
    correct: int
    total: int

    @property
    def precision(self) -> float:
        return self.correct / self.total

    @property
    def label(self) -> str:
        return f"[{_csvio.fmt(self.lower)},{_csvio.fmt(self.upper)})"


def precision_by_uncertainty(records, bucket_edges=DEFAULT_BUCKET_EDGES,
                             drop_ambiguous: bool = True) -> list[BucketRow]:
    """Precision per half-open stddev bucket and cut; clips without a stddev are skipped."""
    edges = [float(e) for e in bucket_edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise UnsortedEdges(f"bucket edges must be strictly increasing, got {edges}")
    counts = {}
    for rec, pol in _pairs(records):
        sd = rec.source_stddev
        if sd is None:
            continue
        if drop_ambiguous and pol.polarity is Polarity.AMBIGUOUS:
            continue
        b = bisect.bisect_right(edges, sd) - 1
        if b < 0 or b >= len(edges) - 1:
            continue
        c, t = counts.get((b, rec.cut), (0, 0))
        counts[(b, rec.cut)] = (c + is_correct(rec.cut, pol.polarity), t + 1)
    cut_order = list(Cut)
    return [BucketRow(edges[b], edges[b + 1], cut, c, t)
            for (b, cut), (c, t) in sorted(counts.items(), key=lambda kv: (kv[0][0], cut_order.index(kv[0][1])))]


def precision_by_genre(records, metas, drop_ambiguous: bool = True) -> dict:
    genres = {m.video_id: m.genres for m in metas}
    pairs = _pairs(records)
    out = {}
    for g in sorted({g for gs in genres.values() for g in gs}):
        sub = [p for p in pairs if g in genres.get(p[0].video_id, ())]
        correct, total = _count(sub, drop_ambiguous)
        if total:
            out[g] = Precision(correct, total)
    return out


# ---------------------------------------------------------------- t distribution

def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 100000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularised incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc needs a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError("betainc needs 0 <= x <= 1")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return min(1.0, max(0.0, betainc(0.5 * df, 0.5, x)))


# ---------------------------------------------------------------- least squares

@dataclass(frozen=True, eq=False)
class RegressionResult:
    names: tuple
    coef: np.ndarray
    stderr: np.ndarray
    t: np.ndarray
    p: np.ndarray
    r_squared: float
    n_observations: int
    rss: float
    fitted: np.ndarray

    @property
    def df_resid(self) -> int:
        return self.n_observations - len(self.names)

    def term(self, name: str) -> dict:
        i = self.names.index(name)
        return {"coef": float(self.coef[i]), "stderr": float(self.stderr[i]),
                "t": float(self.t[i]), "p": float(self.p[i])}

    def flags(self) -> list:
        return [significance_flag(p) for p in self.p]


def significance_flag(p: float) -> str:
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def ols(X, y, names=None, rank_tol: float = 1e-10) -> RegressionResult:
    """Ordinary least squares via Householder QR, with Student-t tests on each coefficient.

    ``X`` should already contain an intercept column if one is wanted.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"design {X.shape} does not match response of length {y.size}")
    n, p = X.shape
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(p))
    if len(names) != p:
        raise ShapeError("one name per design column")
    if n <= p:
        raise Underdetermined(f"{n} observations cannot fit {p} coefficients")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise RangeError("non-finite value in design or response")

    # scale columns so the rank test is independent of units
    scale = np.sqrt((X ** 2).sum(axis=0))
    if np.any(scale == 0):
        j = int(np.flatnonzero(scale == 0)[0])
        raise SingularMatrix(f"column {names[j]!r} is all zeros", names[j])
    Q, R = np.linalg.qr(X / scale)
    diag = np.abs(np.diag(R))
    bad = np.flatnonzero(diag <= rank_tol * diag.max())
    if bad.size:
        j = int(bad[0])
        raise SingularMatrix(f"column {names[j]!r} is a linear combination of earlier columns", names[j])

    qty = Q.T @ y
    beta = solve_triangular(R, qty) / scale
    fitted = X @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    df = n - p
    sigma2 = rss / df
    r_inv = solve_triangular(R, np.eye(p))
    xtx_inv_diag = (r_inv ** 2).sum(axis=1) / scale ** 2
    stderr = np.sqrt(sigma2 * xtx_inv_diag)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(stderr > 0, beta / stderr, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    pvals = np.array([t_two_sided_p(float(ti), df) for ti in t])

    has_intercept = bool(np.any(np.all(X == X[0], axis=0) & (X[0] != 0)))
    tss = float(((y - y.mean()) ** 2).sum()) if has_intercept else float(y @ y)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    if has_intercept:
        r2 = min(1.0, max(0.0, r2))
    return RegressionResult(names, beta, stderr, t, pvals, r2, n, rss, fitted)


# ---------------------------------------------------------------- combined valence model

# valence_minus_mean is valence - movie_mean, so the design leaves it out to stay full rank
REGRESSION_FEATURES = tuple(f for f in FEATURE_NAMES if not f.endswith("_valence_minus_mean"))
ABLATIONS = {
    "peakiness": tuple(f"{m}_{p}" for m in ("audio", "visual") for p in PEAKINESS_NAMES),
    "movie-embedding": tuple(f for f in FEATURE_NAMES if f.startswith("embedding_")),
}


@dataclass(frozen=True, eq=False)
class CombinedFit:
    regression: RegressionResult
    precision: Precision
    by_cut: dict
    features: tuple


def feature_matrix(vectors, columns=REGRESSION_FEATURES) -> np.ndarray:
    idx = [FEATURE_NAMES.index(c) for c in columns]
    return np.array([v.values[idx] for v in vectors], dtype=float)


def combined_valence_fit(features, mean_ratings, cuts, drop: tuple = ()) -> CombinedFit:
    """Regress mean clip rating on the clip features; score the fit's polarity per clip cut.

    ``drop`` names ablation groups (keys of ``ABLATIONS``) or single features to leave out.
    """
    features = list(features)
    y = np.asarray(mean_ratings, dtype=float)
    cuts = list(cuts)
    if not (len(features) == y.size == len(cuts)):
        raise ShapeError("features, ratings and cuts must align")
    dropped = set()
    for d in drop:
        dropped.update(ABLATIONS.get(d, (d,)))
    columns = tuple(c for c in REGRESSION_FEATURES if c not in dropped)
    X = np.column_stack([np.ones(y.size), feature_matrix(features, columns)])
    reg = ols(X, y, ("intercept",) + columns)
    by_cut_counts = {}
    correct = 0
    for pred, cut in zip(reg.fitted, cuts):
        ok = pred > NEUTRAL_RATING if cut.is_peak else pred < NEUTRAL_RATING
        correct += ok
        c, t = by_cut_counts.get(cut, (0, 0))
        by_cut_counts[cut] = (c + ok, t + 1)
    by_cut = {cut: Precision(*by_cut_counts[cut]) for cut in Cut if cut in by_cut_counts}
    return CombinedFit(reg, Precision(correct, y.size), by_cut, columns)


# ---------------------------------------------------------------- engagement

def _assignment_map(model) -> dict:
    if isinstance(model, dict):
        return dict(model)
    return {vid: int(c) for vid, c in zip(model.video_ids, model.assignments)}


def engagement_design(metas, assignments: dict, k: int):
    rows, names = [], ["intercept", "duration_seconds", "year"] + [f"cluster_{c}" for c in range(1, k)]
    for m in metas:
        if m.video_id not in assignments:
            raise DataError(f"{m.video_id}: no cluster assignment for k={k}")
        c = assignments[m.video_id]
        if not 0 <= c < k:
            raise DataError(f"{m.video_id}: cluster id {c} outside [0, {k})")
        rows.append([1.0, m.duration_seconds, float(m.year)] + [float(c == j) for j in range(1, k)])
    sizes = np.bincount([assignments[m.video_id] for m in metas], minlength=k)
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        raise DegenerateCluster(f"k={k}: cluster {int(empty[0])} has no videos")
    return np.array(rows), names


def engagement_run(metas, cluster_models: dict, log1p: bool = False) -> "OrderedDict[int, RegressionResult]":
    """One regression of comment counts per k on duration, year and cluster dummies.

    Cluster 0 is the omitted baseline.
    """
    metas = list(metas)
    y = np.array([m.comments for m in metas], dtype=float)
    if log1p:
        y = np.log1p(y)
    out = OrderedDict()
    for k in sorted(cluster_models):
        X, names = engagement_design(metas, _assignment_map(cluster_models[k]), k)
        out[k] = ols(X, y, names)
    return out


# ---------------------------------------------------------------- reports

def write_regression(result: RegressionResult, path, extra: dict | None = None) -> None:
    head = dict(extra or {})
    head.update({"n": result.n_observations, "r_squared": float(result.r_squared)})
    rows = ([name, _csvio.fmt(c), _csvio.fmt(s), _csvio.fmt(t), _csvio.fmt(p), significance_flag(p)]
            for name, c, s, t, p in zip(result.names, result.coef, result.stderr, result.t, result.p))
    _csvio.write_csv(path, head, ["term", "coef", "stderr", "t", "p", "flag"], rows)


def precision_report_rows(records, metas=(), bucket_edges=DEFAULT_BUCKET_EDGES) -> list:
    """Rows ``(scope, correct, total, precision)`` for every scope of the precision report."""
    pairs = _pairs(records)
    rows = []
    for scope, drop in (("all", False), ("no-ambiguous", True)):
        pr = precision(pairs, drop)
        rows.append((scope, pr.correct, pr.total, pr.value))
    for cut, pr in precision_by_cut(pairs, True).items():
        rows.append((f"cut:{cut.value}", pr.correct, pr.total, pr.value))
    for b in precision_by_uncertainty(pairs, bucket_edges, True):
        rows.append((f"bucket:{b.label}:{b.cut.value}", b.correct, b.total, b.precision))
    for g, pr in precision_by_genre(pairs, metas, True).items():
        rows.append((f"genre:{g}", pr.correct, pr.total, pr.value))
    return rows


def write_precision_report(rows, path, extra: dict | None = None) -> None:
    _csvio.write_csv(path, extra, ["scope", "correct", "total", "precision"],
                     ([s, c, t, _csvio.fmt(p)] for s, c, t, p in rows))


def mean_ratings(records) -> np.ndarray:
    return np.array([sum(r.ratings) / len(r.ratings) for r in records])

