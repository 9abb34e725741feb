"""Emotionally charged moments, clip windows and the combined-model feature vectors."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.signal import peak_prominences

from . import _csvio
from .arc import EmotionalArc
from .errors import OutOfRange, ParseError, ShapeError
from .ingest import ActivationMatrix, Cut

PEAKINESS_FRACTION = 0.025
N_CHUNKS = 10


class Kind(enum.Enum):
    PEAK = "peak"
    VALLEY = "valley"


@dataclass(frozen=True)
class Extremum:
    index: int
    kind: Kind
    value: float
    prominence: float
    stddev_at: float | None = None


@dataclass(frozen=True)
class ClipWindow:
    video_id: str
    start_seconds: float
    end_seconds: float
    cut: Cut

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.start_seconds + self.end_seconds)

    @property
    def length(self) -> float:
        return self.end_seconds - self.start_seconds


def _strict_maxima(a: np.ndarray) -> np.ndarray:
    return np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] > a[2:])) + 1


def find_extrema(arc, min_prominence: float | None = None, min_separation: int = 1,
                 top_n: int = 5) -> list[Extremum]:
    """Strict local peaks and valleys of an arc, most prominent first, then sorted by index.

    Candidates below ``min_prominence`` are dropped; the rest are kept greedily in
    descending prominence while every kept pair (of either kind) stays at least
    ``min_separation`` timepoints apart, and at most ``top_n`` of each kind survive.
    ``min_prominence`` defaults to half the arc's population standard deviation.
    """
    is_arc = isinstance(arc, EmotionalArc)
    a = np.asarray(arc.values if is_arc else arc, dtype=float)
    if a.size < 3:
        raise ShapeError("need at least 3 points to look for extrema")
    if min_prominence is None:
        min_prominence = 0.5 * float(a.std())
    stddev = arc.band_stddev if is_arc else None

    cands = []
    for kind, signal in ((Kind.PEAK, a), (Kind.VALLEY, -a)):
        idx = _strict_maxima(signal)
        if idx.size == 0:
            continue
        prom = peak_prominences(signal, idx)[0]
        cands.extend((float(p), int(i), kind) for i, p in zip(idx, prom) if p >= min_prominence)

    cands.sort(key=lambda c: (-c[0], c[1]))
    kept = []
    per_kind = {Kind.PEAK: 0, Kind.VALLEY: 0}
    for prom, i, kind in cands:
        if per_kind[kind] >= top_n:
            continue
        if any(abs(i - e.index) < min_separation for e in kept):
            continue
        kept.append(Extremum(i, kind, float(a[i]), prom,
                             None if stddev is None else float(stddev[i])))
        per_kind[kind] += 1
    return sorted(kept, key=lambda e: e.index)


def clip_window(extremum: Extremum, arc: EmotionalArc, clip_seconds: float = 30.0,
                duration_seconds: float | None = None) -> ClipWindow:
    """A ``clip_seconds`` window centred on the extremum, shifted to fit inside the video."""
    if not 0 <= extremum.index < len(arc):
        raise OutOfRange(f"extremum index {extremum.index} outside arc")
    if duration_seconds is None:
        duration_seconds = arc.time_at(len(arc) - 1) + 0.5 * arc.window_seconds
    centre = arc.time_at(extremum.index)
    start = centre - 0.5 * clip_seconds
    end = centre + 0.5 * clip_seconds
    if start < 0:
        start, end = 0.0, min(clip_seconds, duration_seconds)
    elif end > duration_seconds:
        start, end = max(0.0, duration_seconds - clip_seconds), duration_seconds
    cut = Cut.of(arc.modality, extremum.kind is Kind.PEAK)
    return ClipWindow(arc.video_id, float(start), float(end), cut)


def peakiness(a, i: int, r: int) -> tuple:
    """Left slope, right slope, left mean, right mean around index ``i`` with reach ``r``.

    Windows are inclusive: left is ``a[i-r .. i-1]``, right is ``a[i+1 .. i+r]``.
    """
    a = np.asarray(a.values if isinstance(a, EmotionalArc) else a, dtype=float)
    n = a.size
    if r < 2:
        raise OutOfRange(f"peakiness reach must be >= 2, got {r}")
    if i - r < 0 or i + r > n - 1:
        raise OutOfRange(f"window [{i - r}, {i + r}] leaves the arc [0, {n - 1}]")
    left = a[i - r:i]
    right = a[i + 1:i + r + 1]
    return (float(a[i - 1] - a[i - r]), float(a[i + r] - a[i + 1]),
            float(left.mean()), float(right.mean()))


def peakiness_reach(n: int, fraction: float = PEAKINESS_FRACTION) -> int:
    return max(2, round(fraction * n))


@dataclass(frozen=True, eq=False)
class MovieEmbedding:
    chunk_means: np.ndarray

    def __post_init__(self):
        v = np.array(self.chunk_means, dtype=float)
        if v.shape != (N_CHUNKS,) or not np.all(np.isfinite(v)):
            raise ShapeError("movie embedding must hold 10 finite values")
        v.setflags(write=False)
        object.__setattr__(self, "chunk_means", v)


def chunk_bounds(t: int, chunks: int = N_CHUNKS):
    return [(c * t // chunks, (c + 1) * t // chunks) for c in range(chunks)]


def movie_embedding(acts) -> MovieEmbedding:
    """Mean activation of each tenth of the film, reduced to one scalar per tenth."""
    mat = acts.activations if isinstance(acts, ActivationMatrix) else np.asarray(acts, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < N_CHUNKS:
        raise ShapeError(f"need a (T >= {N_CHUNKS}, D) matrix, got shape {mat.shape}")
    out = [mat[lo:hi].mean(axis=0).mean() for lo, hi in chunk_bounds(mat.shape[0])]
    return MovieEmbedding(np.array(out))


# ---------------------------------------------------------------- feature vectors

_PER_MODALITY = (
    "valence", "valence_minus_mean", "valence_over_max", "movie_mean", "movie_std",
    "left_slope", "right_slope", "left_mean", "right_mean",
)
PEAKINESS_NAMES = ("left_slope", "right_slope", "left_mean", "right_mean")

FEATURE_NAMES = tuple(
    f"{mod}_{name}" for mod in ("audio", "visual") for name in _PER_MODALITY
) + tuple(f"embedding_{c}" for c in range(N_CHUNKS))


@dataclass(frozen=True, eq=False)
class FeatureVector:
    clip_id: str
    values: np.ndarray  # ordered as FEATURE_NAMES

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(FEATURE_NAMES),):
            raise ShapeError(f"feature vector needs {len(FEATURE_NAMES)} entries, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ShapeError(f"{self.clip_id}: non-finite feature")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_NAMES.index(name)])

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.values.tolist()))


def _modality_features(arc: EmotionalArc, seconds: float, clamp: bool) -> list:
    a = arc.values
    n = a.size
    i = arc.index_at(seconds)
    r = peakiness_reach(n)
    if clamp:
        if n < 2 * r + 1:
            raise OutOfRange(f"{arc.video_id}: arc of {n} points too short for reach {r}")
        i = min(max(i, r), n - 1 - r)
    valence = float(a[arc.index_at(seconds)])
    mean = float(a.mean())
    peak = float(a.max())
    ratio = valence / peak if peak != 0 else 0.0
    return [valence, valence - mean, ratio, mean, float(a.std()), *peakiness(a, i, r)]


def clip_features(clip: ClipWindow, audio_arc: EmotionalArc, visual_arc: EmotionalArc,
                  embedding: MovieEmbedding, clip_id: str | None = None,
                  clamp: bool = True) -> FeatureVector:
    """Feature vector for one clip, evaluated at the clip midpoint of each arc."""
    t = clip.midpoint
    values = (_modality_features(audio_arc, t, clamp) + _modality_features(visual_arc, t, clamp)
              + list(embedding.chunk_means))
    return FeatureVector(clip_id or f"{clip.video_id}@{t:g}", np.array(values))


def write_features(vectors, path, extra: dict | None = None) -> None:
    _csvio.write_csv(path, extra, ["clip_id", *FEATURE_NAMES],
                     ([v.clip_id, *(_csvio.fmt(x) for x in v.values)] for v in vectors))


def load_features(path) -> list[FeatureVector]:
    rows = _csvio.csv_rows(_csvio.read_text(path))
    if not rows or tuple(rows[0][1:]) != FEATURE_NAMES:
        raise ParseError(f"{path}: feature columns do not match the frozen ordering")
    try:
        return [FeatureVector(r[0], np.array([float(x) for x in r[1:]])) for r in rows[1:]]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- clips file

CLIP_COLUMNS = ["clip_id", "video_id", "cut", "start_seconds", "end_seconds", "arc_value", "stddev_at"]


@dataclass(frozen=True)
class ClipRecord:
    clip_id: str
    window: ClipWindow
    arc_value: float
    stddev_at: float | None


def clip_id_for(video_id: str, cut: Cut, index: int) -> str:
    return f"{video_id}-{cut.value}-{index}"


def write_clips(records, path, extra: dict | None = None) -> None:
    rows = (
        [r.clip_id, r.window.video_id, r.window.cut.value, _csvio.fmt(r.window.start_seconds),
         _csvio.fmt(r.window.end_seconds), _csvio.fmt(r.arc_value),
         "" if r.stddev_at is None else _csvio.fmt(r.stddev_at)]
        for r in records
    )
    _csvio.write_csv(path, extra, CLIP_COLUMNS, rows)


def load_clips(path) -> list[ClipRecord]:
    rows = _csvio.csv_rows(_csvio.read_text(path))
    if not rows or rows[0] != CLIP_COLUMNS:
        raise ParseError(f"{path}: missing clips header")
    out = []
    for row in rows[1:]:
        cid, vid, cut, start, end, value, sd = row
        out.append(ClipRecord(cid, ClipWindow(vid, float(start), float(end), Cut(cut)),
                              float(value), float(sd) if sd else None))
    return out


def extract_clips(arc: EmotionalArc, clip_seconds: float = 30.0,
                  duration_seconds: float | None = None, top_n: int = 5,
                  min_prominence: float | None = None) -> list[ClipRecord]:
    """Default clip extraction for one smoothed arc (separation = one clip length)."""
    sep = max(1, round(clip_seconds / arc.timestep_seconds))
    records = []
    for e in find_extrema(arc, min_prominence, sep, top_n):
        w = clip_window(e, arc, clip_seconds, duration_seconds)
        records.append(ClipRecord(clip_id_for(arc.video_id, w.cut, e.index), w, e.value, e.stddev_at))
    return records
