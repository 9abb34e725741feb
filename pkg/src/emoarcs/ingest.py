"""Parsing, validation and persistence of everything that comes from outside.

File formats (all plain text):

* series      ``<video_id>.<modality>.series.csv``
              ``# video_id=<id>,modality=<audio|visual>,step=<float>,window=<float>``
              then one value per line.
* dropout     ``<video_id>.<modality>.dropout.csv``, ``# m=<int>,T=<int>``, m rows of T values.
* annotations ``clip_id,video_id,cut,ratings,source_stddev`` (ratings ``;``-joined).
* metadata    ``video_id,duration_seconds,year,comments,genres,corpus`` (genres ``;``-joined).
* activations ``# T=<int>,D=<int>``, T rows of D values.

Headers may carry extra keys (provenance); readers ignore keys they don't know.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _csvio
from .errors import EmptySeries, ParseError, RangeError, ShapeError


class Modality(enum.Enum):
    AUDIO = "audio"
    VISUAL = "visual"


class Corpus(enum.Enum):
    FILMS = "films"
    SHORTS = "shorts"


class Cut(enum.Enum):
    AUDIO_PEAK = "audio-peak"
    AUDIO_VALLEY = "audio-valley"
    VISUAL_PEAK = "visual-peak"
    VISUAL_VALLEY = "visual-valley"

    @property
    def is_peak(self) -> bool:
        return self in (Cut.AUDIO_PEAK, Cut.VISUAL_PEAK)

    @property
    def modality(self) -> Modality:
        return Modality.AUDIO if self in (Cut.AUDIO_PEAK, Cut.AUDIO_VALLEY) else Modality.VISUAL

    @classmethod
    def of(cls, modality: Modality, peak: bool) -> "Cut":
        return cls(f"{modality.value}-{'peak' if peak else 'valley'}")


# Default duration cut-offs, seconds.
MAX_DURATION = {Corpus.FILMS: 10000.0, Corpus.SHORTS: 1800.0}


def _parse_enum(cls, text, where):
    try:
        return cls(text.strip().lower())
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ParseError(f"{where}: {text!r} is not one of {allowed}") from None


def _check_unit_interval(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise RangeError(f"{what}: non-finite value")
    bad = np.flatnonzero((values < 0.0) | (values > 1.0))
    if bad.size:
        raise RangeError(f"{what}: value {values.flat[bad[0]]!r} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class SentimentSeries:
    video_id: str
    modality: Modality
    values: np.ndarray
    timestep_seconds: float = 1.0
    window_seconds: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ShapeError(f"{self.video_id}: series must be one-dimensional")
        if values.size < 2:
            raise EmptySeries(f"{self.video_id}: need at least 2 values, got {values.size}")
        _check_unit_interval(values, self.video_id)
        if not (self.timestep_seconds > 0 and math.isfinite(self.timestep_seconds)):
            raise RangeError(f"{self.video_id}: timestep must be positive")
        if not (self.window_seconds >= 0 and math.isfinite(self.window_seconds)):
            raise RangeError(f"{self.video_id}: window must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class DropoutSamples:
    video_id: str
    modality: Modality
    samples: np.ndarray  # (m_passes, T)

    def __post_init__(self):
        try:
            samples = np.asarray(self.samples, dtype=float)
        except ValueError:
            raise ShapeError(f"{self.video_id}: ragged dropout matrix") from None
        if samples.ndim != 2:
            raise ShapeError(f"{self.video_id}: dropout samples must be a matrix")
        if samples.shape[0] < 2:
            raise ShapeError(f"{self.video_id}: need at least 2 dropout passes")
        _check_unit_interval(samples, self.video_id)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def m_passes(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    duration_seconds: float
    year: int
    comments: int
    genres: frozenset = field(default_factory=frozenset)
    corpus: Corpus = Corpus.SHORTS

    def __post_init__(self):
        if not (self.duration_seconds > 0 and math.isfinite(self.duration_seconds)):
            raise RangeError(f"{self.video_id}: duration must be positive")
        if self.comments < 0:
            raise RangeError(f"{self.video_id}: negative comment count")
        object.__setattr__(self, "genres", frozenset(self.genres))


@dataclass(frozen=True)
class AnnotationRecord:
    clip_id: str
    video_id: str
    cut: Cut
    ratings: tuple
    source_stddev: float | None = None

    def __post_init__(self):
        ratings = tuple(int(r) for r in self.ratings)
        if not ratings:
            raise RangeError(f"{self.clip_id}: no ratings")
        for r in ratings:
            if not 1 <= r <= 7:
                raise RangeError(f"{self.clip_id}: rating {r} outside 1..7")
        object.__setattr__(self, "ratings", ratings)
        if self.source_stddev is not None:
            if not (self.source_stddev >= 0 and math.isfinite(self.source_stddev)):
                raise RangeError(f"{self.clip_id}: stddev must be finite and >= 0")


@dataclass(frozen=True, eq=False)
class ActivationMatrix:
    video_id: str
    activations: np.ndarray  # (T_frames, D)

    def __post_init__(self):
        acts = np.asarray(self.activations, dtype=float)
        if acts.ndim != 2:
            raise ShapeError(f"{self.video_id}: activations must be a matrix")
        if acts.shape[0] < 10:
            raise ShapeError(f"{self.video_id}: need >= 10 frames, got {acts.shape[0]}")
        if not np.all(np.isfinite(acts)):
            raise RangeError(f"{self.video_id}: non-finite activation")
        acts.setflags(write=False)
        object.__setattr__(self, "activations", acts)


# ---------------------------------------------------------------- series

def _split_name(path: Path, suffix: str):
    """``v1.visual.series.csv`` -> ("v1", "visual")."""
    name = path.name
    if not name.endswith(suffix):
        return None, None
    stem = name[: -len(suffix)]
    if "." not in stem:
        return stem, None
    vid, mod = stem.rsplit(".", 1)
    return vid, mod


def load_series(path) -> SentimentSeries:
    path = Path(path)
    lines = _csvio.read_text(path).splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = _csvio.parse_header(lines[0])
    name_vid, name_mod = _split_name(path, ".series.csv")
    video_id = head.get("video_id", name_vid or path.stem)
    mod_text = head.get("modality", name_mod)
    if mod_text is None:
        raise ParseError(f"{path}: modality missing from header")
    modality = _parse_enum(Modality, mod_text, str(path))
    step = _csvio.parse_float(head.get("step", "1.0"), f"{path} step")
    window = _csvio.parse_float(head.get("window", "0.0"), f"{path} window")
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "," in text:
            raise ParseError(f"{path}:{lineno}: expected one value per line")
        values.append(_csvio.parse_float(text, f"{path}:{lineno}"))
    values = np.array(values, dtype=float)
    if values.size < 2:
        raise EmptySeries(f"{path}: need at least 2 values, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise RangeError(f"{path}: non-finite value")
    return SentimentSeries(video_id, modality, values, step, window)


def write_series(series: SentimentSeries, path, extra: dict | None = None) -> None:
    head = {
        "video_id": series.video_id,
        "modality": series.modality.value,
        "step": float(series.timestep_seconds),
        "window": float(series.window_seconds),
    }
    head.update(extra or {})
    body = "".join(_csvio.fmt(v) + "\n" for v in series.values)
    Path(path).write_text(_csvio.header_line(head) + body)


def series_filename(video_id: str, modality: Modality) -> str:
    return f"{video_id}.{modality.value}.series.csv"


# ---------------------------------------------------------------- dropout

def load_dropout(path, video_id: str | None = None, modality: Modality | None = None) -> DropoutSamples:
    path = Path(path)
    lines = _csvio.read_text(path).splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = _csvio.parse_header(lines[0])
    name_vid, name_mod = _split_name(path, ".dropout.csv")
    vid = video_id or name_vid or path.stem
    if modality is None:
        modality = _parse_enum(Modality, name_mod or "visual", str(path))
    rows = _csvio.csv_rows("\n".join(lines[1:]))
    try:
        samples = [[float(x) for x in row] for row in rows]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    lengths = {len(r) for r in samples}
    if len(lengths) > 1:
        raise ShapeError(f"{path}: ragged dropout matrix")
    if "m" in head and int(head["m"]) != len(samples):
        raise ShapeError(f"{path}: header says m={head['m']} but found {len(samples)} rows")
    if "T" in head and samples and int(head["T"]) != len(samples[0]):
        raise ShapeError(f"{path}: header says T={head['T']} but rows have {len(samples[0])} values")
    return DropoutSamples(vid, modality, np.array(samples, dtype=float))


def write_dropout(samples: DropoutSamples, path) -> None:
    m, t = samples.samples.shape
    _csvio.write_csv(
        path, {"m": m, "T": t}, None,
        ([_csvio.fmt(v) for v in row] for row in samples.samples),
    )


def dropout_filename(video_id: str, modality: Modality) -> str:
    return f"{video_id}.{modality.value}.dropout.csv"


# ---------------------------------------------------------------- annotations

ANNOTATION_COLUMNS = ["clip_id", "video_id", "cut", "ratings", "source_stddev"]


def load_annotations(path) -> list[AnnotationRecord]:
    path = Path(path)
    rows = _csvio.csv_rows(_csvio.read_text(path))
    if rows and rows[0] and rows[0][0].strip() == "clip_id":
        rows = rows[1:]
    records = []
    for n, row in enumerate(rows, start=1):
        where = f"{path} row {n}"
        if len(row) not in (4, 5):
            raise ParseError(f"{where}: expected 4 or 5 columns, got {len(row)}")
        clip_id, video_id, cut_text, ratings_text = (c.strip() for c in row[:4])
        cut = _parse_enum(Cut, cut_text, where)
        try:
            ratings = tuple(int(r) for r in ratings_text.split(";") if r.strip())
        except ValueError:
            raise ParseError(f"{where}: bad ratings {ratings_text!r}") from None
        if not ratings:
            raise ParseError(f"{where}: no ratings")
        stddev = None
        if len(row) == 5 and row[4].strip():
            stddev = _csvio.parse_float(row[4].strip(), where)
        records.append(AnnotationRecord(clip_id, video_id, cut, ratings, stddev))
    return records


def write_annotations(records, path) -> None:
    rows = (
        [r.clip_id, r.video_id, r.cut.value, ";".join(str(x) for x in r.ratings),
         "" if r.source_stddev is None else _csvio.fmt(r.source_stddev)]
        for r in records
    )
    _csvio.write_csv(path, None, ANNOTATION_COLUMNS, rows)


# ---------------------------------------------------------------- metadata

META_COLUMNS = ["video_id", "duration_seconds", "year", "comments", "genres", "corpus"]


def load_metadata(path) -> list[VideoMeta]:
    path = Path(path)
    rows = _csvio.csv_rows(_csvio.read_text(path))
    if rows and rows[0] and rows[0][0].strip() == "video_id":
        rows = rows[1:]
    metas = []
    for n, row in enumerate(rows, start=1):
        where = f"{path} row {n}"
        if len(row) != 6:
            raise ParseError(f"{where}: expected 6 columns, got {len(row)}")
        vid, dur, year, comments, genres, corpus = (c.strip() for c in row)
        try:
            year_i, comments_i = int(year), int(comments)
        except ValueError:
            raise ParseError(f"{where}: year/comments must be integers") from None
        metas.append(VideoMeta(
            vid,
            _csvio.parse_float(dur, where),
            year_i,
            comments_i,
            frozenset(g.strip() for g in genres.split(";") if g.strip()),
            _parse_enum(Corpus, corpus, where),
        ))
    return metas


def write_metadata(metas, path) -> None:
    rows = (
        [m.video_id, _csvio.fmt(m.duration_seconds), m.year, m.comments,
         ";".join(sorted(m.genres)), m.corpus.value]
        for m in metas
    )
    _csvio.write_csv(path, None, META_COLUMNS, rows)


def filter_by_duration(metas, max_seconds: float) -> list[VideoMeta]:
    """Keep videos no longer than ``max_seconds``; order is preserved."""
    if not max_seconds > 0:
        raise RangeError("max_seconds must be positive")
    return [m for m in metas if m.duration_seconds <= max_seconds]


# ---------------------------------------------------------------- activations

def load_activations(path, video_id: str | None = None) -> ActivationMatrix:
    path = Path(path)
    lines = _csvio.read_text(path).splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = _csvio.parse_header(lines[0])
    rows = _csvio.csv_rows("\n".join(lines[1:]))
    try:
        acts = [[float(x) for x in row] for row in rows]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if len({len(r) for r in acts}) > 1:
        raise ShapeError(f"{path}: ragged activation matrix")
    if "T" in head and int(head["T"]) != len(acts):
        raise ShapeError(f"{path}: header says T={head['T']} but found {len(acts)} rows")
    if "D" in head and acts and int(head["D"]) != len(acts[0]):
        raise ShapeError(f"{path}: header says D={head['D']} but rows have {len(acts[0])} values")
    vid = video_id or head.get("video_id") or path.name.split(".")[0]
    if not acts:
        raise ShapeError(f"{path}: no activation rows")
    return ActivationMatrix(vid, np.array(acts, dtype=float))


def write_activations(acts: ActivationMatrix, path) -> None:
    t, d = acts.activations.shape
    _csvio.write_csv(
        path, {"T": t, "D": d}, None,
        ([_csvio.fmt(v) for v in row] for row in acts.activations),
    )


def activations_filename(video_id: str) -> str:
    return f"{video_id}.activations.csv"
