"""Emotional arcs: Hann smoothing, z-normalisation, resampling, dropout bands."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _csvio
from .errors import (DegenerateSeries, InvalidTarget, InvalidWindow, ParseError,
                     RangeError, ShapeError)
from .ingest import DropoutSamples, Modality, SentimentSeries

DEFAULT_RESAMPLE = 500
ZNORM_TOL = 1e-9
_STD_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EmotionalArc:
    video_id: str
    modality: Modality
    values: np.ndarray
    smoothing_fraction: float = 0.0
    znormed: bool = False
    resampled_to: int | None = None
    lower_band: np.ndarray | None = None
    upper_band: np.ndarray | None = None
    timestep_seconds: float = 1.0
    window_seconds: float = 0.0
    # band half-width before the multiplier is applied, in the arc's own units
    band_stddev: np.ndarray | None = None
    band_multiplier: float = 1.0
    transforms: tuple = ()

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1 or values.size < 1:
            raise ShapeError(f"{self.video_id}: arc values must be a non-empty vector")
        if not np.all(np.isfinite(values)):
            raise RangeError(f"{self.video_id}: non-finite arc value")
        object.__setattr__(self, "values", values)
        for name in ("lower_band", "upper_band", "band_stddev"):
            band = getattr(self, name)
            if band is not None:
                band = _frozen(band)
                if band.shape != values.shape:
                    raise ShapeError(f"{self.video_id}: {name} length differs from values")
                object.__setattr__(self, name, band)
        if (self.lower_band is None) != (self.upper_band is None):
            raise ShapeError(f"{self.video_id}: bands come in pairs")

    def __len__(self):
        return self.values.size

    def time_at(self, index: int) -> float:
        """Centre time, in seconds, of timepoint ``index``."""
        return index * self.timestep_seconds + 0.5 * self.window_seconds

    def index_at(self, seconds: float) -> int:
        i = int(round((seconds - 0.5 * self.window_seconds) / self.timestep_seconds))
        return min(max(i, 0), len(self) - 1)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def arc_from_series(series: SentimentSeries) -> EmotionalArc:
    """Unsmoothed arc carrying the raw scores."""
    return EmotionalArc(
        series.video_id, series.modality, series.values,
        timestep_seconds=series.timestep_seconds,
        window_seconds=series.window_seconds,
    )


def hann_kernel(w: int) -> np.ndarray:
    """Strictly positive Hann window of ``w`` taps, normalised to unit sum."""
    if int(w) != w or w < 1:
        raise InvalidWindow(f"window must be an integer >= 1, got {w!r}")
    w = int(w)
    i = np.arange(1, w + 1)
    k = 0.5 * (1.0 - np.cos(2.0 * np.pi * i / (w + 1)))
    k = k / k.sum()
    # enforce exact symmetry against cos rounding
    return 0.5 * (k + k[::-1])


def window_length(fraction: float, n: int) -> int:
    return max(1, round(fraction * n))


def convolve_normalized(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Kernel-weighted local average; at the edges the kernel is truncated and renormalised."""
    w = kernel.size
    if w == 1:
        return np.array(x, dtype=float)
    lead = (w - 1) // 2
    full = np.convolve(x, kernel)
    mass = np.convolve(np.ones_like(x), kernel)
    sl = slice(lead, lead + x.size)
    return full[sl] / mass[sl]


def smooth(series, fraction: float) -> EmotionalArc:
    """Smooth a series (or arc) with a Hann window of ``round(fraction * n)`` taps."""
    arc = arc_from_series(series) if isinstance(series, SentimentSeries) else series
    if not 0.0 < fraction <= 1.0:
        raise InvalidWindow(f"smoothing fraction must be in (0, 1], got {fraction}")
    n = len(arc)
    w = window_length(fraction, n)
    if w > n:
        raise InvalidWindow(f"window {w} longer than series ({n})")
    kernel = hann_kernel(w)
    values = convolve_normalized(arc.values, kernel)
    # clamp rounding drift so the output stays a convex combination of the input
    values = np.clip(values, arc.values.min(), arc.values.max())
    stddev = None if arc.band_stddev is None else convolve_normalized(arc.band_stddev, kernel)
    return _with_band(_replace_values(
        arc, values=values, smoothing_fraction=float(fraction),
        transforms=arc.transforms + (f"smooth(fraction={fraction},w={w})",),
    ), stddev)


def znorm(arc: EmotionalArc) -> EmotionalArc:
    """Zero mean, unit population standard deviation."""
    mean = arc.values.mean()
    std = arc.values.std()
    if not std > _STD_FLOOR:
        raise DegenerateSeries(f"{arc.video_id}: zero-variance arc cannot be z-normalised")
    values = (arc.values - mean) / std
    stddev = None if arc.band_stddev is None else arc.band_stddev / std
    return _with_band(_replace_values(
        arc, values=values, znormed=True,
        transforms=arc.transforms + ("znorm",),
    ), stddev)


def is_znormed(values, tol: float = ZNORM_TOL) -> bool:
    values = np.asarray(values, dtype=float)
    return abs(values.mean()) <= tol and abs(values.std() - 1.0) <= tol


def resample_values(values: np.ndarray, n_out: int) -> np.ndarray:
    n = values.size
    if n_out == n:
        return np.array(values, dtype=float)
    pos = np.arange(n_out) * ((n - 1) / (n_out - 1))
    out = np.interp(pos, np.arange(n), values)
    out[0], out[-1] = values[0], values[-1]
    return out


def resample(arc: EmotionalArc, n_out: int) -> EmotionalArc:
    """Linear interpolation onto ``n_out`` evenly spaced positions; endpoints kept exactly."""
    if int(n_out) != n_out or n_out < 2:
        raise InvalidTarget(f"resample length must be an integer >= 2, got {n_out!r}")
    n_out = int(n_out)
    n = len(arc)
    if n < 2:
        raise InvalidTarget(f"{arc.video_id}: cannot resample an arc of length {n}")
    values = resample_values(arc.values, n_out)
    stddev = None if arc.band_stddev is None else resample_values(arc.band_stddev, n_out)
    return _with_band(_replace_values(
        arc, values=values, resampled_to=n_out,
        # interpolation does not preserve moments
        znormed=arc.znormed and is_znormed(values),
        timestep_seconds=arc.timestep_seconds * (n - 1) / (n_out - 1),
        transforms=arc.transforms + (f"resample({n_out})",),
    ), stddev)


@dataclass(frozen=True, eq=False)
class UncertaintyBand:
    mean: np.ndarray
    stddev: np.ndarray
    multiplier: float = 1.0

    def __post_init__(self):
        mean, stddev = _frozen(self.mean), _frozen(self.stddev)
        if mean.shape != stddev.shape:
            raise ShapeError("mean and stddev lengths differ")
        if np.any(stddev < 0):
            raise RangeError("negative stddev")
        if not self.multiplier > 0:
            raise RangeError("multiplier must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "stddev", stddev)

    @property
    def lower(self) -> np.ndarray:
        return self.mean - self.multiplier * self.stddev

    @property
    def upper(self) -> np.ndarray:
        return self.mean + self.multiplier * self.stddev


def aggregate_dropout(samples, multiplier: float = 1.0) -> UncertaintyBand:
    """Per-timepoint mean and population standard deviation over dropout passes."""
    if isinstance(samples, DropoutSamples):
        mat = samples.samples
    else:
        try:
            mat = np.asarray(samples, dtype=float)
        except ValueError:
            raise ShapeError("ragged dropout matrix") from None
        if mat.ndim != 2:
            raise ShapeError("dropout samples must be a (passes, T) matrix")
        if mat.shape[0] < 2:
            raise ShapeError("need at least 2 dropout passes")
    mean = mat.mean(axis=0)
    stddev = np.sqrt(((mat - mean) ** 2).mean(axis=0))
    return UncertaintyBand(mean, stddev, float(multiplier))


def attach_band(arc: EmotionalArc, band: UncertaintyBand) -> EmotionalArc:
    """Attach a dropout band to an unsmoothed arc built from the same scores."""
    if band.stddev.size != len(arc):
        raise ShapeError(f"{arc.video_id}: band length {band.stddev.size} != arc length {len(arc)}")
    return _with_band(dataclasses.replace(arc, band_multiplier=band.multiplier), band.stddev)


def _replace_values(arc: EmotionalArc, **changes) -> EmotionalArc:
    # bands are rebuilt by _with_band once the new values exist
    return dataclasses.replace(arc, lower_band=None, upper_band=None, band_stddev=None, **changes)


def _with_band(arc: EmotionalArc, stddev) -> EmotionalArc:
    if stddev is None:
        return arc
    stddev = np.maximum(np.asarray(stddev, dtype=float), 0.0)
    half = arc.band_multiplier * stddev
    return dataclasses.replace(
        arc, band_stddev=stddev,
        lower_band=arc.values - half, upper_band=arc.values + half,
    )


def build_arc(series: SentimentSeries, fraction: float, resample_to: int | None = DEFAULT_RESAMPLE,
              normalize: bool = True, band: UncertaintyBand | None = None) -> EmotionalArc:
    """The fixed pipeline order: smooth -> resample -> znorm."""
    arc = arc_from_series(series)
    if band is not None:
        arc = attach_band(arc, band)
    arc = smooth(arc, fraction)
    if resample_to is not None:
        arc = resample(arc, resample_to)
    if normalize:
        arc = znorm(arc)
    return arc


# ---------------------------------------------------------------- arc files

def arc_filename(video_id: str, modality: Modality) -> str:
    return f"{video_id}.{modality.value}.arc.csv"


def write_arc(arc: EmotionalArc, path, extra: dict | None = None) -> None:
    head = {
        "video_id": arc.video_id,
        "modality": arc.modality.value,
        "fraction": float(arc.smoothing_fraction),
        "znormed": bool(arc.znormed),
        "resampled": arc.resampled_to,
        "step": float(arc.timestep_seconds),
        "window": float(arc.window_seconds),
    }
    head.update(extra or {})
    lines = [_csvio.header_line(head)]
    if arc.lower_band is None:
        lines.extend(_csvio.fmt(v) + "\n" for v in arc.values)
    else:
        for v, lo, hi in zip(arc.values, arc.lower_band, arc.upper_band):
            lines.append(f"{_csvio.fmt(v)},{_csvio.fmt(lo)},{_csvio.fmt(hi)}\n")
    Path(path).write_text("".join(lines))


def load_arc(path) -> EmotionalArc:
    path = Path(path)
    lines = _csvio.read_text(path).splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    head = _csvio.parse_header(lines[0])
    rows = _csvio.csv_rows("\n".join(lines[1:]))
    try:
        data = [[float(x) for x in row] for row in rows]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    widths = {len(r) for r in data}
    if not data or len(widths) != 1 or widths.pop() not in (1, 3):
        raise ParseError(f"{path}: rows must be 'value' or 'value,lower,upper'")
    data = np.array(data)
    parts = path.name.split(".")
    resampled = head.get("resampled", "none")
    lower = upper = None
    if data.shape[1] == 3:
        lower, upper = data[:, 1], data[:, 2]
    return EmotionalArc(
        video_id=head.get("video_id", parts[0]),
        modality=Modality(head.get("modality", parts[1] if len(parts) > 2 else "visual")),
        values=data[:, 0],
        smoothing_fraction=_csvio.parse_float(head.get("fraction", "0"), str(path)),
        znormed=_csvio.parse_bool(head.get("znormed", "false")),
        resampled_to=None if resampled == "none" else int(resampled),
        lower_band=lower,
        upper_band=upper,
        timestep_seconds=_csvio.parse_float(head.get("step", "1.0"), str(path)),
        window_seconds=_csvio.parse_float(head.get("window", "0.0"), str(path)),
    )
