"""Seeded synthetic data: planted arc families and a small on-disk corpus."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import arc as arcmod
from . import features, ingest
from .ingest import (ActivationMatrix, AnnotationRecord, Corpus, DropoutSamples, Modality,
                     SentimentSeries, VideoMeta)

# Piecewise-linear shapes as (knot positions, knot values) on [0, 1].
TEMPLATES = {
    "rise-fall-rise": ((0.0, 0.3, 0.65, 1.0), (0.25, 0.75, 0.25, 0.75)),
    "rise-fall": ((0.0, 0.5, 1.0), (0.25, 0.75, 0.25)),
    "fall-rise": ((0.0, 0.5, 1.0), (0.75, 0.25, 0.75)),
}


def template(name: str, n: int) -> np.ndarray:
    knots, values = TEMPLATES[name]
    return np.interp(np.linspace(0.0, 1.0, n), knots, values)


def planted_series(seed: int, per_family: int = 30, sigma: float = 0.05,
                   length_range=(200, 400)):
    """Noisy copies of each template; returns ``(series, labels)``."""
    rng = np.random.default_rng(seed)
    series, labels = [], []
    for label, name in enumerate(TEMPLATES):
        for j in range(per_family):
            n = int(rng.integers(length_range[0], length_range[1] + 1))
            values = np.clip(template(name, n) + rng.normal(0.0, sigma, n), 0.0, 1.0)
            series.append(SentimentSeries(f"{name}-{j}", Modality.VISUAL, values))
            labels.append(label)
    return series, np.array(labels)


def planted_arcs(seed: int, per_family: int = 30, sigma: float = 0.05,
                 fraction: float = 0.1, resample_to: int = 500):
    series, labels = planted_series(seed, per_family, sigma)
    return [arcmod.build_arc(s, fraction, resample_to) for s in series], labels


# ---------------------------------------------------------------- corpus

AUDIO_STEP = 10.0
AUDIO_WINDOW = 20.0
GENRES = ("drama", "comedy", "romance", "animation", "documentary")


def _score_curve(rng, n: int) -> np.ndarray:
    name = list(TEMPLATES)[int(rng.integers(len(TEMPLATES)))]
    base = template(name, n)
    return np.clip(base + rng.normal(0.0, 0.08, n), 0.0, 1.0)


def make_corpus(root, n_videos: int = 50, seed: int = 0, fraction: float = 0.1,
                clip_seconds: float = 30.0) -> dict:
    """Write series, dropout, activations, metadata and annotations files under ``root``.

    Annotations reference the clip ids that the default clip extraction produces, so
    the corpus exercises every pipeline stage.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    metas, records = [], []
    for v in range(n_videos):
        vid = f"v{v:03d}"
        duration = float(rng.integers(120, 1950))
        n_vis = int(duration)
        visual = SentimentSeries(vid, Modality.VISUAL, _score_curve(rng, n_vis), 1.0, 0.0)
        n_aud = int((duration - AUDIO_WINDOW) // AUDIO_STEP) + 1
        audio_mean = _score_curve(rng, n_aud)
        spread = rng.uniform(0.0, 0.1, n_aud)
        passes = np.clip(audio_mean + spread * rng.standard_normal((8, n_aud)), 0.0, 1.0)
        audio = SentimentSeries(vid, Modality.AUDIO, passes.mean(axis=0), AUDIO_STEP, AUDIO_WINDOW)
        ingest.write_series(visual, root / ingest.series_filename(vid, Modality.VISUAL))
        ingest.write_series(audio, root / ingest.series_filename(vid, Modality.AUDIO))
        ingest.write_dropout(DropoutSamples(vid, Modality.AUDIO, passes),
                             root / ingest.dropout_filename(vid, Modality.AUDIO))
        frames = max(10, n_vis // 10)
        acts = rng.normal(rng.normal(0, 1), 1.0, (frames, 16))
        ingest.write_activations(ActivationMatrix(vid, acts), root / ingest.activations_filename(vid))
        genres = frozenset(rng.choice(GENRES, size=int(rng.integers(0, 3)), replace=False).tolist())
        metas.append(VideoMeta(vid, duration, int(rng.integers(2008, 2018)),
                               int(rng.integers(0, 400)), genres, Corpus.SHORTS))

        dropout = DropoutSamples(vid, Modality.AUDIO, passes)
        for series, band in ((audio, arcmod.aggregate_dropout(dropout)), (visual, None)):
            arc = arcmod.build_arc(series, fraction, resample_to=None, normalize=False, band=band)
            mean = arc.values.mean()
            for clip in features.extract_clips(arc, clip_seconds, duration):
                # raters agree with the arc more often than not
                signal = 6.0 * (clip.arc_value - mean)
                ratings = np.clip(np.rint(4.0 + signal + rng.normal(0.0, 1.5, 3)), 1, 7).astype(int)
                records.append(AnnotationRecord(clip.clip_id, vid, clip.window.cut,
                                                tuple(ratings.tolist()), clip.stddev_at))
    ingest.write_metadata(metas, root / "metadata.csv")
    ingest.write_annotations(records, root / "annotations.csv")
    return {"metas": metas, "annotations": records}
