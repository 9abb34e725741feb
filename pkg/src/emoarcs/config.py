"""Run configuration shared by every CLI stage."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .ingest import MAX_DURATION, Corpus

# Fields that locate files or size the worker pool; they never change output bytes.
_NOT_HASHED = ("corpus", "out", "jobs")


@dataclass
class RunConfig:
    corpus: str = "."
    out: str = "out"
    smoothing_fraction: float = 0.1
    reach_fraction: float = 0.025
    resample_length: int = 500
    clip_seconds: float = 30.0
    max_duration_films: float = MAX_DURATION[Corpus.FILMS]
    max_duration_shorts: float = MAX_DURATION[Corpus.SHORTS]
    seed: int = 0
    n_init: int = 10
    max_iter: int = 100
    confidence_multiplier: float = 1.0
    modality: str = "visual"
    k_min: int = 2
    k_max: int = 10
    top_n: int = 5
    bucket_edges: list = field(default_factory=lambda: [0.0, 0.02, 0.04, 0.06, 0.08, 0.1])
    log1p: bool = False
    jobs: int = 1

    def __post_init__(self):
        for name in ("smoothing_fraction", "reach_fraction"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise DataError(f"{name} must lie in (0, 1], got {v}")
        if self.resample_length < 2:
            raise DataError("resample_length must be >= 2")
        if self.clip_seconds <= 0 or self.confidence_multiplier <= 0:
            raise DataError("clip_seconds and confidence_multiplier must be positive")
        if self.jobs < 1 or self.n_init < 1:
            raise DataError("jobs and n_init must be >= 1")

    def max_duration(self, corpus: Corpus) -> float:
        return self.max_duration_films if corpus is Corpus.FILMS else self.max_duration_shorts

    def digest(self) -> str:
        data = {k: v for k, v in dataclasses.asdict(self).items() if k not in _NOT_HASHED}
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)
