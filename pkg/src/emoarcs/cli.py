"""Command-line pipeline. Stages talk to each other only through files under ``--out``.

Corpus layout (``--corpus``)::

    <video_id>.<audio|visual>.series.csv   sentiment scores
    <video_id>.<audio|visual>.dropout.csv  optional dropout passes
    <video_id>.activations.csv             optional frame activations
    metadata.csv                           video metadata
    annotations.csv                        crowd ratings per clip
"""
from __future__ import annotations

import argparse
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from . import arc as arcmod
from . import cluster as clustermod
from . import evalstats, features, ingest, plots
from .config import RunConfig
from .errors import DataError, EmptySet, InvalidK
from .ingest import Modality
from .tsdist import DistanceConfig, write_distance_matrix

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class StageFailed(Exception):
    """Some inputs of a stage failed; the messages were already reported."""


def _provenance(cfg: RunConfig) -> dict:
    return {"tool": "emoarcs", "version": __version__, "config": cfg.digest(), "seed": cfg.seed}


def _comment(cfg: RunConfig) -> str:
    return " ".join(f"{k}={v}" for k, v in _provenance(cfg).items())


def _map(cfg: RunConfig, fn, items):
    if cfg.jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(fn, items))


def _out(cfg: RunConfig, *parts) -> Path:
    path = Path(cfg.out, *parts)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise DataError(f"missing {what}: {path}")
    return path


def _report(errors) -> None:
    for msg in errors:
        print(f"error: {msg}", file=sys.stderr)
    if errors:
        raise StageFailed(len(errors))


def _series_paths(cfg: RunConfig, modality: str | None = None) -> list[Path]:
    pattern = f"*.{modality}.series.csv" if modality else "*.series.csv"
    paths = sorted(Path(cfg.corpus).glob(pattern))
    if not paths:
        raise DataError(f"no series files matching {pattern} in {cfg.corpus}")
    return paths


def _band_for(series, cfg: RunConfig, path: Path):
    dp = path.with_name(ingest.dropout_filename(series.video_id, series.modality))
    if not dp.exists():
        return None
    return arcmod.aggregate_dropout(ingest.load_dropout(dp, series.video_id, series.modality),
                                    cfg.confidence_multiplier)


def _metas(cfg: RunConfig, required: bool = False) -> list:
    path = Path(cfg.corpus, "metadata.csv")
    if not path.exists():
        if required:
            raise DataError(f"missing metadata file: {path}")
        return []
    return ingest.load_metadata(path)


# ---------------------------------------------------------------- stages

def cmd_smooth(cfg: RunConfig, args) -> None:
    prov = _provenance(cfg)

    def work(path):
        try:
            series = ingest.load_series(path)
            band = _band_for(series, cfg, path)
            arc = arcmod.build_arc(series, cfg.smoothing_fraction, cfg.resample_length, True, band)
            arcmod.write_arc(arc, _out(cfg, "arcs", arcmod.arc_filename(series.video_id, series.modality)), prov)
            return None
        except (DataError, OSError) as exc:
            return f"{path.name}: {exc}"

    _report([e for e in _map(cfg, work, _series_paths(cfg)) if e])


def _load_cluster_arcs(cfg: RunConfig) -> list:
    paths = sorted(Path(cfg.out, "arcs").glob(f"*.{cfg.modality}.arc.csv"))
    if not paths:
        raise DataError(f"missing arcs: no {cfg.modality} arc files in {Path(cfg.out, 'arcs')} (run 'smooth')")
    arcs = [arcmod.load_arc(p) for p in paths]
    metas = {m.video_id: m for m in _metas(cfg)}
    if metas:
        arcs = [a for a in arcs if a.video_id not in metas
                or metas[a.video_id].duration_seconds <= cfg.max_duration(metas[a.video_id].corpus)]
    return arcs


def _k_values(cfg: RunConfig, args) -> list:
    if getattr(args, "k", None) is not None:
        return [args.k]
    lo, hi = args.k_range if getattr(args, "k_range", None) else (cfg.k_min, cfg.k_max)
    if lo > hi:
        raise InvalidK(f"empty k range {lo}..{hi}")
    return list(range(lo, hi + 1))


def _cluster_common(cfg: RunConfig, args, write_models: bool) -> None:
    arcs = _load_cluster_arcs(cfg)
    ks = _k_values(cfg, args)
    if ks[0] < 1 or ks[-1] > len(arcs):
        raise InvalidK(f"k must lie in [1, {len(arcs)}] for this corpus (after duration filter), got {ks[-1] if ks[-1] > len(arcs) else ks[0]}")
    dcfg = DistanceConfig(cfg.reach_fraction, cfg.resample_length)
    prov = _provenance(cfg)
    dist = clustermod.pairwise(arcs, dcfg, jobs=cfg.jobs)
    write_distance_matrix(dist, _out(cfg, "distances.csv"), dcfg, prov)
    curve, models = clustermod.elbow(arcs, ks, dcfg, cfg.seed, cfg.n_init, cfg.max_iter,
                                     distances=dist, return_models=True)
    if write_models:
        for k, model in models.items():
            stem = f"k{k}"
            clustermod.write_clusters(model, _out(cfg, "clusters", f"{stem}.clusters.csv"),
                                      _out(cfg, "clusters", f"{stem}.clusters.json"), prov)
            plots.medoid_svg([arcs[m].values for m in model.medoid_indices],
                             _out(cfg, "clusters", f"{stem}.medoids.svg"), _comment(cfg),
                             [f"cluster {c}: {vid}" for c, vid in enumerate(model.medoid_video_ids)])
    if len(ks) > 1 or not write_models:
        clustermod.write_elbow(curve, _out(cfg, "elbow.csv"), prov)
        plots.elbow_svg(curve.ks, curve.wcds, _out(cfg, "elbow.svg"), _comment(cfg))


def cmd_cluster(cfg: RunConfig, args) -> None:
    _cluster_common(cfg, args, write_models=True)


def cmd_elbow(cfg: RunConfig, args) -> None:
    _cluster_common(cfg, args, write_models=False)


def cmd_clips(cfg: RunConfig, args) -> None:
    durations = {m.video_id: m.duration_seconds for m in _metas(cfg)}

    def work(path):
        try:
            series = ingest.load_series(path)
            arc = arcmod.build_arc(series, cfg.smoothing_fraction, None, False, _band_for(series, cfg, path))
            return features.extract_clips(arc, cfg.clip_seconds, durations.get(series.video_id), cfg.top_n), None
        except (DataError, OSError) as exc:
            return [], f"{path.name}: {exc}"

    results = _map(cfg, work, _series_paths(cfg))
    _report([e for _, e in results if e])
    records = [r for recs, _ in results for r in recs]
    features.write_clips(records, _out(cfg, "clips.csv"), _provenance(cfg))


def _annotations(cfg: RunConfig, args) -> list:
    path = Path(args.annotations) if getattr(args, "annotations", None) else Path(cfg.corpus, "annotations.csv")
    records = ingest.load_annotations(_require(path, "annotations file"))
    if not records:
        raise EmptySet(f"{path}: no annotation records")
    return records


def cmd_precision(cfg: RunConfig, args) -> None:
    records = _annotations(cfg, args)
    rows = evalstats.precision_report_rows(records, _metas(cfg), cfg.bucket_edges)
    evalstats.write_precision_report(rows, _out(cfg, "precision.csv"), _provenance(cfg))


def cmd_combined_fit(cfg: RunConfig, args) -> None:
    records = _annotations(cfg, args)
    if not args.keep_ambiguous:
        records = [r for r in records
                   if evalstats.classify_clip(r.ratings).polarity is not evalstats.Polarity.AMBIGUOUS]
    clips = {c.clip_id: c for c in features.load_clips(_require(Path(cfg.out, "clips.csv"), "clips file (run 'clips')"))}
    missing = [r.clip_id for r in records if r.clip_id not in clips]
    if missing:
        raise DataError(f"annotated clips not in clips.csv: {', '.join(missing[:5])}")
    corpus = Path(cfg.corpus)
    cache = {}

    def video_inputs(vid):
        if vid not in cache:
            arcs = []
            for mod in (Modality.AUDIO, Modality.VISUAL):
                path = _require(corpus / ingest.series_filename(vid, mod), f"{mod.value} series")
                arcs.append(arcmod.build_arc(ingest.load_series(path), cfg.smoothing_fraction, None, False))
            acts = ingest.load_activations(_require(corpus / ingest.activations_filename(vid), "activations"), vid)
            cache[vid] = (*arcs, features.movie_embedding(acts))
        return cache[vid]

    vectors = []
    for r in records:
        audio, visual, emb = video_inputs(r.video_id)
        vectors.append(features.clip_features(clips[r.clip_id].window, audio, visual, emb, r.clip_id))
    prov = _provenance(cfg)
    features.write_features(vectors, _out(cfg, "features.csv"), prov)
    fit = evalstats.combined_valence_fit(vectors, evalstats.mean_ratings(records),
                                         [r.cut for r in records], tuple(args.drop))
    evalstats.write_regression(fit.regression, _out(cfg, "combined_fit.csv"), prov)
    rows = [("all", fit.precision.correct, fit.precision.total, fit.precision.value)]
    rows += [(f"cut:{c.value}", p.correct, p.total, p.value) for c, p in fit.by_cut.items()]
    evalstats.write_precision_report(rows, _out(cfg, "combined_precision.csv"), prov)


_K_FILE = re.compile(r"k(\d+)\.clusters\.csv$")


def cmd_engage(cfg: RunConfig, args) -> None:
    metas = _metas(cfg, required=True)
    files = sorted(Path(cfg.out, "clusters").glob("k*.clusters.csv"),
                   key=lambda p: int(_K_FILE.search(p.name).group(1)))
    if not files:
        raise DataError(f"missing cluster files in {Path(cfg.out, 'clusters')} (run 'cluster')")
    prov = _provenance(cfg)
    for path in files:
        k = int(_K_FILE.search(path.name).group(1))
        assignments = clustermod.load_assignments(path)
        subset = [m for m in metas if m.video_id in assignments]
        result = evalstats.engagement_run(subset, {k: assignments}, log1p=cfg.log1p)[k]
        evalstats.write_regression(result, _out(cfg, "engagement", f"k{k}.csv"), prov)


def cmd_validate(cfg: RunConfig, args) -> None:
    corpus = Path(cfg.corpus)
    errors = []
    checks = [(p, ingest.load_series) for p in sorted(corpus.glob("*.series.csv"))]
    checks += [(p, ingest.load_dropout) for p in sorted(corpus.glob("*.dropout.csv"))]
    checks += [(p, ingest.load_activations) for p in sorted(corpus.glob("*.activations.csv"))]
    for name, loader in (("metadata.csv", ingest.load_metadata), ("annotations.csv", ingest.load_annotations)):
        if (corpus / name).exists():
            checks.append((corpus / name, loader))
    if not checks:
        raise DataError(f"no input files found in {corpus}")
    for path, loader in checks:
        try:
            loader(path)
        except (DataError, OSError) as exc:
            errors.append(f"{path.name}: {exc}")
    _report(errors)
    print(f"ok: {len(checks)} files valid")


COMMANDS = {
    "smooth": (cmd_smooth, "smooth, resample and z-normalise every series into arc files"),
    "cluster": (cmd_cluster, "k-medoids clustering of arcs; cluster files, medoid SVGs, elbow CSV"),
    "elbow": (cmd_elbow, "within-cluster distance against k"),
    "clips": (cmd_clips, "extract peak/valley clip windows"),
    "precision": (cmd_precision, "precision of annotated clips (all scopes)"),
    "combined-fit": (cmd_combined_fit, "fit the combined audio-visual valence regression"),
    "engage": (cmd_engage, "regress comment counts on metadata and cluster membership per k"),
    "validate": (cmd_validate, "check every input file in the corpus"),
}


def _global_flags(parser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON file with RunConfig fields")
    parser.add_argument("--seed", type=int, default=default)
    parser.add_argument("--jobs", type=int, default=default)
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--corpus", default=default, help="input corpus directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emoarcs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"emoarcs {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        if name in ("cluster", "elbow"):
            group = p.add_mutually_exclusive_group()
            if name == "cluster":
                group.add_argument("--k", type=int)
            group.add_argument("--k-range", type=int, nargs=2, metavar=("LO", "HI"))
        if name in ("precision", "combined-fit"):
            p.add_argument("--annotations", help="annotations CSV (default: <corpus>/annotations.csv)")
        if name == "combined-fit":
            p.add_argument("--drop", action="append", default=[],
                           help="ablate a feature group (peakiness, movie-embedding) or a feature")
            p.add_argument("--keep-ambiguous", action="store_true")
    return parser


def make_config(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in ("seed", "jobs", "out", "corpus")}
    if getattr(args, "config", None):
        return RunConfig.from_file(args.config, **overrides)
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        COMMANDS[args.command][0](cfg, args)
    except StageFailed:
        return EXIT_DATA
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
