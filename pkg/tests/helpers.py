"""Shared helpers for tests that drive the command line."""
from pathlib import Path

from emoarcs import cli

PIPELINE = (
    ["smooth"],
    ["cluster", "--k-range", "2", "10"],
    ["clips"],
    ["precision"],
    ["combined-fit"],
    ["engage"],
)


def run(corpus, out, *args, jobs=None, seed=None):
    argv = ["--corpus", str(corpus), "--out", str(out)]
    if jobs is not None:
        argv += ["--jobs", str(jobs)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    return cli.main(argv + list(args))


def run_pipeline(corpus, out, jobs=1, seed=0):
    codes = [run(corpus, out, *stage, jobs=jobs, seed=seed) for stage in PIPELINE]
    return codes


def snapshot(out) -> dict:
    """Relative path -> bytes for every file under ``out``."""
    out = Path(out)
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
