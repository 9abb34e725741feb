"""Run every CLI stage in order on one corpus and stop at the first failure."""
import argparse
import sys

from emoarcs import cli

STAGES = (["validate"], ["smooth"], ["cluster"], ["clips"], ["precision"], ["combined-fit"], ["engage"])


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("corpus")
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    common = ["--corpus", args.corpus, "--out", args.out, "--jobs", str(args.jobs), "--seed", str(args.seed)]
    for stage in STAGES:
        print("emoarcs", " ".join(stage), flush=True)
        code = cli.main(common + stage)
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
