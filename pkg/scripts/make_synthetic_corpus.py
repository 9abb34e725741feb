"""Write a seeded synthetic corpus that exercises every pipeline stage."""
import argparse

from emoarcs import synth


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("root")
    p.add_argument("--videos", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    info = synth.make_corpus(args.root, n_videos=args.videos, seed=args.seed)
    print(f"{len(info['metas'])} videos, {len(info['annotations'])} annotated clips -> {args.root}")


if __name__ == "__main__":
    main()
