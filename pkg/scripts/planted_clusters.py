"""Recover three planted arc families with k-medoids and report agreement per seed.

Prints one line per seed (adjusted Rand index, wcd at k=1 and k=3) and a summary.
"""
import argparse
import time

from sklearn.metrics import adjusted_rand_score

from emoarcs import cluster, synth


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--per-family", type=int, default=30)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--n-init", type=int, default=10)
    args = p.parse_args()

    start = time.perf_counter()
    hits = 0
    for seed in range(args.seeds):
        arcs, labels = synth.planted_arcs(seed, args.per_family, args.sigma)
        curve, models = cluster.elbow(arcs, (1, 3), seed=seed, n_init=args.n_init, return_models=True)
        ari = adjusted_rand_score(labels, models[3].assignments)
        hits += ari >= 0.9
        print(f"seed={seed:3d} ari={ari:.3f} wcd1={curve.wcd(1):.1f} wcd3={curve.wcd(3):.1f}")
    print(f"ARI >= 0.9 on {hits}/{args.seeds} seeds in {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
