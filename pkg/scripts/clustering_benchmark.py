"""Two-block SBM clustering with DGAE over several seeds (mean +- std).

    python3 scripts/clustering_benchmark.py --seeds 10
"""
import argparse

import numpy as np

from dgvae.experiments import clustering_run
from dgvae.metrics import mean_std


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=200)
    args = ap.parse_args()

    runs = [clustering_run(seed, iterations=args.iterations) for seed in range(args.seeds)]
    print("seed    acc     nmi   cut0    cut_final  cut_truth")
    for r in runs:
        print(f"{r.seed:4d}  {r.acc:.3f}  {r.nmi:.3f}  {r.cut_initial:.3f}  {r.cut_final:9.3f}  {r.cut_truth:9.3f}")
    for name in ("acc", "nmi"):
        m, s = mean_std([getattr(r, name) for r in runs])
        med = np.median([getattr(r, name) for r in runs])
        print(f"{name}: {m:.3f} +- {s:.3f} (median {med:.3f})")


if __name__ == "__main__":
    main()
