"""Per-dimension KL with and without the inner reconstruction loop.

    python3 scripts/collapse_diagnostic.py --seeds 10 --iterations 200
"""
import argparse

import numpy as np

from dgvae.experiments import collapse_run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=200)
    ap.add_argument("--inner", type=int, nargs="+", default=[0, 5])
    ap.add_argument("--threshold", type=float, default=0.01)
    args = ap.parse_args()

    for inner in args.inner:
        runs = [collapse_run(seed, inner, args.threshold, iterations=args.iterations)
                for seed in range(args.seeds)]
        kl = np.stack([r.kl_per_dim for r in runs])
        frac = np.mean([r.active_fraction for r in runs])
        print(f"inner_recon_steps={inner}: active fraction {frac:.3f}, "
              f"per-node KL {kl.sum(axis=1).mean():.3f}, per-dim KL range "
              f"[{kl.min():.4f}, {kl.max():.4f}]")


if __name__ == "__main__":
    main()
