"""Erdos-Renyi generation: Heatts DGAE vs the GCN-filter ablation vs edge density.

    python3 scripts/generation_benchmark.py --seeds 5
"""
import argparse

from dgvae.experiments import generation_run
from dgvae.metrics import mean_std


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--iterations", type=int, default=200)
    ap.add_argument("--similarity", default="dot-product", choices=("dot-product", "one-minus-mse"))
    args = ap.parse_args()

    runs = [generation_run(seed, iterations=args.iterations, similarity=args.similarity)
            for seed in range(args.seeds)]
    print("seed  nll_heatts  nll_gcn  nll_density  rmse_heatts  rmse_gcn  rmse_density")
    for r in runs:
        print(f"{r.seed:4d}  {r.nll_heatts:10.4f}  {r.nll_gcn:7.4f}  {r.nll_baseline:11.4f}  "
              f"{r.rmse_heatts:11.4f}  {r.rmse_gcn:8.4f}  {r.rmse_baseline:12.4f}")
    for field in ("nll_heatts", "nll_gcn", "nll_baseline", "rmse_heatts", "rmse_gcn", "rmse_baseline"):
        m, s = mean_std([getattr(r, field) for r in runs])
        print(f"{field}: {m:.4f} +- {s:.4f}")


if __name__ == "__main__":
    main()
