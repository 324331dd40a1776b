#!/usr/bin/env python3
"""Phase-noise data: pair log-negativity along z with maps at two
distances, and the survival distance over a pump grid for three pump
linewidths."""

import argparse
from pathlib import Path

from wgarray.config import ExperimentConfig, validate
from wgarray.experiments import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/noise", help="output directory")
    ap.add_argument("--n-sites", type=int, default=257)
    ap.add_argument("--survival-sites", type=int, default=129,
                    help="lattice size for the survival sweep (trend runs)")
    ap.add_argument("--workers", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)

    cfg = ExperimentConfig(experiment="noise-evolution", g=1.0, gamma=1e-4,
                           pairs=((1, -1), (2, -2), (3, -3), (5, -5)),
                           z_values=(20.0, 60.0), z_max=120.0,
                           n_sites=args.n_sites, dz=0.02, sample_dz=0.25)
    validate(cfg)
    for path in run(cfg, out):
        print(f"wrote {path}")

    cfg = ExperimentConfig(experiment="survival-distance",
                           gamma_grid=(1e-4, 1e-3, 1e-2),
                           g_grid=(0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0),
                           z_max=400.0, n_sites=args.survival_sites, dz=0.02,
                           sample_dz=0.25, workers=args.workers)
    validate(cfg)
    for path in run(cfg, out):
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
