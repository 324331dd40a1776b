#!/usr/bin/env python3
"""Photon-number evolution data: profiles below/above threshold plus the
central-guide intensity curves (CSV output, plot-tool agnostic)."""

import argparse
from pathlib import Path

from wgarray.config import ExperimentConfig, validate
from wgarray.experiments import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/intensity", help="output directory")
    ap.add_argument("--n-sites", type=int, default=257)
    ap.add_argument("--dz", type=float, default=0.01)
    args = ap.parse_args()

    base = dict(n_sites=args.n_sites, dz=args.dz, sample_dz=0.05)
    for g in (1.5, 2.2):
        cfg = ExperimentConfig(experiment="intensity-profile", g=g,
                               z_values=(3.75,), **base)
        validate(cfg)
        out = Path(args.out) / f"profile_g{g:g}"
        for path in run(cfg, out):
            print(f"wrote {path}")

    cfg = ExperimentConfig(experiment="intensity-vs-z", g_grid=(1.5, 2.2),
                           z_max=3.75, **base)
    validate(cfg)
    for path in run(cfg, Path(args.out)):
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
