#!/usr/bin/env python3
"""Pairwise log-negativity maps at two distances (both mode structures)
and the stationary value of the (1, -1) and same-guide signal-idler pairs
over a pump grid."""

import argparse
from pathlib import Path

from wgarray.config import ExperimentConfig, validate
from wgarray.experiments import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/maps", help="output directory")
    ap.add_argument("--n-sites", type=int, default=257)
    ap.add_argument("--dz", type=float, default=0.01)
    ap.add_argument("--workers", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)

    cfg = ExperimentConfig(experiment="entangle-map", case="both", g=1.0,
                           z_values=(2.25, 7.5), n_sites=args.n_sites,
                           dz=args.dz)
    validate(cfg)
    for path in run(cfg, out):
        print(f"wrote {path}")

    grid = tuple(round(0.1 * k, 10) for k in range(2, 20))
    for case, pair, tag in (("degenerate", (1, -1), "deg"),
                            ("general", (0, 0), "gen_diag"),
                            ("general", (1, -1), "gen")):
        cfg = ExperimentConfig(experiment="stationary-sweep", case=case,
                               pair=pair, g_grid=grid, n_sites=args.n_sites,
                               dz=0.02, z_max=80.0, workers=args.workers)
        validate(cfg)
        for path in run(cfg, out / f"sweep_{tag}"):
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
