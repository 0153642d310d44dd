"""Extended temporal convergence runs on the advection benchmark.

Separates time error from the spatial error floor: the same study with more
step counts, and again with a higher polynomial degree.

    python3 demos/convergence_diagnostics.py [--p 6] [--steps 8 16 32 64 128 256]
"""

from __future__ import annotations

import argparse
from dataclasses import replace

from shocktrack.cli import convergence_rows
from shocktrack.config import ConvergenceStudyConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=4)
    ap.add_argument("--n-elements", type=int, default=20)
    ap.add_argument("--steps", type=int, nargs="+", default=[8, 16, 32, 64, 128, 256])
    ap.add_argument("--schemes", nargs="+", default=["dirk1", "dirk2", "dirk3"])
    args = ap.parse_args()
    cfg = replace(ConvergenceStudyConfig(step_counts=tuple(args.steps)), p=args.p,
                  n_elements=args.n_elements, schemes=tuple(args.schemes)).validate()
    print("scheme\tn_steps\tl1_error\tshock_error\tl1_order\tshock_order")
    for r in convergence_rows(cfg):
        o, s = r["observed_order"], r["shock_observed_order"]
        print(f"{r['scheme']}\t{r['n_steps']}\t{r['l1_error']:.4e}\t{r['shock_error']:.4e}\t"
              f"{'' if o is None else f'{o:.3f}'}\t{'' if s is None else f'{s:.3f}'}", flush=True)


if __name__ == "__main__":
    main()
