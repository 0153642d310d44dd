"""Shu-Osher run with a configurable step count, compared with the FV oracle.

The default 110-step run fails in the first stage; 440 steps completes.
Roughly 7 minutes on one core for 440 steps.

    python3 demos/shu_osher_diagnostic.py --steps 440
"""

from __future__ import annotations

import argparse
import time

from shocktrack.errors import StageFailureError
from shocktrack.problems import shuosher
from shocktrack.reference import shu_osher_fv_oracle
from shocktrack.timeloop import run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=440)
    ap.add_argument("--t-final", type=float, default=1.1)
    ap.add_argument("--every", type=int, default=20, help="progress print interval in steps")
    args = ap.parse_args()
    setup = shuosher(n_steps=args.steps, t_final=args.t_final)
    t0 = time.perf_counter()

    def progress(n, t, u, x):
        if (n + 1) % args.every == 0:
            print(f"step {n + 1}\tt={t:.4f}\tshock={x[setup.mesh.shock_nodes][0]:.6f}\t"
                  f"{time.perf_counter() - t0:.0f}s", flush=True)

    try:
        rec = run(setup, callback=progress, record_every=args.steps)
    except StageFailureError as exc:
        print(f"failed at step {exc.report.step} stage {exc.report.stage}: {exc}")
        raise SystemExit(3)
    its = rec.iterations
    xs = rec.shock_positions[-1][0]
    fv = shu_osher_fv_oracle(rec.times[-1])
    err = abs(xs - fv.shock_position)
    print(f"SQP iterations per stage: mean {its.mean():.2f}, max {its.max()}")
    print(f"tracked shock {xs:.6f}, FV oracle {fv.shock_position:.6f}, FV cell width {fv.x[1] - fv.x[0]:.1e}")
    print(f"relative to position {err / abs(fv.shock_position):.3e}, "
          f"relative to displacement {err / abs(fv.shock_position + 4.0):.3e}")


if __name__ == "__main__":
    main()
