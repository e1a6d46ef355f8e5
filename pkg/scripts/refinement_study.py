"""Time-step refinement of the converged Picard residuals, and the two Gamma metrics side by side.

The residual of the nonlinear system at the converged fixed point is a
discretization error, so it should shrink with dt. The second table runs the
same scenario with the weak (H1/L2/H1) and the stronger (H2 / L6+D1 / H2)
distance and prints the sweep-to-sweep contraction ratios of each.

    python scripts/refinement_study.py [--preset smooth-small] [--levels 3]
"""
import argparse
import math

from degsw.config import build_state, preset_config
from degsw.picard import picard_solve


def solve(cfg, dt, metric="picard"):
    sc = cfg.scenario
    return picard_solve(build_state(sc), sc.model, cfg.horizon, dt, tol=cfg.tol,
                        max_sweeps=cfg.max_sweeps, width=cfg.width, scheme=cfg.scheme, metric=metric)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="smooth-small")
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()
    cfg = preset_config(args.preset)

    print("dt        sweeps  res_phi    res_psi    res_u      (orders vs previous row)")
    prev = None
    for lvl in range(args.levels):
        dt = cfg.dt / 2 ** lvl
        _, tr = solve(cfg, dt)
        last = tr.sweeps[-1]
        res = (last.residual_phi, last.residual_psi, last.residual_u)
        orders = "" if prev is None else "  ".join(f"{math.log2(a / b):5.2f}" for a, b in zip(prev, res))
        print(f"{dt:8.2e}  {len(tr.sweeps):6d}  " + "  ".join(f"{r:9.3e}" for r in res) + f"  {orders}")
        prev = res

    print("\nmetric     sweeps  contraction ratios")
    for metric in ("picard", "stability"):
        _, tr = solve(cfg, cfg.dt, metric)
        print(f"{metric:9s}  {len(tr.sweeps):6d}  " + " ".join(f"{r:.3g}" for r in tr.ratios()))


if __name__ == "__main__":
    main()
