"""Run every built-in preset once and print a one-line summary per run.

    python scripts/run_presets.py [--out runs/presets] [--only smooth-small,...]
"""
import argparse
import json
import time
from pathlib import Path

from degsw.config import PRESETS, preset_config
from degsw.experiments import fresh_dir, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/presets")
    ap.add_argument("--only", help="comma separated preset names")
    args = ap.parse_args()
    names = args.only.split(",") if args.only else sorted(PRESETS)
    base = Path(args.out)
    print(f"{'preset':18s} {'conv':>5s} {'sweeps':>6s} {'max ratio':>9s} {'mass drift':>10s} {'min phi':>9s} {'sec':>6s}")
    for name in names:
        cfg = preset_config(name)
        t0 = time.perf_counter()
        out = fresh_dir(base / name)
        run(cfg, out)
        s = json.loads((out / "summary.json").read_text())
        ratios = [r for r in s["gamma_ratios"][1:] if r is not None]
        print(f"{name:18s} {str(s['converged']):>5s} {s['sweeps']:6d} "
              f"{max(ratios, default=float('nan')):9.3g} {s['conservation']['mass_drift']:10.2e} "
              f"{s['conservation']['positivity_min']:9.3g} {time.perf_counter() - t0:6.1f}")


if __name__ == "__main__":
    main()
