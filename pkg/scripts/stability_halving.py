"""Perturbation-halving stability experiment at dt and dt/2.

Prints the final-distance ratio for eps vs eps/2 (linear response gives 2)
and the measured amplification constant C_meas = max_t d(t)/d(0).

    python scripts/stability_halving.py [--preset stability-pair] [--out runs/stability]
"""
import argparse
import dataclasses
from pathlib import Path

from degsw.config import preset_config
from degsw.experiments import fresh_dir, run_stability


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="stability-pair")
    ap.add_argument("--out", default="runs/stability")
    args = ap.parse_args()
    cfg = preset_config(args.preset)
    print("dt        halving_ratio  C_meas    C_meas(eps/2)")
    for dt in (cfg.dt, cfg.dt / 2):
        s = run_stability(dataclasses.replace(cfg, dt=dt), fresh_dir(Path(args.out) / f"dt={dt:g}"))
        print(f"{dt:8.2e}  {s['halving_ratio']:13.5f}  {s['C_meas']:8.5f}  {s['C_meas_half']:8.5f}")


if __name__ == "__main__":
    main()
