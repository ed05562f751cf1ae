#!/usr/bin/env python3
"""Run the relaxation-dynamics preset (all four methods over the alpha sweep)."""
import argparse
import sys

from ncamaps.config import preset, with_overrides
from ncamaps.runner import run_dynamics


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/fig2")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    cfg = with_overrides(preset("fig2"), out_dir=args.out, workers=args.workers)
    manifest = run_dynamics(cfg)
    for rec in manifest.records:
        print(f"{rec.method} alpha={rec.alpha:g}: {rec.status}")
    return manifest.exit_code()


if __name__ == "__main__":
    sys.exit(main())
