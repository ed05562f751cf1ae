#!/usr/bin/env python3
"""Run the steady-state spectra preset (long-window regression runs)."""
import argparse
import sys

from ncamaps.config import preset, with_overrides
from ncamaps.runner import run_spectrum


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/spectra")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    cfg = with_overrides(preset("spectra"), out_dir=args.out, workers=args.workers)
    manifest = run_spectrum(cfg)
    for rec in manifest.records:
        print(f"{rec.method} alpha={rec.alpha:g}: {rec.status}")
    return manifest.exit_code()


if __name__ == "__main__":
    sys.exit(main())
