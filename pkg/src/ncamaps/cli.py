"""Command-line entry point.

Subcommands: dynamics | steady | spectrum | transmission | convergence | presets.
Exit codes: 0 full success, 2 partial (some sweep points diverged), 1 error.
"""

from __future__ import annotations

import argparse
import os
import sys

SYNOPSIS = (
    "usage: ncamaps {dynamics|steady|spectrum|transmission|convergence|presets} "
    "[--config PATH|PRESET] [--out DIR] [--workers N] [--method M[,M..]] [--alpha A[,A..]]"
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(SYNOPSIS, file=sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ncamaps", add_help=True)
    sub = parser.add_subparsers(dest="command")
    for name in ("dynamics", "steady", "spectrum", "transmission", "convergence"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path or preset name")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--method", default=None, help="comma list overriding the config methods")
        p.add_argument("--alpha", default=None, help="comma list overriding the config alphas")
    sub.add_parser("presets")
    return parser


def cli_entry(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        print(SYNOPSIS, file=sys.stderr)
        return 1
    if args.command == "presets":
        from .config import PRESETS

        for name in sorted(PRESETS):
            print(f"{name}: {PRESETS[name]}")
        return 0

    from .config import ConfigError, load_config, with_overrides

    try:
        cfg = load_config(args.config)
        cfg = with_overrides(
            cfg,
            method=args.method.split(",") if args.method else None,
            alpha=[float(a) for a in args.alpha.split(",")] if args.alpha else None,
            out_dir=args.out,
            workers=args.workers,
        )
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    from . import runner

    try:
        if args.command == "dynamics":
            manifest = runner.run_dynamics(cfg)
        elif args.command == "steady":
            manifest = runner.run_steady_sweep(cfg)
        elif args.command == "spectrum":
            manifest = runner.run_spectrum(cfg)
        elif args.command == "transmission":
            manifest = runner.run_transmission_map(cfg)
        else:  # convergence
            return _run_convergence(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for rec in manifest.records:
        print(f"{rec.kind} {rec.method} alpha={rec.alpha:g}: {rec.status} -> {rec.file}")
    return manifest.exit_code()


def _run_convergence(cfg) -> int:
    from .bath import BathSpec
    from .dynmaps import ModelSpec, convergence_study

    out_dir = cfg.outputs.resolved_directory()
    os.makedirs(out_dir, exist_ok=True)
    import numpy as np

    two_pi = 2.0 * np.pi
    dt_list = [d * two_pi for d in (0.2, 0.1, 0.05, 0.025)]
    t_max = min(cfg.grid.t_max, 50.0) * two_pi
    model = ModelSpec(delta=cfg.model.delta, epsilon=cfg.model.epsilon)
    spec = BathSpec(alpha=cfg.bath.alpha[0], temperature=cfg.bath.temperature)
    path = os.path.join(out_dir, "convergence.csv")
    with open(path, "w") as fh:
        fh.write("method,dt_coarse,dt_fine,sup_diff,order\n")
        for method in cfg.methods:
            study = convergence_study(method, model, spec, dt_list, t_max)
            for i, d in enumerate(study.sup_diffs):
                order = study.orders[i - 1] if i >= 1 else float("nan")
                fh.write(
                    f"{method},{dt_list[i] / two_pi:g},{dt_list[i + 1] / two_pi:g},"
                    f"{d:.6e},{order:.3f}\n"
                )
            print(f"{method}: sup diffs {study.sup_diffs} -> order {study.empirical_order:.2f}")
    print(f"wrote {path}")
    return 0


def main() -> None:
    # per-point numerics stay single threaded for determinism across runs
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, "1")
    sys.exit(cli_entry(sys.argv[1:]))


if __name__ == "__main__":
    main()
