"""Command line entry point.

Subcommands mirror the experiment drivers:

    aztecenv lln --config cfg.json --out results/
    aztecenv annealed --config cfg.json --out results/ [--regime sqrt|M]
    aztecenv quenched --config cfg.json --out results/
    aztecenv gue-demo --config cfg.json --out results/
    aztecenv selftest

Configs are JSON or TOML; --seed and --threads override config values.
Outputs are CSV and JSON reports (plus optional SVG convergence plots).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiments import ExperimentConfig, run_annealed, run_experiment, run_selftest


def _add_common(p):
    p.add_argument("--config", required=True, help="JSON or TOML experiment config")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=None,
                   help="numba thread count (results do not depend on it)")
    p.add_argument("--plot", action="store_true", help="also emit an SVG line plot")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="aztecenv", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("lln", "annealed", "quenched", "gue-demo"):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "annealed":
            p.add_argument("--regime", choices=["sqrt", "M"], default=None,
                           help="override the regime implied by the config experiment")
    sub.add_parser("selftest")
    args = parser.parse_args(argv)

    if args.command == "selftest":
        return run_selftest()

    if args.threads is not None:
        import numba

        numba.set_num_threads(max(1, args.threads))

    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        raw = dict(cfg.raw)
        raw["seed"] = args.seed
        cfg = dataclasses.replace(cfg, seed=args.seed, raw=raw)

    expected = {"lln": "lln", "quenched": "quenched", "gue-demo": "gue-demo"}
    if args.command == "annealed":
        regime = args.regime or ("M" if cfg.experiment == "annealed-M" else "sqrt")
        if cfg.experiment not in (f"annealed-{regime}",):
            raise SystemExit(
                f"config experiment {cfg.experiment!r} does not match regime {regime!r}"
            )
        report = run_annealed(cfg, regime)
    else:
        if cfg.experiment != expected[args.command]:
            raise SystemExit(
                f"config experiment {cfg.experiment!r} does not match subcommand {args.command!r}"
            )
        report = run_experiment(cfg)
    report.write(args.out, plots=args.plot)
    worst = max((abs(r.z_score) for r in report.rows if r.z_score is not None), default=0.0)
    print(f"{report.experiment}: {len(report.rows)} rows -> {args.out}/ (worst |z| = {worst:.2f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
