"""Command line interface.

Subcommands mirror the experiment kinds; every run writes ``report.json``
and ``samples.csv`` into the output directory.  A JSON config file holding
``ExperimentConfig`` fields can seed any subcommand via ``--config``;
explicit flags override file values.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import ConfigInvalidError, ExperimentConfig, generate_profile_file, run_experiment


def _parse_norm(text: str) -> tuple[str, float | None]:
    if text == "fro":
        return "frobenius", None
    if text == "max":
        return "max", None
    if text.startswith("p:"):
        return "p", float(text.split(":", 1)[1])
    raise ConfigInvalidError("norm_kind", f"expected fro, max or p:P, got {text!r}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes (default 1)")
    parser.add_argument("--rp", help="rp welfare mode: exact or sampled:M")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpmatch",
        description="Random-priority matching experiments and bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a profile CSV")
    gen.add_argument("--kind", choices=["uniform", "hard"], required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--eps", type=float, default=1e-6)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output CSV file")

    avg = sub.add_parser("avg", help="average-case ratio experiment")
    avg.add_argument("--n", type=int)
    avg.add_argument("--instances", type=int)
    _add_common(avg)

    smooth = sub.add_parser("smooth", help="smoothed ratio for one base profile")
    smooth.add_argument("--input", help="profile CSV to perturb")
    smooth.add_argument("--family", choices=["hard"], help="use a built-in family")
    smooth.add_argument("--n", type=int)
    smooth.add_argument("--sigma", type=float)
    smooth.add_argument("--norm", help="fro, max or p:P")
    smooth.add_argument("--perturbations", type=int)
    smooth.add_argument("--eps", type=float)
    smooth.add_argument("--c-wc", dest="c_wc", type=float)
    _add_common(smooth)

    bayes = sub.add_parser("bayes", help="ratio-of-expectations experiment")
    bayes.add_argument("--n", type=int)
    bayes.add_argument("--instances", type=int)
    _add_common(bayes)

    worst = sub.add_parser("worst", help="hard-family growth sweep")
    worst.add_argument("--sizes", help="comma-separated sizes, ascending")
    worst.add_argument("--eps", type=float)
    _add_common(worst)

    bounds = sub.add_parser("bounds", help="evaluate analytic bounds")
    bounds.add_argument("--n", type=int)
    bounds.add_argument("--sigma", type=float)
    bounds.add_argument("--c", type=float)
    bounds.add_argument("--c-wc", dest="c_wc", type=float)
    _add_common(bounds)

    return parser


_KIND_OF_COMMAND = {
    "avg": "average",
    "smooth": "smoothed",
    "bayes": "bayesian",
    "worst": "worstfamily",
    "bounds": "bounds",
}


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        data.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    data["kind"] = _KIND_OF_COMMAND[args.command]

    overrides = {
        "n": getattr(args, "n", None),
        "instances": getattr(args, "instances", None),
        "perturbations": getattr(args, "perturbations", None),
        "sigma": getattr(args, "sigma", None),
        "eps": getattr(args, "eps", None),
        "rp_mode": getattr(args, "rp", None),
        "seed": getattr(args, "seed", None),
        "out_dir": getattr(args, "out", None),
        "input": getattr(args, "input", None),
        "c": getattr(args, "c", None),
        "c_wc": getattr(args, "c_wc", None),
        "workers": getattr(args, "workers", None),
    }
    if getattr(args, "sizes", None):
        overrides["n"] = [int(tok) for tok in args.sizes.split(",")]
    if getattr(args, "norm", None):
        overrides["norm_kind"], overrides["p"] = _parse_norm(args.norm)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            generate_profile_file(args.kind, args.n, args.eps, args.seed, args.out)
            print(f"wrote {args.out}")
            return 0
        config = _config_from_args(args)
        body = run_experiment(config)
        out = Path(config.out_dir)
        print(f"wrote {out / 'report.json'} and {out / 'samples.csv'}")
        for est in body["estimates"]:
            mean = est.get("mean", est.get("ratio", est.get("slope")))
            print(f"  {est['name']}: {mean}")
        return 0
    except (ConfigInvalidError, json.JSONDecodeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
