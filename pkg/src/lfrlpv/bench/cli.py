"""Command-line entry point: ``python -m lfrlpv <subcommand>``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from ..errors import ConfigError, LfrLpvError, ParseError
from .io import atomic_write, csv_text, read_columns
from .pipeline import BenchmarkConfig, StageError, evaluate_models, run_pipeline
from .spectrum import export_spectrum

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PIPELINE = 0, 2, 3, 4

_OVERRIDES = {
    "estimation": str, "validation": str, "model": str, "input": str,
    "order": int, "delay": int, "num_order": int, "nl_degree": int, "tanh_neurons": int,
    "max_iter": int, "grad_mode": str, "transient_skip": int, "output_dir": str,
    "units": str,
}


def _add_config_args(p, pipelines=None):
    p.add_argument("--config", help="JSON config file")
    if pipelines:
        p.add_argument("--pipeline", choices=pipelines)
    for key, typ in _OVERRIDES.items():
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=typ)
    p.add_argument("--seed", type=int, default=None, help="default 1")


def build_parser():
    parser = argparse.ArgumentParser(prog="lfrlpv", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_config_args(sub.add_parser("identify", help="identify, embed and evaluate"),
                     ["wiener_hammerstein", "feedback_lfr"])
    _add_config_args(sub.add_parser("embed", help="embed a stored nonlinear LFR model"))
    _add_config_args(sub.add_parser("simulate", help="simulate a stored model on an input CSV"))
    _add_config_args(sub.add_parser("evaluate", help="RMSE table of a stored model document"))
    sp = sub.add_parser("spectrum", help="DFT magnitude of one CSV column")
    sp.add_argument("--input", required=True)
    sp.add_argument("--column", default="y")
    sp.add_argument("--transient-skip", dest="transient_skip", type=int, default=0)
    sp.add_argument("--output", required=True)
    return parser


def _config(args, pipeline):
    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    overrides["seed"] = args.seed
    if pipeline is not None:
        overrides["pipeline"] = pipeline
    if args.config:
        return BenchmarkConfig.from_file(args.config, **overrides)
    raw = {k: v for k, v in overrides.items() if v is not None}
    return BenchmarkConfig.from_dict(raw)


def _spectrum(args):
    cols = read_columns(args.input, (args.column,))
    spec = export_spectrum(cols[args.column], args.transient_skip)
    atomic_write(args.output, csv_text({"freq": spec.freqs, "magnitude": spec.magnitude}))
    print(f"Parseval relative error: {spec.parseval_rel_error:.3e}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "spectrum":
            _spectrum(args)
            return EXIT_OK
        pipeline = {"identify": getattr(args, "pipeline", None) or None,
                    "embed": "embed_only", "simulate": "simulate_only",
                    "evaluate": None}[args.command]
        if args.command == "identify" and pipeline is None and not args.config:
            pipeline = "wiener_hammerstein"
        if args.command == "evaluate":
            cfg = _config(args, "embed_only")
            result = evaluate_models(cfg)
        else:
            cfg = _config(args, pipeline)
            result = run_pipeline(cfg)
        if result.table:
            print(result.table)
        for name, path in sorted(result.files.items()):
            print(f"wrote {name}: {os.path.relpath(path)}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        code = EXIT_DATA if exc.stage in ("ingest", "load") else EXIT_PIPELINE
        print(f"error: {exc}", file=sys.stderr)
        return code
    except ParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LfrLpvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
