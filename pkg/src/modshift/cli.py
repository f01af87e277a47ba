"""Command-line entry point: ``modshift <subcommand> [--config PATH] [--out DIR] [--seed N] [--strict]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import corpus as C
from . import pipeline as P
from .synth import SynthSpec, write_bundle

STAGE_COMMANDS = {
    "ingest": ["ingest"],
    "lexshift": ["lexshift"],
    "embedshift": ["embedshift"],
    "graph": ["graph"],
    "mpr": ["mpr"],
    "earlydetect": ["earlydetect"],
    "run": None,
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modshift", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", type=Path, required=needs_config, help="pipeline config (INI)")
        p.add_argument("--out", type=Path, default=None, help="output directory (or $MODSHIFT_OUT)")
        p.add_argument("--seed", type=int, default=None, help="override the root seed")
        p.add_argument("--strict", action="store_true", help="abort on the first malformed record")

    common(sub.add_parser("validate", help="check config and input files"))
    s = sub.add_parser("synth", help="write a synthetic two-regime bundle")
    common(s, needs_config=False)
    for f in dataclasses.fields(SynthSpec):
        if f.type in ("int", "float") and f.name != "seed":
            s.add_argument("--" + f.name.replace("_", "-"), type=int if f.type == "int" else float, default=None)
    for name in STAGE_COMMANDS:
        common(sub.add_parser(name, help=f"run {'the full pipeline' if name == 'run' else 'the ' + name + ' stage'}"))
    return ap


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    env = os.environ.get("MODSHIFT_OUT")
    return Path(env) if env else Path("modshift-out")


def _load(args) -> P.PipelineConfig:
    cfg = P.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.strict:
        cfg.strict = True
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(SynthSpec)
                         if getattr(args, f.name, None) is not None}
            if args.seed is not None:
                overrides["seed"] = args.seed
            try:
                spec = SynthSpec(**overrides)
            except ValueError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return P.EXIT_INVALID
            out = write_bundle(spec, _out_dir(args))
            print(out / "pipeline.ini")
            return P.EXIT_OK

        cfg = _load(args)
        if args.command == "validate":
            cfg.validate()
            C.load_corpus(cfg.tweets, "tweets", strict=cfg.strict, window_length=cfg.end_index + 1)
            C.load_corpus(cfg.users, "users", strict=cfg.strict)
            C.load_keywords(cfg.keywords)
            print("ok")
            return P.EXIT_OK

        result = P.run_pipeline(cfg, _out_dir(args), STAGE_COMMANDS[args.command])
        for stage, state in result.manifest.get("stages", {}).items():
            print(f"{stage}: {state}")
        if "error" in result.manifest:
            print(f"error: {result.manifest['error']}", file=sys.stderr)
        return result.exit_code
    except (P.ConfigError, C.CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return P.EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return P.EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
