"""``vibro generate|train|denoise|compare|run --config <json>``.

Exit codes: 0 success, 2 configuration or validation error, 3 runtime or
numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench.config import METHOD_TAGS, ExperimentConfig, load_config
from .bench.pipeline import (
    CHECKPOINT_FILE,
    dataset_file,
    run_all,
    run_compare,
    run_denoise,
    run_generate,
    run_train,
)
from .errors import ConfigError, VibroError
from .synth import build_manifest

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vibro", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (
        ("generate", "write the synthetic corpus and its manifest"),
        ("train", "grid-search loss weights and keep the best checkpoint"),
        ("denoise", "apply one method to every record of a dataset"),
        ("compare", "tune baselines on validation, evaluate all methods on test"),
        ("run", "generate, train and compare in one go"),
    ):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", help="experiment JSON (defaults apply when omitted)")
        s.add_argument("--out", help="output directory (overrides output_dir)")
        s.add_argument("--seed", type=int, help="global seed (overrides the config)")
        if name == "generate":
            s.add_argument("--dry-run", action="store_true", help="print the manifest summary without writing data")
        if name in ("train", "denoise", "compare"):
            s.add_argument("--dataset", help="dataset .bin (default: <out>/dataset.bin)")
        if name in ("denoise", "compare"):
            s.add_argument("--checkpoint", help="model checkpoint (default: <out>/model.ckpt)")
        if name == "denoise":
            s.add_argument("--method", required=True, help=f"one of: {', '.join(METHOD_TAGS)}")
            s.add_argument("--params", default="{}", help="baseline parameters as a JSON object")
            s.add_argument("--output", help="denoised .bin path (default: <out>/denoised_<method>.bin)")
    return p


def _resolve(args) -> tuple[ExperimentConfig, Path]:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        config = config.with_seed(args.seed)
    out = Path(args.out or config.output_dir)
    return config, out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)

    def log(msg: str) -> None:
        print(msg, flush=True)

    try:
        config, out = _resolve(args)
        dataset = Path(getattr(args, "dataset", None) or dataset_file(config, out))
        checkpoint = Path(getattr(args, "checkpoint", None) or out / CHECKPOINT_FILE)
        if args.command == "generate":
            if args.dry_run:
                manifest = build_manifest(config.dataset)
            else:
                manifest = run_generate(config, out, log)
            print(json.dumps({"shape": list(manifest.shape), "channels": manifest.channel_count,
                              "payload_sha256": manifest.payload_sha256}))
        elif args.command == "train":
            run_train(config, dataset, out, log)
        elif args.command == "denoise":
            if args.method not in METHOD_TAGS:
                raise ConfigError("method", f"unknown method {args.method!r}; valid: {', '.join(METHOD_TAGS)}")
            try:
                params = json.loads(args.params)
            except json.JSONDecodeError as exc:
                raise ConfigError("params", f"not valid JSON: {exc}") from exc
            output = Path(args.output or out / f"denoised_{args.method}.bin")
            run_denoise(config, dataset, args.method, output, checkpoint, params, log)
        elif args.command == "compare":
            run_compare(config, dataset, checkpoint, out, log)
        else:
            run_all(config, out, log)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (VibroError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
