"""Command-line interface.

Verbs: extract, train, eval, cv, tune-relief, synth, show-config. Exit code 0
on success; on failure a machine-readable ``ERROR <message>`` line goes to
stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, PipelineConfig, config_text, load_config
from .pipeline import PipelineError, run_cv, run_eval, run_extract, run_train, run_tune_relief
from .synth import SynthSpec, gen_synthetic


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI config file (defaults apply otherwise)")
    parser.add_argument("--corpus", dest="root", help="corpus root directory")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--modality", help="e.g. acoustic:M, behavioral, text:BOOL, visual")
    parser.add_argument("--model", help="svr | reptree | lstm | mean")
    parser.add_argument("--seed", type=int, help="run seed (mandatory)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phqreg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("extract", "extract per-session features for both splits"),
        ("train", "train the configured model on the training split"),
        ("eval", "evaluate the persisted model on the dev split"),
        ("tune-relief", "grid-tune Relief (threshold, k) by 3-fold CV"),
        ("synth", "generate a synthetic corpus"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "synth":
            p.add_argument("--n-train", type=int, dest="synth_n_train")
            p.add_argument("--n-dev", type=int, dest="synth_n_dev")
            p.add_argument("--synth-modalities", dest="synth_modalities",
                           help="space-separated subset of: transcript audio landmarks")

    p = sub.add_parser("cv", help="cross-validate on the training split")
    _add_common(p)
    p.add_argument("--scheme", choices=("kfold", "loso"), default="kfold")

    p = sub.add_parser("show-config", help="print the effective configuration")
    p.add_argument("--config", help="INI config file")
    return parser


_OVERRIDE_KEYS = (
    "root", "out_dir", "modality", "model", "seed",
    "synth_n_train", "synth_n_dev", "synth_modalities",
)


def _config_from_args(args) -> PipelineConfig:
    overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS if hasattr(args, k)}
    return load_config(getattr(args, "config", None), overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "show-config":
            cfg = load_config(args.config)
            print(config_text(cfg))
            return 0

        cfg = _config_from_args(args)
        if args.command == "synth":
            cfg.validate(need_seed=True)
            spec = SynthSpec(
                n_train=cfg.synth_n_train, n_dev=cfg.synth_n_dev,
                depressed_fraction_train=cfg.synth_depressed_fraction_train,
                depressed_fraction_dev=cfg.synth_depressed_fraction_dev,
                modalities=tuple(cfg.synth_modalities.split()),
                audio_rate=cfg.synth_audio_rate,
                landmark_fps=cfg.synth_landmark_fps,
                turn_pairs=cfg.synth_turn_pairs,
                fail_prob=cfg.synth_fail_prob,
            )
            summary = gen_synthetic(spec, cfg.root, cfg.seed)
            print(
                f"synth: {summary['n_train']} train ({summary['train_depressed']} depressed), "
                f"{summary['n_dev']} dev ({summary['dev_depressed']} depressed) -> {cfg.root}"
            )
            return 0

        cfg.validate(need_seed=True)
        if args.command == "extract":
            for path in run_extract(cfg):
                print(path)
        elif args.command == "train":
            print(run_train(cfg))
        elif args.command == "eval":
            rows = run_eval(cfg)
            for k, v in rows.items():
                print(f"{k} = {v}")
        elif args.command == "cv":
            rows = run_cv(cfg, args.scheme)
            for k, v in rows.items():
                print(f"{k} = {v}")
        elif args.command == "tune-relief":
            th, k = run_tune_relief(cfg)
            print(f"relief_threshold = {th}")
            print(f"relief_k = {k}")
        return 0
    except (ConfigError, PipelineError, ValueError, OSError, RuntimeError) as exc:
        print(f"ERROR {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
