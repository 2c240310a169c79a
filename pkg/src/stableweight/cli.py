"""Command-line entry point.

Verbs:
  run <config>                 execute the experiment, write report files
  validate <config>            check the config, printing every problem
  gen-data <config> <out.csv>  write the repeat-0 synthetic training set
  weights <config> <out.csv>   learn and dump weights for inspection

Exit codes: 0 success, 1 config error, 2 partial failure (some cells failed).
The STABLEWEIGHT_THREADS environment variable sets the repeat-level thread
count (default 1).
"""

from __future__ import annotations

import argparse
import sys

from .datagen import save_dataset_csv
from .experiment import (
    ConfigError,
    config_digest,
    generate_train_dataset,
    learn_weights_only,
    run_experiment,
    validate_config,
)
from .reweight import effective_sample_size, save_weights_csv


def _load_or_exit(path: str):
    cfg, errors = validate_config(path)
    if errors:
        for err in errors:
            print(f"config error: {err}", file=sys.stderr)
        sys.exit(1)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_or_exit(args.config)
    summary = run_experiment(cfg, digest=config_digest(args.config))
    for method, stats in summary.aggregate.items():
        parts = [f"{key}={value:.4f}" for key, value in stats.items() if value is not None]
        print(f"{method}: " + " ".join(parts))
    if summary.failures:
        for rep, method, message in summary.failures:
            print(f"failed: repeat {rep}, {method}: {message}", file=sys.stderr)
        print(f"reports written to {summary.output_dir} (partial)", file=sys.stderr)
        return 2
    print(f"reports written to {summary.output_dir}")
    return 0


def _cmd_validate(args) -> int:
    cfg, errors = validate_config(args.config)
    if errors:
        for err in errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    print(f"ok: mode={cfg.mode} repeats={cfg.repeats} "
          f"methods={[m.name for m in cfg.methods]} output_dir={cfg.output_dir}")
    return 0


def _cmd_gen_data(args) -> int:
    cfg = _load_or_exit(args.config)
    try:
        ds = generate_train_dataset(cfg)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    save_dataset_csv(ds, args.out)
    print(f"wrote {ds.n} rows x {ds.p} covariates to {args.out}")
    return 0


def _cmd_weights(args) -> int:
    cfg = _load_or_exit(args.config)
    try:
        name, weights = learn_weights_only(cfg)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    save_weights_csv(weights, args.out)
    print(
        f"wrote {len(weights)} weights for {name} to {args.out} "
        f"(effective sample size {effective_sample_size(weights):.1f})"
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stableweight",
        description="Sample reweighting and weight averaging experiments "
        "under covariate shift",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    p_val.set_defaults(fn=_cmd_validate)

    p_gen = sub.add_parser("gen-data", help="write the synthetic training CSV")
    p_gen.add_argument("config")
    p_gen.add_argument("out")
    p_gen.set_defaults(fn=_cmd_gen_data)

    p_w = sub.add_parser("weights", help="write learned sample weights as CSV")
    p_w.add_argument("config")
    p_w.add_argument("out")
    p_w.set_defaults(fn=_cmd_weights)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
