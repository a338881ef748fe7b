"""Command-line interface.

Verbs:
    run       Simulate one configuration and write CSV outputs.
    sweep     Run a grid of bath memories and hierarchy variants.
    validate  Execute the built-in self-checks against independent oracles.

Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 ensemble produced no accepted trajectories.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import ConfigError, RunConfig, parse_config, render_config, to_ensemble_config
from .ensemble import AllRejectedError, estimate_errors, run_ensemble
from .outputs import write_outputs

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_ALL_REJECTED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmqsd",
        description="Stochastic trajectory simulator for a spin coupled to a memory-bearing bath.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to a key = value configuration file")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--threads", type=int, help="worker process count (overrides threads)")
        p.add_argument("--seed", type=int, help="master seed (overrides master_seed)")

    run_p = sub.add_parser("run", help="simulate one configuration")
    add_common(run_p)

    sweep_p = sub.add_parser("sweep", help="run a bath-memory / variant grid")
    add_common(sweep_p)
    sweep_p.add_argument(
        "--gammas",
        default="0.2,0.4,0.8",
        help="comma-separated bath memory rates (default: 0.2,0.4,0.8)",
    )
    sweep_p.add_argument(
        "--variants",
        default="full",
        help=(
            "comma-separated hierarchy variants: full[:CAP], truncated:CAP, "
            "bar_O_zero, rwa (default: full)"
        ),
    )

    val_p = sub.add_parser("validate", help="run the oracle self-checks")
    val_p.add_argument("--quick", action="store_true", help="skip the slower statistical checks")
    return parser


def _load_config(args) -> RunConfig:
    text = ""
    if args.config:
        try:
            with open(args.config, "r") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config!r}: {exc}") from exc
    cfg = parse_config(text)
    overrides = {}
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    if getattr(args, "threads", None) is not None:
        overrides["threads"] = args.threads
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
        from .config import validate_config

        validate_config(cfg)
    return cfg


def _execute(cfg: RunConfig) -> int:
    result = run_ensemble(to_ensemble_config(cfg))
    errors = None
    if cfg.error_estimates:
        errors = estimate_errors(to_ensemble_config(cfg))
    paths = write_outputs(result, cfg.output_dir, config_text=render_config(cfg), error_estimates=errors)
    tag = f" [{cfg.label}]" if cfg.label else ""
    print(
        f"run{tag}: {result.metadata['accepted_count']}/{cfg.n_traj} trajectories accepted "
        f"(rejection rate {result.rejection_rate:.4f}), wrote {len(paths)} files to {cfg.output_dir}"
    )
    return EXIT_OK


def _parse_variant(token: str):
    """'full', 'full:40', 'truncated:10', 'bar_O_zero', 'rwa' -> overrides."""
    name, _, cap = token.partition(":")
    name = name.strip()
    overrides = {}
    if name == "rwa":
        overrides["coupling_mode"] = "sigma_minus"
        overrides["hierarchy_mode"] = "full"
    elif name in ("full", "truncated", "bar_O_zero"):
        overrides["hierarchy_mode"] = name
    else:
        raise ConfigError(f"unknown sweep variant {token!r}")
    if cap:
        try:
            overrides["n_max"] = int(cap)
        except ValueError as exc:
            raise ConfigError(f"variant {token!r}: cap must be an integer") from exc
    elif name == "truncated":
        raise ConfigError(f"variant {token!r}: truncated requires an explicit cap, e.g. truncated:10")
    return name, overrides


def _cmd_sweep(args) -> int:
    base = _load_config(args)
    try:
        gammas = [float(g) for g in args.gammas.split(",") if g.strip()]
    except ValueError as exc:
        raise ConfigError(f"--gammas: {exc}") from exc
    if not gammas:
        raise ConfigError("--gammas: need at least one value")
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    if not variants:
        raise ConfigError("--variants: need at least one variant")

    from .config import validate_config

    status = EXIT_OK
    for gamma in gammas:
        for token in variants:
            name, overrides = _parse_variant(token)
            subdir = f"gamma{gamma:g}_{name}"
            if "n_max" in overrides:
                subdir += f"_N{overrides['n_max']}"
            cfg = dataclasses.replace(
                base,
                gamma=gamma,
                label=subdir,
                output_dir=os.path.join(base.output_dir, subdir),
                **overrides,
            )
            validate_config(cfg)
            try:
                _execute(cfg)
            except AllRejectedError as exc:
                print(f"run [{subdir}]: {exc}", file=sys.stderr)
                status = EXIT_ALL_REJECTED
    return status


def _cmd_validate(args) -> int:
    from .validation import ALL_CHECKS

    checks = ALL_CHECKS
    if args.quick:
        checks = [c for c in checks if c.__name__ != "check_noise_statistics"]
    failed = 0
    for check in checks:
        result = check()
        status = "PASS" if result.passed else "FAIL"
        extra = f" ({result.detail})" if result.detail else ""
        print(f"{status}  {result.name}: measured {result.measured:.3e}, limit {result.limit:.3e}{extra}")
        failed += 0 if result.passed else 1
    if failed:
        print(f"{failed} check(s) failed", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"all {len(checks)} checks passed")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _execute(_load_config(args))
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_validate(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AllRejectedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_REJECTED
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
