"""Command-line interface.

    nanolayer run --preset weak-field-strong-int [--backends bloch,nh2]
                  [--out DIR] [--override key=value ...]
    nanolayer run --config FILE [...]
    nanolayer presets
    nanolayer validate --config FILE

Exit codes: 0 success, 2 configuration error, 3 solver abort.
"""

from __future__ import annotations

import argparse
import sys

from .em import SolverAbortError
from .scenario import (
    PRESETS,
    ConfigError,
    config_from_items,
    execute,
    load_config,
    parse_config_text,
    preset,
)


def _parse_overrides(pairs):
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override must be key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nanolayer",
        description="1D Maxwell solver coupled to two-level emitters "
                    "(Bloch / NH1 / NH2 backends).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESETS)
    src.add_argument("--config", help="path to a key=value config file")
    run.add_argument("--backends", help="comma-separated backend list")
    run.add_argument("--out", help="output directory")
    run.add_argument("--override", action="append", metavar="KEY=VALUE",
                     help="override a config key (repeatable)")

    sub.add_parser("presets", help="list available presets")

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name in PRESETS:
                print(name)
            return 0

        if args.command == "validate":
            config = load_config(args.config)
            print(f"ok: config hash {config.config_hash()}")
            return 0

        overrides = _parse_overrides(args.override)
        if args.backends:
            overrides["run.backends"] = args.backends
        if args.out:
            overrides["run.output_dir"] = args.out
        if args.preset:
            config = preset(args.preset, overrides)
        else:
            items = parse_config_text(open(args.config).read())
            items.update(overrides)
            config = config_from_items(items)

        bundle = execute(config)
        print(f"wrote {bundle.out_dir} (config hash {config.config_hash()})")
        for backend, diag in bundle.records.items():
            d = diag.diagnostics
            print(f"  {backend}: {d['n_steps']} steps, "
                  f"{d['pole_events']} pole events, "
                  f"norm drift {d['norm_drift']:.2e}")
        return 0
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverAbortError as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
