"""Command-line entry point for the sweep and verification runners.

Subcommands: fig2 (single-pixel covariance vs pixel size), fig3 (average
fidelity per pixel vs pixel size), limits (analytic fidelity limits),
verify (implementation checks, nonzero exit on failure) and channel-mc
(Monte-Carlo validation of the memory channel). Flags override values from
an optional flat key=value config file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace

from .experiments import (
    ExperimentConfig,
    default_config,
    run_experiment,
    write_csv,
)

_BOOL_STRINGS = {"true": True, "1": True, "yes": True, "on": True,
                 "false": False, "0": False, "no": False, "off": False}


def _coerce(name: str, raw: str, target_type: type):
    if target_type is bool:
        try:
            return _BOOL_STRINGS[raw.strip().lower()]
        except KeyError:
            raise ValueError(f"cannot parse boolean {name}={raw!r}") from None
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    return raw


def read_config_file(path: str) -> dict:
    """Parse a flat 'key = value' text file; '#' starts a comment."""
    field_types = {f.name: f.type for f in fields(ExperimentConfig)}
    py_types = {"str": str, "float": float, "int": int, "bool": bool,
                "str | None": str}
    values: dict = {}
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = (part.strip() for part in body.split("=", 1))
            key = key.replace("-", "_")
            if key not in field_types:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw, py_types[str(field_types[key])])
    return values


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--r0", type=float, help="squeezing gain at q=0")
    parser.add_argument("--psi0", type=float,
                        help="ellipse orientation at q=0 (radians)")
    parser.add_argument("--lens", action=argparse.BooleanOptionalAction,
                        default=None, help="apply the thin-lens correction")
    parser.add_argument("--d-min", type=float, dest="d_min",
                        help="smallest normalized pixel size D")
    parser.add_argument("--d-max", type=float, dest="d_max",
                        help="largest normalized pixel size D")
    parser.add_argument("--points", type=int, help="number of sweep points")
    parser.add_argument("--grid", type=int, dest="n_side",
                        help="pixels per grid side")
    parser.add_argument("--periodic", action=argparse.BooleanOptionalAction,
                        default=None, help="periodic pixel lattice")
    parser.add_argument("--atom-init", choices=("coherent", "squeezed"),
                        dest="atom_init", help="initial collective-spin state")
    parser.add_argument("--atom-var", type=float, dest="atom_var",
                        help="squeezed atomic variance")
    parser.add_argument("--mc-samples", type=int, dest="mc_samples",
                        help="Monte-Carlo sample count")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--out", help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmemsim",
        description="Multimode quantum-memory simulation sweeps and checks",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    descriptions = {
        "fig2": "single-pixel added-noise covariance vs normalized pixel size",
        "fig3": "average fidelity per pixel vs normalized pixel size",
        "limits": "analytic fidelity limits of the protocol",
        "verify": "run implementation checks; nonzero exit on any failure",
        "channel-mc": "Monte-Carlo validation of the memory channel",
    }
    for name, desc in descriptions.items():
        sp = sub.add_parser(name, help=desc)
        _add_common_flags(sp)
        if name == "verify":
            sp.add_argument("--inject-failure", action="store_true",
                            help="negative control: add one failing check")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = default_config(args.experiment)
    if args.config:
        config = replace(config, **read_config_file(args.config))
    overrides = {}
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None and f.name != "experiment":
            overrides[f.name] = value
    if overrides:
        config = replace(config, **overrides)
    return config


def _print_rows(rows: list[dict]) -> None:
    if not rows:
        return
    columns = list(rows[0].keys())
    print("  ".join(columns))
    for row in rows:
        print("  ".join(
            f"{v:.6g}" if isinstance(v, float) else str(v) for v in
            (row[c] for c in columns)))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    inject = getattr(args, "inject_failure", False)
    rows, ok = run_experiment(config, inject_failure=inject)

    if config.out:
        path = write_csv(config.out, rows, config)
        print(f"wrote {len(rows)} rows to {path} (+ {path.with_suffix('.meta.json').name})")
    else:
        _print_rows(rows)

    if config.experiment == "verify":
        for row in rows:
            state = "PASS" if row["passed"] else "FAIL"
            print(f"{state} {row['check']}: deviation={row['deviation']:.3e} "
                  f"tolerance={row['tolerance']:.0e}")
        print("verification", "passed" if ok else "FAILED")
        return 0 if ok else 1
    if config.experiment in ("limits", "channel-mc") and not ok:
        print("one or more rows outside tolerance", file=sys.stderr)
        return 1
    if not ok:
        print("one or more sweep points failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
