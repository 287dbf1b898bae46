"""Command-line front end.

    adaptive-hermite [run] --problem example1 --out results/
    adaptive-hermite sweep --problem example1 --parameter q --values 0.8 0.9 0.99
    adaptive-hermite compare --out results/

Settings come from an optional flat YAML file (``--config``) with dotted keys
such as ``adaptive.q`` or ``initial_basis.n``; command-line flags override it.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import yaml

from .basis import BasisParams
from .controller import AdaptiveConfig
from .experiments import (
    DEFAULT_BASIS,
    SWEEP_PARAMETERS,
    RunConfig,
    compare_moving_modes,
    comparison_table,
    run,
    sweep,
)
from .integrator import ConfigurationError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# flag dest -> dotted config key
FLAG_KEYS = {
    "problem": "problem",
    "beta": "initial_basis.beta",
    "x0": "initial_basis.x0",
    "n": "initial_basis.n",
    "dt": "dt",
    "t_final": "t_final",
    "q": "adaptive.q",
    "nu": "adaptive.nu",
    "delta": "adaptive.delta",
    "mu": "adaptive.mu",
    "eta": "adaptive.eta",
    "eta0": "adaptive.eta0",
    "gamma": "adaptive.gamma",
    "d_max": "adaptive.d_max",
    "n_max": "adaptive.n_max",
    "beta_min": "adaptive.beta_min",
    "beta_max": "adaptive.beta_max",
    "gl_order": "gl_order",
    "out": "output_path",
    "log_every": "log_every",
}

_ADAPTIVE_FIELDS = {f.name for f in dataclasses.fields(AdaptiveConfig)}
_TOP_FIELDS = {"problem", "dt", "t_final", "gl_order", "output_path", "log_every"}
_BASIS_FIELDS = {"beta", "x0", "n"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat YAML file with dotted keys")
    p.add_argument("--problem", choices=["example1", "example2"])
    p.add_argument("--beta", type=float)
    p.add_argument("--x0", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    for name in ("q", "nu", "delta", "mu", "eta", "eta0", "gamma"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--d-max", type=float)
    p.add_argument("--n-max", type=int)
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--gl-order", type=int)
    p.add_argument("--disable-move", action="store_true")
    p.add_argument("--disable-scale", action="store_true")
    p.add_argument("--disable-order", action="store_true")
    p.add_argument("--move-mode", choices=["off", "left", "right", "both"])
    p.add_argument("--out", help="output directory for CSV/JSON files")
    p.add_argument("--log-every", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adaptive-hermite", description="Adaptive Hermite spectral solver")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    _common(sub.add_parser("run", help="run one problem"))
    sp = sub.add_parser("sweep", help="vary one adaptive parameter")
    _common(sp)
    sp.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    sp.add_argument("--values", required=True, type=float, nargs="+")
    sp.add_argument("--workers", type=int)
    cp = sub.add_parser("compare", help="example 2 under the four moving modes")
    _common(cp)
    cp.add_argument("--workers", type=int)
    return parser


def load_flat_config(path: str) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a flat key: value mapping")
    for k, v in data.items():
        if isinstance(v, (dict, list)):
            raise ConfigurationError(f"config key {k!r} must map to a scalar")
    return data


def settings_from_args(args: argparse.Namespace) -> dict:
    """Merge the config file and the flags into one flat dotted-key dict."""
    flat = load_flat_config(args.config) if args.config else {}
    for dest, key in FLAG_KEYS.items():
        val = getattr(args, dest, None)
        if val is not None:
            flat[key] = val
    for tech in ("move", "scale", "order"):
        if getattr(args, f"disable_{tech}", False):
            flat[f"adaptive.{tech}"] = False
    if args.move_mode is not None:
        flat["adaptive.move_mode"] = args.move_mode
    return flat


def config_from_flat(flat: dict) -> RunConfig:
    top, basis_kw, adaptive_kw = {}, {}, {}
    move_mode = None
    for key, val in flat.items():
        head, _, tail = key.partition(".")
        if not tail and head in _TOP_FIELDS:
            top[head] = val
        elif head == "initial_basis" and tail in _BASIS_FIELDS:
            basis_kw[tail] = val
        elif head == "adaptive" and tail == "move_mode":
            move_mode = val
        elif head == "adaptive" and tail in _ADAPTIVE_FIELDS:
            adaptive_kw[tail] = val
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    problem = top.get("problem", "example1")
    basis = None
    if basis_kw:
        default = DEFAULT_BASIS.get(problem, BasisParams(1.0, 0.0, 40))
        try:
            basis = default.replace(**basis_kw)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad initial basis: {exc}") from exc
    try:
        adaptive = AdaptiveConfig(**adaptive_kw)
        if move_mode is not None:
            adaptive.set_move_mode(move_mode)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc
    cfg = RunConfig(initial_basis=basis, adaptive=adaptive, **top)
    return cfg.validate()


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in ("run", "sweep", "compare", "-h", "--help"):
        argv.insert(0, "run")
    args = build_parser().parse_args(argv)
    try:
        config = config_from_flat(settings_from_args(args))
    except (ConfigurationError, OSError, yaml.YAMLError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "sweep":
            res = sweep(config, args.parameter, args.values, workers=args.workers)
            for row in res.table():
                print(json.dumps(row))
            failed = any(r is None or not r.ok for r in res.records)
            return EXIT_NUMERIC if failed else EXIT_OK
        if args.command == "compare":
            if config.problem != "example2":
                config = dataclasses.replace(config, problem="example2", initial_basis=None)
            recs = compare_moving_modes(config, workers=args.workers)
            for row in comparison_table(recs):
                print(json.dumps(row))
            return EXIT_OK if all(r.ok for r in recs.values()) else EXIT_NUMERIC
        rec = run(config)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({k: v for k, v in rec.summary.items() if k != "ledger"}))
    if not rec.ok:
        print(f"numerical failure: {rec.summary['message']}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
