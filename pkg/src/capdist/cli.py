"""Command-line interface: validate channels, solve curves, run simulations.

Results go to stdout as JSON or CSV; logs and run manifests go to stderr.
Exit codes: 0 success, 2 invalid input, 3 infeasible distortion budget,
4 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .blockmarkov import SimConfig, derive_code_rates, run_block_markov
from .channel import (ChannelSpec, ResourceCapError, load_channel,
                      validate_channel)
from .gaussian import (GAUSSIAN_MODES, GaussianParams, gaussian_breakpoints,
                       gaussian_capdist)
from .infotheory import policy_from_dict, validate_policy
from .oracle import OracleOptions, brute_force_point, lattice_counts
from .solver import MODES, SolveOptions, solve_point, sweep_curve

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_CAP = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _emit_manifest(command: str, options: dict, seed, input_path,
                   started: float) -> None:
    manifest = {
        "command": command,
        "options": options,
        "seed": seed,
        "tool_version": __version__,
        "duration_s": round(time.monotonic() - started, 6),
    }
    if input_path is not None:
        with open(input_path, "rb") as fh:
            manifest["input_sha256"] = hashlib.sha256(fh.read()).hexdigest()
    print("manifest " + json.dumps(manifest, sort_keys=True), file=sys.stderr)


def _load_valid_channel(path) -> ChannelSpec:
    try:
        spec = load_channel(path)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot read channel file {path}: {exc}", EXIT_INVALID)
    violations = validate_channel(spec)
    if violations:
        raise CliError("invalid channel spec:\n  " + "\n  ".join(violations),
                       EXIT_INVALID)
    return spec


def _parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise CliError(f"grid must be start:stop:step, got {text!r}",
                       EXIT_INVALID)
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start - 1e-12:
        raise CliError(f"empty or malformed grid {text!r}", EXIT_INVALID)
    values = []
    k = 0
    while True:
        v = start + k * step
        if v > stop + 1e-12:
            break
        values.append(min(v, stop))
        k += 1
    if not values:
        raise CliError(f"empty grid {text!r}", EXIT_INVALID)
    return values


def _solve_options(args, mode: str) -> SolveOptions:
    return SolveOptions(
        mode=mode, u_cardinality=args.u_cardinality,
        grid_resolution=args.grid_resolution,
        refinement_iterations=args.refinement_iterations,
        restarts=args.restarts, seed=args.seed, tolerance=args.tolerance,
    )


def _add_solver_args(sub) -> None:
    sub.add_argument("--u-cardinality", type=int, default=None)
    sub.add_argument("--grid-resolution", type=int, default=3)
    sub.add_argument("--refinement-iterations", type=int, default=2)
    sub.add_argument("--restarts", type=int, default=3)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--tolerance", type=float, default=1e-3)


def cmd_compute(args) -> int:
    started = time.monotonic()
    spec = _load_valid_channel(args.channel)
    if args.distortion < 0:
        raise CliError("distortion must be >= 0", EXIT_INVALID)
    opts = _solve_options(args, args.mode)
    point = solve_point(spec, args.distortion, opts)
    if not point.feasible:
        raise CliError(
            f"no feasible policy at distortion {args.distortion} "
            f"(budget below the searched minimum)", EXIT_INFEASIBLE)
    out = {
        "D": args.distortion,
        "rate_bits": point.rate,
        "mode": point.mode,
        "feasibility_gap": point.feasibility_gap_at_opt,
    }
    if args.emit_policy:
        out["policy"] = point.policy.to_dict()
    print(json.dumps(out, sort_keys=True))
    _emit_manifest("compute", {"mode": args.mode, "D": args.distortion},
                   args.seed, args.channel, started)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.monotonic()
    spec = _load_valid_channel(args.channel)
    budgets = _parse_grid(args.grid)
    if any(b < 0 for b in budgets):
        raise CliError("distortion must be >= 0", EXIT_INVALID)
    opts = _solve_options(args, args.mode)
    curve = sweep_curve(spec, budgets, opts)
    lines = ["D,rate_bits,mode,feasibility_gap"]
    for point in curve.points:
        rate = "" if point.rate is None else repr(point.rate)
        gap = ("" if point.feasibility_gap_at_opt is None
               else repr(point.feasibility_gap_at_opt))
        lines.append(f"{point.distortion_budget!r},{rate},{point.mode},{gap}")
    sys.stdout.write("\n".join(lines) + "\n")
    _emit_manifest("sweep", {"mode": args.mode, "grid": args.grid},
                   args.seed, args.channel, started)
    return EXIT_OK


def cmd_gaussian(args) -> int:
    started = time.monotonic()
    try:
        params = GaussianParams(p_x=args.px, p_a=args.pa, q=args.q, n0=args.n)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID)
    bp = gaussian_breakpoints(params)
    bp_dict = {
        "d_min_nonadaptive": bp.d_min_nonadaptive,
        "d_min_adaptive": bp.d_min_adaptive,
        "d_max": bp.d_max,
    }
    if args.grid is not None:
        budgets = _parse_grid(args.grid)
        if any(b <= 0 for b in budgets):
            raise CliError("distortion must be > 0", EXIT_INVALID)
        header = "# " + json.dumps(bp_dict, sort_keys=True)
        lines = [header, "D,rate_bits,mode"]
        for d in budgets:
            rate = gaussian_capdist(params, d, args.mode)
            lines.append(f"{d!r},{rate!r},{args.mode}")
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        if args.distortion is None:
            raise CliError("need --distortion or --grid", EXIT_INVALID)
        if args.distortion <= 0:
            raise CliError("distortion must be > 0", EXIT_INVALID)
        rate = gaussian_capdist(params, args.distortion, args.mode)
        print(json.dumps({"D": args.distortion, "rate_bits": rate,
                          "mode": args.mode, "breakpoints": bp_dict},
                         sort_keys=True))
    _emit_manifest("gaussian", {"mode": args.mode}, None, None, started)
    return EXIT_OK


def cmd_oracle(args) -> int:
    started = time.monotonic()
    spec = _load_valid_channel(args.channel)
    if args.distortion < 0:
        raise CliError("distortion must be >= 0", EXIT_INVALID)
    opts = OracleOptions(resolution=args.resolution,
                         u_cardinality=args.u_cardinality)
    counts = lattice_counts(spec, opts)
    try:
        rate = brute_force_point(spec, args.distortion, args.mode, opts)
    except ResourceCapError as exc:
        raise CliError(str(exc), EXIT_CAP)
    if rate is None:
        raise CliError(f"no lattice policy is feasible at distortion "
                       f"{args.distortion}", EXIT_INFEASIBLE)
    print(json.dumps({
        "D": args.distortion, "rate_bits": rate, "mode": args.mode,
        "resolution": args.resolution,
        "lattice": {k: str(v) if v > 2**53 else v
                    for k, v in counts.items()},
    }, sort_keys=True))
    _emit_manifest("oracle", {"mode": args.mode,
                              "resolution": args.resolution},
                   None, args.channel, started)
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.monotonic()
    spec = _load_valid_channel(args.channel)
    try:
        with open(args.policy) as fh:
            policy = policy_from_dict(json.load(fh), spec)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot read policy file {args.policy}: {exc}",
                       EXIT_INVALID)
    violations = validate_policy(policy, spec)
    if violations:
        raise CliError("invalid policy:\n  " + "\n  ".join(violations),
                       EXIT_INVALID)
    try:
        config = SimConfig(n=args.n, b=args.blocks, rate_r=args.rate,
                           delta=args.delta, epsilon_enc=args.eps_enc,
                           epsilon_dec=args.eps_dec, seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID)
    rates = derive_code_rates(spec, policy, config.delta)
    if args.rate > max(rates.r_max, 0.0) and not args.allow_rate_above_max:
        raise CliError(
            f"requested rate {args.rate} exceeds the policy's budget "
            f"r_max={rates.r_max:.6f}; pass --allow-rate-above-max to "
            f"proceed anyway", EXIT_INVALID)
    if args.rate > max(rates.r_max, 0.0):
        print(f"warning: rate {args.rate} above r_max={rates.r_max:.6f}",
              file=sys.stderr)
    try:
        result = run_block_markov(spec, policy, config)
    except ResourceCapError as exc:
        raise CliError(str(exc), EXIT_CAP)
    out = result.to_dict()
    blocks = out.pop("blocks")
    print(json.dumps(out, sort_keys=True))
    if args.log_file:
        with open(args.log_file, "w") as fh:
            fh.write("\n".join(blocks) + "\n")
    else:
        for line in blocks:
            print("blocklog " + line, file=sys.stderr)
    _emit_manifest("simulate", {"n": args.n, "b": args.blocks,
                                "rate": args.rate}, args.seed,
                   args.channel, started)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        spec = load_channel(args.channel)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot read channel file {args.channel}: {exc}",
                       EXIT_INVALID)
    violations = validate_channel(spec)
    print(json.dumps({"valid": not violations, "violations": violations},
                     sort_keys=True))
    return EXIT_OK if not violations else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capdist",
        description="capacity-distortion tools for channels with "
                    "action-dependent states")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="solve one distortion budget")
    p.add_argument("--channel", required=True)
    p.add_argument("--distortion", type=float, required=True)
    p.add_argument("--mode", choices=MODES, default="nonadaptive")
    p.add_argument("--emit-policy", action="store_true")
    _add_solver_args(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("sweep", help="solve a budget grid, emit CSV")
    p.add_argument("--channel", required=True)
    p.add_argument("--grid", required=True, help="start:stop:step")
    p.add_argument("--mode", choices=MODES, default="nonadaptive")
    _add_solver_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gaussian", help="closed-form Gaussian curve")
    p.add_argument("--px", type=float, required=True)
    p.add_argument("--pa", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--distortion", type=float, default=None)
    p.add_argument("--grid", default=None, help="start:stop:step")
    p.add_argument("--mode", choices=GAUSSIAN_MODES, default="nonadaptive")
    p.set_defaults(func=cmd_gaussian)

    p = sub.add_parser("oracle", help="brute-force lattice maximum")
    p.add_argument("--channel", required=True)
    p.add_argument("--distortion", type=float, required=True)
    p.add_argument("--mode", choices=MODES, default="nonadaptive")
    p.add_argument("--resolution", type=int, default=9)
    p.add_argument("--u-cardinality", type=int, default=2)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", help="block-Markov Monte Carlo run")
    p.add_argument("--channel", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--eps-enc", type=float, default=0.15)
    p.add_argument("--eps-dec", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-file", default=None)
    p.add_argument("--allow-rate-above-max", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="check a channel spec file")
    p.add_argument("--channel", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
