"""Command-line front end.

Runs walk simulations, dispersion scans, peak-velocity analyses, parameter
sweeps, and localization reports, writing CSV or JSON data files suitable
for plotting.  Exit codes: 0 success, 2 configuration error, 3 numeric or
invariant failure, 4 I/O failure.  Failures emit a one-line JSON error
object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .coins import (
    Coin,
    CoinFamily,
    InvariantViolation,
    coin_c1,
    coin_c2,
    grover_coin,
    permutation_coin,
)
from .localization import localization_report
from .spectral import (
    BranchTrackingError,
    dispersion_numeric,
    peak_velocities_numeric,
    peak_velocity_c1,
    peak_velocity_c2,
)
from .walk import evolve, initial_state, peak_positions, probability_distribution

__all__ = ["main"]

MAX_STEPS = 100_000
THREADS_ENV_VAR = "TRIWALK_THREADS"

# Normalized version of the reference state (1, -1, 1)/sqrt(3).
_DEFAULT_STATE = (
    "0.57735026918962576,0,-0.57735026918962576,0,0.57735026918962576,0"
)


class ConfigError(Exception):
    """Invalid command-line configuration."""


def parse_coin(spec: str) -> Coin:
    """Resolve a coin spec: grover | c1:<phi> | c2:<rho> | pi | matrix:<path>."""
    spec = spec.strip()
    if spec == "grover":
        return grover_coin()
    if spec == "pi":
        return permutation_coin()
    if spec.startswith("c1:"):
        return coin_c1(_parse_float(spec[3:], "c1 parameter"))
    if spec.startswith("c2:"):
        return coin_c2(_parse_float(spec[3:], "c2 parameter"))
    if spec.startswith("matrix:"):
        path = spec[len("matrix:"):]
        with open(path, "r", encoding="utf-8") as fh:
            return Coin.from_json(fh.read())
    raise ConfigError(
        f"unrecognized coin spec {spec!r}; expected grover, c1:<phi>, "
        "c2:<rho>, pi, or matrix:<path>"
    )


def _parse_float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{what} must be a number, got {text!r}") from None


def parse_state(spec: str) -> np.ndarray:
    """Parse six comma-separated reals (re, im per component), normalizing.

    Prints a warning when the supplied vector was off unit norm by more
    than 1e-9.
    """
    parts = spec.split(",")
    if len(parts) != 6:
        raise ConfigError(
            "state must be six comma-separated numbers (re,im per component)"
        )
    vals = [_parse_float(p, "state component") for p in parts]
    psi = np.array([complex(vals[0], vals[1]),
                    complex(vals[2], vals[3]),
                    complex(vals[4], vals[5])])
    norm = math.sqrt(float(np.sum(np.abs(psi) ** 2)))
    if norm == 0.0:
        raise ConfigError("state vector must be nonzero")
    if abs(norm - 1.0) > 1e-9:
        print(f"warning: state norm was {norm:.12g}; normalizing",
              file=sys.stderr)
    return psi / norm


def _analytic_velocity(coin: Coin) -> float | None:
    if coin.family is CoinFamily.GROVER:
        return 1.0 / math.sqrt(3.0)
    if coin.family is CoinFamily.PERMUTATION_PI:
        return 0.0
    if coin.family is CoinFamily.C1 and coin.parameter <= math.pi / 2.0:
        return peak_velocity_c1(coin.parameter)
    if coin.family is CoinFamily.C2:
        return peak_velocity_c2(coin.parameter)
    return None


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}")
        if n < 1:
            raise ConfigError(f"{THREADS_ENV_VAR} must be positive, got {n}")
        return n
    return os.cpu_count() or 1


def cmd_simulate(args: argparse.Namespace) -> int:
    coin = parse_coin(args.coin)
    psi = parse_state(args.state)
    if args.steps < 0:
        raise ConfigError("--steps must be non-negative")
    if args.steps > MAX_STEPS:
        raise ConfigError(f"--steps is capped at {MAX_STEPS}")
    state = evolve(initial_state(psi), coin, args.steps)
    dist = probability_distribution(state)
    if args.format == "csv":
        dist.to_csv(args.out)
    else:
        _write_text(args.out, dist.to_json())
    left, right = peak_positions(dist)
    print(f"side peaks: left={left} right={right}")
    v = _analytic_velocity(coin)
    label = "analytic"
    if v is None:
        v = peak_velocities_numeric(coin, args.grid).v_right
        label = "numeric"
    print(f"predicted t*v_R = {args.steps * v:.3f} "
          f"(v_R = {v:.6f}, {label})")
    return 0


def cmd_dispersion(args: argparse.Namespace) -> int:
    coin = parse_coin(args.coin)
    table = dispersion_numeric(coin, args.grid)
    if args.format == "csv":
        table.to_csv(args.out)
    else:
        _write_text(args.out, table.to_json())
    return 0


def cmd_velocity(args: argparse.Namespace) -> int:
    coin = parse_coin(args.coin)
    result = peak_velocities_numeric(coin, args.grid)
    if args.format == "csv":
        k0 = "" if result.k0 is None else f"{result.k0:.17g}"
        _write_text(
            args.out,
            "v_left,v_right,k0,method\n"
            f"{result.v_left:.17g},{result.v_right:.17g},{k0},"
            f"{result.method.value}\n",
        )
    else:
        _write_text(args.out, result.to_json())
    print(f"v_left = {result.v_left:.9f}, v_right = {result.v_right:.9f}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    family = args.family
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    if family == "c1":
        params = np.linspace(0.0, math.pi / 2.0, args.points)
        analytic = peak_velocity_c1
    else:
        params = np.linspace(0.0, 1.0, args.points)
        analytic = peak_velocity_c2
    make_coin = coin_c1 if family == "c1" else coin_c2

    def straight_line(p: float) -> float:
        if family == "c1":
            return (1.0 - 2.0 * p / math.pi) / math.sqrt(3.0)
        return p

    def run_point(p: float) -> tuple[float, float, float, float]:
        v_num = peak_velocities_numeric(make_coin(p), args.grid).v_right
        v_ana = analytic(p)
        return (p, v_ana, v_num, v_ana - straight_line(p))

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        rows = list(pool.map(run_point, params))

    if args.format == "csv":
        lines = ["parameter,v_analytic,v_numeric,deviation_from_linear"]
        lines += [",".join(f"{x:.17g}" for x in row) for row in rows]
        _write_text(args.out, "\n".join(lines) + "\n")
    else:
        _write_text(args.out, json.dumps([
            {"parameter": r[0], "v_analytic": r[1], "v_numeric": r[2],
             "deviation_from_linear": r[3]} for r in rows
        ]))
    return 0


def cmd_localize(args: argparse.Namespace) -> int:
    coin = parse_coin(args.coin)
    psi = parse_state(args.state)
    if args.steps < 1:
        raise ConfigError("--steps must be at least 1 for localize")
    if args.steps > MAX_STEPS:
        raise ConfigError(f"--steps is capped at {MAX_STEPS}")
    report = localization_report(coin, psi, args.steps, n_samples=args.grid)
    if args.format == "csv":
        report.series_to_csv(args.out)
    else:
        _write_text(args.out, report.to_json())
    print(f"trapping estimate = {report.trapping_estimate:.6f} "
          f"(converged={report.converged}, flat_band={report.flat_band})")
    return 0


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triwalk",
        description="Three-state quantum walks on the line: simulation, "
                    "band structure, and localization analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, *, state: bool = False) -> None:
        p.add_argument("--coin", default="grover",
                       help="grover | c1:<phi> | c2:<rho> | pi | matrix:<path>")
        if state:
            p.add_argument("--state", default=_DEFAULT_STATE,
                           help="initial coin state, six reals re,im per "
                                "component (default (1,-1,1)/sqrt(3))")
        p.add_argument("--grid", type=int, default=4096,
                       help="momentum grid size (default 4096)")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="output format (default csv)")

    p_sim = sub.add_parser("simulate", help="evolve the walk, write p(m, T)")
    add_common(p_sim, state=True)
    p_sim.add_argument("--steps", type=int, default=50,
                       help="number of walk steps (default 50)")
    p_sim.set_defaults(func=cmd_simulate)

    p_disp = sub.add_parser("dispersion",
                            help="write tracked dispersion branches and "
                                 "group velocities")
    add_common(p_disp)
    p_disp.set_defaults(func=cmd_dispersion)

    p_vel = sub.add_parser("velocity", help="numeric peak velocities")
    add_common(p_vel)
    p_vel.set_defaults(func=cmd_velocity, format="json")

    p_sweep = sub.add_parser("sweep",
                             help="peak velocity across a coin family")
    p_sweep.add_argument("--family", choices=("c1", "c2"), required=True)
    p_sweep.add_argument("--points", type=int, default=50,
                         help="number of parameter samples (default 50)")
    p_sweep.add_argument("--grid", type=int, default=4096,
                         help="momentum grid size per point (default 4096)")
    p_sweep.add_argument("--threads", type=int, default=None,
                         help=f"worker threads (default ${THREADS_ENV_VAR} "
                              "or CPU count)")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.set_defaults(func=cmd_sweep)

    p_loc = sub.add_parser("localize", help="origin-probability trapping report")
    add_common(p_loc, state=True)
    p_loc.add_argument("--steps", type=int, default=1000,
                       help="walk length T (default 1000)")
    p_loc.set_defaults(func=cmd_localize, format="json")
    return parser


def _fail(code: int, exc: Exception) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("dispersion", "velocity", "sweep", "localize",
                            "simulate") and args.grid < 16:
            raise ConfigError("--grid must be at least 16")
        if args.command == "sweep" and args.threads is None:
            args.threads = _default_threads()
        if args.command == "sweep" and args.threads < 1:
            raise ConfigError("--threads must be positive")
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        return _fail(2, exc)
    except (InvariantViolation, BranchTrackingError) as exc:
        return _fail(3, exc)
    except OSError as exc:
        return _fail(4, exc)


if __name__ == "__main__":
    sys.exit(main())
