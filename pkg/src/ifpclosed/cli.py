"""Command-line front end: eval, sweep, figure, check.

All numeric output is printed with 17 significant digits so doubles
round-trip exactly; CSV files use a comma separator, one header row, LF
line endings.  Exit codes: 0 success, 1 check failure, 2 usage/validation
error.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from .consumption import (
    consumption_approx_small_r,
    consumption_derivatives,
    consumption_from_depletion_time,
    consumption_path,
    consumption_unconstrained,
    discrete_policy,
)
from .depletion_map import best_depletion_time, h_approx_small_r, h_closed_r0, h_numeric
from .model_core import ModelParams, validate

__all__ = ["SweepSpec", "figure_rows", "main", "sweep_grid"]


@dataclass(frozen=True)
class SweepSpec:
    """Asset grid request: [a_min, a_max] with n_points, linear or log spacing."""

    a_min: float
    a_max: float
    n_points: int
    spacing: str = "linear"  # "linear" | "log"
    normalize_by_income: bool = False


def _validate_sweep(spec: SweepSpec) -> SweepSpec:
    if spec.a_min < 0.0:
        raise ValueError(f"sweep: need a_min >= 0, got {spec.a_min}")
    if not spec.a_max > spec.a_min:
        raise ValueError(f"sweep: need a_max > a_min, got [{spec.a_min}, {spec.a_max}]")
    if spec.n_points < 2:
        raise ValueError(f"sweep: need n_points >= 2, got {spec.n_points}")
    if spec.spacing not in ("linear", "log"):
        raise ValueError(f"sweep: unknown spacing {spec.spacing!r}")
    if spec.spacing == "log" and spec.a_min <= 0.0:
        raise ValueError("sweep: log spacing requires a_min > 0")
    return spec


def sweep_grid(spec: SweepSpec) -> np.ndarray:
    _validate_sweep(spec)
    if spec.spacing == "log":
        return np.geomspace(spec.a_min, spec.a_max, spec.n_points)
    return np.linspace(spec.a_min, spec.a_max, spec.n_points)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def figure_rows(
    params: ModelParams, which: int, spec: SweepSpec, delta: float
) -> tuple[list[str], list[tuple]]:
    """Rows for the two figure CSVs (consumption normalized by income).

    Figure 1 (requires r > 0): discrete piecewise-linear policy at step
    ``delta`` against the unconstrained linear benchmark; grid points
    nearest to a depletion knot are snapped onto the knot and flagged so
    the knots appear exactly in the emitted data.  Figure 2: small-r
    closed-form approximation against the numerically inverted solution.
    """
    validate(params)
    grid = sweep_grid(spec)
    y = params.y
    if which == 1:
        if params.r <= 0.0:
            raise ValueError("figure 1 requires r > 0 for the unconstrained overlay")
        policy = discrete_policy(params, delta, spec.a_max)
        flags = np.zeros(grid.size, dtype=int)
        for knot in policy.knot_assets:
            if spec.a_min <= knot <= spec.a_max:
                i = int(np.argmin(np.abs(grid - knot)))
                grid[i] = knot
                flags[i] = 1
        order = np.argsort(grid)
        grid, flags = grid[order], flags[order]
        header = ["a_over_y", "c_discrete_over_y", "c_unconstrained_over_y", "knot_flag"]
        rows = [
            (a / y, policy(a) / y, consumption_unconstrained(params, a) / y, int(f))
            for a, f in zip(grid, flags)
        ]
        return header, rows
    if which == 2:
        header = ["a_over_y", "c_closed_approx_over_y", "c_numeric_over_y"]
        rows = [
            (
                a / y,
                consumption_approx_small_r(params, a) / y,
                consumption_from_depletion_time(params, h_numeric(params, a).T) / y,
            )
            for a in grid
        ]
        return header, rows
    raise ValueError(f"unknown figure {which!r}; expected 1 or 2")


def _write_csv(path: str | None, header: list[str], rows: list[tuple]) -> None:
    # The full payload is assembled before any byte is written, and files are
    # replaced atomically, so a failed run never leaves a partial CSV behind.
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, int) else _fmt(v) for v in row))
    payload = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(payload)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _params_from(args: argparse.Namespace) -> ModelParams:
    return validate(ModelParams(rho=args.rho, r=args.r, gamma=args.gamma, y=args.y))


def cmd_eval(args: argparse.Namespace) -> int:
    params = _params_from(args)
    a, t = args.a, args.t
    if a < 0.0:
        raise ValueError(f"eval: need a >= 0, got {a}")
    print(f"a={_fmt(a)}")
    print(f"t={_fmt(t)}")
    if params.r == 0.0:
        print(f"T_exact_r0={_fmt(h_closed_r0(params, a).T)}")
    print(f"T_numeric={_fmt(h_numeric(params, a).T)}")
    print(f"T_approx_small_r={_fmt(h_approx_small_r(params, a).T)}")
    print(f"c={_fmt(consumption_path(params, a, t))}")
    if params.r == 0.0 and a > 0.0:
        d = consumption_derivatives(params, a)
        print(f"dc_da={_fmt(d.dc_da)}")
        print(f"dc_dy={_fmt(d.dc_dy)}")
        print(f"d2c_da2={_fmt(d.d2c_da2)}")
        print(f"d2c_dady={_fmt(d.d2c_dady)}")
        print(f"d2c_dy2={_fmt(d.d2c_dy2)}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    params = _params_from(args)
    spec = _validate_sweep(
        SweepSpec(a_min=args.a_min, a_max=args.a_max, n_points=args.n, spacing=args.spacing)
    )
    outputs = args.outputs
    needs_derivs = "jacobian" in outputs or "hessian" in outputs
    if needs_derivs and params.r != 0.0:
        raise ValueError("sweep: jacobian/hessian outputs require r = 0")
    if needs_derivs and spec.a_min <= 0.0:
        raise ValueError("sweep: jacobian/hessian outputs require a_min > 0")
    header = ["a"]
    for out in outputs:
        if out == "c":
            header.append("c")
        elif out == "T":
            header.append("T")
        elif out == "jacobian":
            header.extend(["dc_da", "dc_dy"])
        elif out == "hessian":
            header.extend(["d2c_da2", "d2c_dady", "d2c_dy2"])
    rows = []
    for a in sweep_grid(spec):
        row = [a]
        for out in outputs:
            if out == "c":
                row.append(consumption_path(params, a, 0.0))
            elif out == "T":
                row.append(best_depletion_time(params, a).T)
            elif out == "jacobian":
                d = consumption_derivatives(params, a)
                row.extend([d.dc_da, d.dc_dy])
            elif out == "hessian":
                d = consumption_derivatives(params, a)
                row.extend([d.d2c_da2, d.d2c_dady, d.d2c_dy2])
        rows.append(tuple(row))
    _write_csv(args.out, header, rows)
    return 0


def cmd_figure(args: argparse.Namespace) -> int:
    params = _params_from(args)
    a_max = args.a_max if args.a_max is not None else 10.0 * params.y
    spec = _validate_sweep(
        SweepSpec(
            a_min=args.a_min,
            a_max=a_max,
            n_points=args.n,
            spacing=args.spacing,
            normalize_by_income=True,
        )
    )
    header, rows = figure_rows(params, args.which, spec, args.delta)
    _write_csv(args.out, header, rows)
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    from . import checks

    params = _params_from(args)  # fail fast on bad flags before a long run
    del params
    results = checks.run_level(args.level)
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    print(f"{'FAIL' if failed else 'PASS'}: {len(results) - len(failed)}/{len(results)} checks")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--rho", type=float, default=0.08, help="discount rate (default 0.08)")
    shared.add_argument("--r", type=float, default=0.01, help="interest rate (default 0.01)")
    shared.add_argument("--gamma", type=float, default=0.5, help="risk aversion (default 0.5)")
    shared.add_argument("--y", type=float, default=3.0, help="permanent income (default 3)")

    parser = argparse.ArgumentParser(
        prog="ifpclosed",
        description="Closed-form consumption with a borrowing constraint: "
        "point evaluation, grid sweeps, figure data, and validation checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", parents=[shared], help="evaluate at a single point")
    p_eval.add_argument("--a", type=float, required=True, help="initial assets")
    p_eval.add_argument("--t", type=float, default=0.0, help="calendar time (default 0)")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", parents=[shared], help="grid sweep to CSV")
    p_sweep.add_argument(
        "outputs", nargs="+", choices=["c", "T", "jacobian", "hessian"], help="columns to emit"
    )
    p_sweep.add_argument("--a-min", type=float, default=0.0)
    p_sweep.add_argument("--a-max", type=float, default=30.0)
    p_sweep.add_argument("--n", type=int, default=101)
    p_sweep.add_argument("--spacing", choices=["linear", "log"], default="linear")
    p_sweep.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_fig = sub.add_parser("figure", parents=[shared], help="figure data to CSV")
    p_fig.add_argument("--which", type=int, choices=[1, 2], required=True)
    p_fig.add_argument("--delta", type=float, default=1.0, help="time step for figure 1")
    p_fig.add_argument("--a-min", type=float, default=0.0)
    p_fig.add_argument("--a-max", type=float, default=None, help="default 10*y")
    p_fig.add_argument("--n", type=int, default=201)
    p_fig.add_argument("--spacing", choices=["linear", "log"], default="linear")
    p_fig.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p_fig.set_defaults(func=cmd_figure)

    p_check = sub.add_parser("check", parents=[shared], help="run the acceptance checks")
    p_check.add_argument("--level", choices=["quick", "full"], default="quick")
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        path = getattr(exc, "filename", None)
        print(f"error: I/O failure{f' on {path}' if path else ''}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
