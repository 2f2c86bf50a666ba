"""Command line front end.

Exit codes: 0 success, 2 parse error, 3 invalid input, 4 optimizer did not converge.
"""

from __future__ import annotations

import argparse
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .decomposition import broja_pid, series_decomposition, translation
from .distributions import JointDistribution, LN2
from .domain import MarginalPair, build_domain, embed_array
from .errors import InfoLandscapeError, NonConvergence
from .gaussian import scan_covariance
from .geometry import (
    CornerPoint,
    boundary_points,
    direction_angle,
    endpoint_distance,
    has_interior_minimum,
    interior_fraction_exact,
    interior_fraction_mc,
    region_area,
    region_polygons,
    slope_range,
)
from .io import (
    ParseError,
    InvalidInput,
    SCHEMA_VERSION,
    dump_report,
    info,
    read_table,
    report_to_csv,
)
from .optimize import classify_minimizer, information, minimize_information

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _stamp(command: str, seed: int | None = None) -> dict[str, Any]:
    return {"schema": SCHEMA_VERSION, "version": __version__, "command": command, "seed": seed}


def _minimizer_fragment(report) -> dict[str, Any]:
    return {
        "i_star": info(report.i_star),
        "location": report.location.value,
        "near_interior": report.near_interior,
        "t_star": report.t_star.t,
        "q_star": report.q_star.mass,
        "first_order_residual": report.first_order_residual,
        "iterations": report.iterations,
    }


def _load_marginals(args) -> MarginalPair:
    if args.joint:
        joint = read_table(args.joint, ("s", "x", "y", "p"), args.renormalize)
        return MarginalPair.from_joint(joint)
    if not (args.sx and args.sy):
        raise UsageError("give either a joint table or both --sx and --sy")
    sx = read_table(args.sx, ("s", "x", "p"), args.renormalize)
    sy = read_table(args.sy, ("s", "y", "p"), args.renormalize)
    if sx.shape[0] != sy.shape[0]:
        raise InvalidInput("marginal tables disagree on the number of stimulus states")
    return MarginalPair.from_arrays(sx, sy)


def cmd_analyze(args) -> dict[str, Any]:
    mass = read_table(args.input, ("s", "x", "y", "p"), args.renormalize)
    q = JointDistribution.from_array(mass, ("S", "X", "Y"))
    d = build_domain(MarginalPair.from_joint(q))
    rep = minimize_information(d, tol=args.tol)
    pid = broja_pid(q, report=rep)
    series = series_decomposition(q)
    tr = translation(q, pid, series)
    out = _stamp("analyze")
    out["inputs"] = {"shape": list(mass.shape), "joint": mass}
    out["mutual_information"] = {
        "S:XY": info(information(mass)),
        "S:X": info(pid.i_sx),
        "S:Y": info(pid.i_sy),
        "shuffle S:XY": info(series.i_shuffle),
    }
    out["broja"] = {"si": info(pid.si), "ui_x": info(pid.ui_x), "ui_y": info(pid.ui_y), "ci": info(pid.ci)}
    out["series"] = {
        "i_lin": info(series.i_lin),
        "i_ss": info(series.i_ss),
        "i_ci": info(series.i_ci),
        "i_cd": info(series.i_cd),
    }
    out["translation"] = {
        "ci0": info(tr.ci0),
        "residual_si_plus_ci0_plus_iss": tr.residual_si_plus,
        "residual_si_minus_ci0_plus_iss": tr.residual_si_minus,
        "residual_ci": tr.residual_ci,
    }
    out["minimizer"] = _minimizer_fragment(rep)
    if d.is_binary and d.lower is not None and np.all(d.q0.mass > 0):
        cert = classify_minimizer(d, rep)
        out["minimizer"]["certificate"] = {
            "alpha0": cert.alpha0,
            "sign_pattern": list(cert.sign_pattern),
            "corner": cert.corner,
            "x_independent": cert.x_independent,
            "y_independent": cert.y_independent,
            "violations": list(cert.violations),
        }
    return out


def cmd_landscape(args) -> str:
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    pair = _load_marginals(args)
    d = build_domain(pair)
    if not d.is_binary or d.lower is None:
        raise InvalidInput("the landscape grid needs binary X and Y")
    axes = [np.linspace(lo, hi, args.grid) for lo, hi in zip(d.lower, d.upper)]
    lines = [",".join([f"t{k + 1}" for k in range(d.dims)] + ["I_nats", "I_bits"])]
    for idx in np.ndindex(*(args.grid,) * d.dims):
        t = np.array([axes[k][i] for k, i in enumerate(idx)])
        value = information(np.clip(embed_array(d, t), 0.0, None))
        lines.append(",".join([repr(float(v)) for v in t] + [repr(value), repr(value / LN2)]))
    return "\n".join(lines) + "\n"


def _point(values: Sequence[float], name: str) -> CornerPoint:
    if len(values) != 2:
        raise UsageError(f"{name} needs two coordinates")
    try:
        return CornerPoint(*values)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None


def cmd_discriminant(args) -> dict[str, Any]:
    p = _point([args.s, args.t], "p")
    sr = slope_range(p)
    out = _stamp("discriminant")
    out["p"] = [p.s, p.t]
    out["slope_intervals"] = [str(iv) for iv in sr.intervals]
    out["boundary_points"] = [list(v) for v in boundary_points(p)]
    out["region_triangles"] = [[list(v) for v in tri] for tri in region_polygons(p)]
    out["area"] = region_area(p)
    if args.q is not None:
        q = _point(args.q, "q")
        dx, dy = q.s - p.s, q.t - p.t
        slope = float("inf") if dx == 0 else dy / dx
        out["q"] = [q.s, q.t]
        out["slope"] = slope
        out["direction_angle"] = direction_angle(p, q)
        out["endpoint_distance"] = endpoint_distance(p, q)
        out["interior_minimum"] = has_interior_minimum(p, q)
    return out


def cmd_volume(args) -> dict[str, Any]:
    if args.seed is None:
        raise UsageError("--seed is required")
    out = _stamp("volume", args.seed)
    exact = interior_fraction_exact()
    mc = interior_fraction_mc(args.samples, args.seed, args.workers, args.measure)
    out["measure"] = args.measure
    out["exact"] = exact.value if args.measure == "corner" else None
    out["monte_carlo"] = {
        "estimate": mc.value,
        "stderr": mc.stderr,
        "ci95": [mc.value - 1.96 * mc.stderr, mc.value + 1.96 * mc.stderr],
        "samples": mc.samples,
        "workers": mc.workers,
    }
    return out


def cmd_gaussian(args) -> dict[str, Any]:
    scan = scan_covariance(args.a, args.b, args.c, args.d, args.e)
    out = _stamp("gaussian")
    out["parameters"] = {"a": args.a, "b": args.b, "c": args.c, "d": args.d, "e": args.e}
    out["interval"] = [scan.lower, scan.upper]
    out["roots"] = list(scan.roots)
    out["degenerate"] = scan.degenerate
    out["location"] = scan.location.value
    out["t_star"] = scan.t_star
    out["i_star"] = info(scan.i_star)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infolandscape", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stochastic=False):
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--renormalize", action="store_true")
        if stochastic:
            p.add_argument("--seed", type=int)
            p.add_argument("--samples", type=int, default=10**6)
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--measure", choices=("corner", "simplex"), default="corner")

    p = sub.add_parser("analyze", help="decompose the information in a joint table s,x,y,p")
    p.add_argument("input")
    common(p)

    p = sub.add_parser("landscape", help="grid of I over the binary correlation domain")
    p.add_argument("joint", nargs="?")
    p.add_argument("--sx")
    p.add_argument("--sy")
    p.add_argument("--grid", type=int, default=101)
    common(p)

    p = sub.add_parser("discriminant", help="interior-minimum slopes and region for a corner point")
    p.add_argument("s", type=float)
    p.add_argument("t", type=float)
    p.add_argument("--q", nargs=2, type=float, metavar=("X", "Y"))
    common(p)

    p = sub.add_parser("volume", help="fraction of shuffle laws with an interior minimiser")
    common(p, stochastic=True)

    p = sub.add_parser("gaussian", help="scan Cov(X,Y) in the scalar Gaussian model")
    for name in "abcde":
        p.add_argument(name, type=float)
    common(p)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "analyze": cmd_analyze,
        "landscape": cmd_landscape,
        "discriminant": cmd_discriminant,
        "volume": cmd_volume,
        "gaussian": cmd_gaussian,
    }
    try:
        result = handlers[args.command](args)
    except (ParseError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (InvalidInput, InfoLandscapeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if isinstance(result, str):
        sys.stdout.write(result)
    elif args.format == "csv":
        sys.stdout.write(report_to_csv(result))
    else:
        sys.stdout.write(dump_report(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
