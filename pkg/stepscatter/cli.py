"""
Command-line interface.

Usage:
    stepscatter [global flags] green eval --src 0,0.4 --at 1.0,0.5
    stepscatter wh identities
    stepscatter solve --example rounded_step --theta 1.0471975511965976
    stepscatter --format csv --output ex1_D.csv convergence --example step --sweep D
    stepscatter g1-check
    stepscatter radiation --src 0,0.4

Results go to stdout (or --output) as CSV or JSON. Failures print a JSON
object with the error text and its category to stderr and exit with the
category's code.
"""

import argparse
import json
import logging
import math
import sys
from typing import Any

from .config import Config
from .errors import ConfigError, exit_code_for
from .green_function import REPRESENTATIONS
from .models import ExperimentSpec, PmlProfile
from .output import FORMATS, emit
from .scattering_service import ScatteringService


logger = logging.getLogger(__name__)

USAGE_EXIT = 2
DEFAULT_WH_K = 2.0 * math.pi / 1.1


def _point(text: str) -> tuple[float, float]:
    """Parse ``x1,x2``."""
    try:
        a, b = (float(part) for part in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected 'x1,x2', got '{text}'") from e
    return a, b


def _floats(text: str) -> list[float]:
    """Parse a comma-separated list of numbers."""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def _add_medium(parser: argparse.ArgumentParser, k_default: float, src_default: str | None = "0,0.4") -> None:
    parser.add_argument("--k", type=float, default=k_default, help="wavenumber")
    parser.add_argument("--h", type=float, default=1.0, help="step height")
    if src_default is not None:
        parser.add_argument("--src", type=_point, default=_point(src_default), help="source point x1,x2")


def _add_box(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta", type=float, default=math.pi / 3, help="incident angle in (0, pi)")
    parser.add_argument("--wavelength", type=float, default=1.0)
    parser.add_argument("--h", type=float, default=1.0, help="step height of the built-in examples")
    parser.add_argument("--L1", type=float, default=5.0)
    parser.add_argument("--L2", type=float, default=5.0)
    parser.add_argument(
        "--example", default="step",
        choices=["step", "rounded_step", "step_with_inclusion", "custom"],
    )
    parser.add_argument("--geometry", default=None, help="geometry file (for --example custom)")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with every subcommand."""
    parser = argparse.ArgumentParser(
        prog="stepscatter",
        description="Green function and PML-BIE solver for scattering by a step",
    )
    parser.add_argument("--tol", type=float, default=None, help="quadrature tolerance")
    parser.add_argument("--nodes", type=int, default=None, help="nodes per smooth segment")
    parser.add_argument("--format", choices=FORMATS, default="csv")
    parser.add_argument("--output", default=None, help="write to this file instead of stdout")
    parser.add_argument("--config", default=None, help="file of 'key = value' lines")
    commands = parser.add_subparsers(dest="command", required=True)

    green = commands.add_parser("green", help="Green function of the cracked half-plane with a step")
    green_ops = green.add_subparsers(dest="action", required=True)

    p = green_ops.add_parser("eval", help="G(x; x*) at field points")
    _add_medium(p, 2.0 * math.pi)
    p.add_argument("--at", type=_point, action="append", required=True, help="field point x1,x2")
    p.add_argument("--representation", choices=REPRESENTATIONS, default="auto")
    p.add_argument("--gradient", action="store_true")

    p = green_ops.add_parser("farfield", help="far-field pattern of G")
    _add_medium(p, 2.0 * math.pi)
    p.add_argument("--angles", type=_floats, default=[math.pi / 6, math.pi / 2, 5 * math.pi / 6])
    p.add_argument("--part", choices=["total", "scattered"], default="total")

    p = green_ops.add_parser("modal", help="waveguide modal coefficients")
    _add_medium(p, 2.0 * math.pi)
    p.add_argument("--modes", type=int, default=None)

    p = green_ops.add_parser("pml-extend", help="G continued into a linear PML stretch")
    _add_medium(p, DEFAULT_WH_K)
    p.add_argument("--at", type=_point, action="append", required=True)
    p.add_argument("--start", type=float, default=1.5)
    p.add_argument("--slope", type=float, default=3.0)
    p.add_argument("--part", choices=["total", "scattered"], default="scattered")

    wh = commands.add_parser("wh", help="Wiener–Hopf factors")
    wh_ops = wh.add_subparsers(dest="action", required=True)
    p = wh_ops.add_parser("factors", help="K+ and K- on the contour")
    _add_medium(p, DEFAULT_WH_K, src_default=None)
    p.add_argument("--n", type=int, default=50)
    p = wh_ops.add_parser("identities", help="factorization identity residuals")
    _add_medium(p, DEFAULT_WH_K)
    p.add_argument("--n", type=int, default=50)

    p = commands.add_parser("solve", help="plane-wave PML-BIE solve")
    _add_box(p)
    p.add_argument("--D", type=float, default=2.0, help="PML thickness (both axes)")
    p.add_argument("--S", type=float, default=2.0, help="absorbing strength")
    p.add_argument("--at", type=_point, action="append", default=None)
    p.add_argument("--angles", type=_floats, default=None, help="far-field angles instead of points")
    p.add_argument("--radius", type=float, default=2.0, help="arc radius of the far-field integral")
    p.add_argument("--subtract-step", action="store_true",
                   help="subtract the flat step's field before the far-field integral")

    p = commands.add_parser("convergence", help="E_rel sweep over D or S")
    _add_box(p)
    p.add_argument("--sweep", choices=["D", "S"], default="D")
    p.add_argument("--values", type=_floats, default=None)

    p = commands.add_parser("g1-check", help="PML-BIE against Wiener–Hopf G1")
    _add_medium(p, DEFAULT_WH_K)
    p.add_argument("--start", type=float, default=1.5)
    p.add_argument("--slope", type=float, default=3.0)
    p.add_argument("--thickness", type=float, default=2.0)
    p.add_argument("--points", type=int, default=50)

    p = commands.add_parser("radiation", help="radiation-condition diagnostics of G")
    _add_medium(p, 2.0 * math.pi)
    p.add_argument("--radii", type=_floats, default=None)
    p.add_argument("--angles", type=_floats, default=None)
    p.add_argument("--n-arc", type=int, default=32)
    return parser


def _run(service: ScatteringService, args: argparse.Namespace) -> tuple[Any, dict[str, Any]]:
    """Dispatch a parsed command to the service."""
    if args.command == "green":
        params = {"k": args.k, "h": args.h, "src_x1": args.src[0], "src_x2": args.src[1]}
        if args.action == "eval":
            params["representation"] = args.representation
            return service.green_eval(args.k, args.h, args.src, args.at, args.representation,
                                      args.gradient), params
        if args.action == "farfield":
            params["part"] = args.part
            return service.far_field(args.k, args.h, args.src, args.angles, args.part), params
        if args.action == "modal":
            return service.modal(args.k, args.h, args.src, args.modes), params
        params.update(start=args.start, slope=args.slope, part=args.part)
        return service.pml_extend(args.k, args.h, args.src, args.at, args.start, args.slope,
                                  args.part), params

    if args.command == "wh":
        params = {"k": args.k, "h": args.h, "n": args.n}
        if args.action == "factors":
            return service.wh_factors(args.k, args.h, args.n), params
        params.update(src_x1=args.src[0], src_x2=args.src[1])
        return service.wh_identities(args.k, args.h, args.src, args.n), params

    if args.command == "solve":
        profile = PmlProfile(args.L1, args.L2, args.D, args.D, args.S)
        params = {"wavelength": args.wavelength, "h": args.h, "L1": args.L1, "L2": args.L2,
                  "D": args.D, "S": args.S, "nodes": service.config.nodes}
        if args.angles is not None:
            params.update(theta=args.theta, example=args.example, subtract_step=args.subtract_step)
            return service.solution_far_field(
                args.example, args.theta, args.wavelength, args.angles, args.radius, args.h,
                profile, args.geometry, subtract_step=args.subtract_step,
            ), params
        return service.solve_scattering(
            args.example, args.theta, args.wavelength, args.h, profile, args.at, args.geometry
        ), params

    if args.command == "convergence":
        spec = ExperimentSpec(
            example=args.example, sweep=args.sweep, resolution=service.config.nodes,
            theta=args.theta, wavelength=args.wavelength, h=args.h, L1=args.L1, L2=args.L2,
            geometry_file=args.geometry,
        )
        if args.values is not None:
            spec.values = args.values
        return service.run_convergence(spec), {}

    if args.command == "g1-check":
        x1 = [0.05 + (2.5 - 0.05) * j / (args.points - 1) for j in range(args.points)]
        return service.run_g1_crosscheck(args.k, args.h, args.src, x1, args.start, args.slope,
                                         args.thickness), {}

    if args.command == "radiation":
        return service.run_radiation_diagnostics(args.k, args.h, args.src, args.radii,
                                                 args.angles, args.n_arc), {}

    raise ValueError(f"Unknown command: {args.command}")


def _fail(error: BaseException, code: int) -> int:
    category = getattr(error, "category", "usage" if code == USAGE_EXIT else "error")
    print(json.dumps({"error": str(error), "category": category}, ensure_ascii=False), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    """
    Run the CLI.

    Args:
        argv: Arguments without the program name; defaults to sys.argv[1:].

    Returns:
        Process exit code.
    """
    args = build_parser().parse_args(argv)
    try:
        config = Config(args.config)
    except ConfigError as e:
        return _fail(e, exit_code_for(e))
    if args.tol is not None:
        if not 0.0 < args.tol < 1.0:
            return _fail(ValueError(f"--tol must lie in (0, 1), got {args.tol}"), USAGE_EXIT)
        config.tolerance = args.tol
    if args.nodes is not None:
        if args.nodes < config.GAUSS_ORDER:
            return _fail(ValueError(f"--nodes must be at least {config.GAUSS_ORDER}"), USAGE_EXIT)
        config.nodes = args.nodes

    service = ScatteringService(config)
    try:
        result, params = _run(service, args)
        text = emit(result, args.format, args.output, params)
    except ValueError as e:
        logger.error(f"Invalid arguments for {args.command}: {e}")
        return _fail(e, USAGE_EXIT)
    except Exception as e:
        logger.error(f"Command {args.command} failed: {e}", exc_info=True)
        return _fail(e, exit_code_for(e))
    if args.output is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
