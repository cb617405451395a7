"""Command line entry point ``cosserat-fv``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .harness import METHODS, HarnessError, RunConfig, run_convergence, write_csv
from .mesh import FAMILIES, generate_structured, mesh_io_write
from .mms import CASES
from .verify import verify_suite


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cosserat-fv",
                                description="Finite volume and mixed finite element solvers for Cosserat elasticity.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="convergence study written to CSV")
    run.add_argument("--example", required=True, choices=CASES)
    run.add_argument("--method", default="both", choices=METHODS + ("both",))
    run.add_argument("--base-n", type=int, default=None, help="coarsest mesh resolution")
    run.add_argument("--levels", type=int, default=4, help="number of uniform refinements")
    run.add_argument("--lambda", dest="lam", type=_float_list, default=None,
                     help="Lame lambda values for the smooth example, e.g. 10,1e8")
    run.add_argument("--kappa", type=_float_list, default=None,
                     help="contrast values for the heterogeneous example, e.g. 1e4,1e-4")
    run.add_argument("--mesh-family", default=None, choices=FAMILIES)
    run.add_argument("--solver", default="direct", choices=("direct", "iterative"))
    run.add_argument("--rotation-is-stress", action="store_true",
                     help="cosserat example: read the prescribed rotation as r instead of r_s")
    run.add_argument("--out", required=True, help="output CSV path ('-' for stdout)")
    run.add_argument("--quiet", action="store_true")

    mesh = sub.add_parser("mesh", help="mesh utilities")
    msub = mesh.add_subparsers(dest="mesh_command", required=True)
    gen = msub.add_parser("gen", help="write a structured mesh")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--family", default="uniform", choices=FAMILIES)
    gen.add_argument("--out", required=True, help="output path ('-' for stdout)")

    sub.add_parser("verify", help="run the operator and discretization self-checks")
    return p


def _params(args) -> list[float] | None:
    if args.example == "smooth":
        if args.kappa is not None:
            raise ValueError("--kappa applies to the heterogeneous example only")
        return args.lam
    if args.example == "heterogeneous":
        if args.lam is not None:
            raise ValueError("--lambda applies to the smooth example only")
        return args.kappa
    if args.lam is not None or args.kappa is not None:
        raise ValueError("the cosserat example takes no --lambda/--kappa")
    return None


def _cmd_run(args) -> int:
    methods = METHODS if args.method == "both" else (args.method,)
    try:
        config = RunConfig(args.example, methods, args.base_n, args.levels, _params(args),
                           args.mesh_family, None if args.out == "-" else args.out, args.solver,
                           args.rotation_is_stress)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    def progress(row):
        if not args.quiet:
            print(f"{row.example} {row.method} {row.param_name}={row.param_value:g} level {row.level} "
                  f"cells={row.n_cells} e_u={row.e_u:.3e} e_sigma={row.e_sigma:.3e}", file=sys.stderr)

    try:
        rows = run_convergence(config, progress)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = write_csv(rows, config)
    if config.out is None:
        sys.stdout.write(text)
    return 0


def _cmd_mesh(args) -> int:
    try:
        text = mesh_io_write(generate_structured(args.n, args.family))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    return 0


def _cmd_verify(args) -> int:
    checks = verify_suite()
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "mesh":
        return _cmd_mesh(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
