"""Command-line driver: ``wgbrinkman {mesh,solve,converge}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .mesh import MeshFamily, build_mesh, read_mesh, write_mesh
from .solver import weak_div_residual
from .study import RunConfig, run_convergence, run_single

FAMILIES = [f.value for f in MeshFamily]


def _levels(text):
    if "-" in text:
        lo, hi = text.split("-", 1)
        return int(lo), int(hi)
    return int(text), int(text)


def _grad_degree(text):
    return int(text) if text.isdigit() else text


def _common(p):
    p.add_argument("--family", choices=FAMILIES, default="triangle")
    p.add_argument("--levels", type=_levels, default=(3, 5), help="level or range, e.g. 3-6")
    p.add_argument("--k", type=int, default=1, help="velocity degree (1..4)")
    p.add_argument(
        "--grad-degree",
        type=_grad_degree,
        default="auto",
        help="weak gradient degree: integer, 'auto' (k+1 triangles, k+3 non-convex) or 'theory'",
    )
    p.add_argument("--kappa-inv", type=float, default=1.0)
    p.add_argument("--quad-bump", type=int, default=0, help="extra cell quadrature exactness")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--export-matrix", default=None, help="Matrix Market path; '{level}' is substituted")


def build_parser():
    parser = argparse.ArgumentParser(prog="wgbrinkman", description="Stabilizer-free weak Galerkin Brinkman solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    pm = sub.add_parser("mesh", help="generate a mesh and write it in plain-text format")
    pm.add_argument("--family", choices=FAMILIES, default="triangle")
    pm.add_argument("--level", type=int, default=3)
    pm.add_argument("--out", type=Path, default=None)

    ps = sub.add_parser("solve", help="single solve with sampled field output")
    _common(ps)
    ps.add_argument("--mesh", type=Path, default=None, help="read the mesh from a file instead")
    ps.add_argument("--samples", type=int, default=21, help="sample grid points per direction")

    pc = sub.add_parser("converge", help="convergence study table")
    _common(pc)
    pc.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    return parser


def _config(args, fmt="markdown"):
    return RunConfig(
        family=args.family,
        levels=args.levels,
        k=args.k,
        grad_degree=args.grad_degree,
        kappa_inv=args.kappa_inv,
        quad_bump=args.quad_bump,
        format=fmt,
        out=str(args.out) if args.out else None,
        export_matrix=args.export_matrix,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "mesh":
        mesh = build_mesh(args.family, args.level)
        if args.out:
            with open(args.out, "w") as fh:
                write_mesh(mesh, fh)
        else:
            write_mesh(mesh, sys.stdout)
        return 0

    if args.command == "converge":
        _, table = run_convergence(_config(args, args.format))
        if args.out:
            args.out.write_text(table)
        else:
            sys.stdout.write(table)
        return 0

    mesh = None
    if args.mesh:
        with open(args.mesh) as fh:
            mesh = read_mesh(fh)
    _, coeffs, samples, sol, system = run_single(_config(args), mesh, args.samples)
    if args.out:
        args.out.write_text(samples)
        args.out.with_suffix(".coeffs.csv").write_text(coeffs)
    else:
        sys.stdout.write(samples)
    print(
        f"relative residual {sol.residual:.3e}  weak-div residual {weak_div_residual(sol, system):.3e}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
