"""Convergence studies, single runs, and table I/O."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble, export_matrix_market
from .cases import ManufacturedCase, case_s2d
from .errors import ErrorReport, LevelErrors, convergence_orders, energy_error, l2_pressure_error, l2_velocity_error
from .mesh import MeshFamily, build_mesh
from .projection import project_velocity
from .solver import solve, weak_div_residual
from .weak_ops import LocalOperatorCache

__all__ = [
    "RunConfig",
    "resolve_grad_degree",
    "solve_level",
    "run_convergence",
    "run_single",
    "render_markdown",
    "render_csv",
    "parse_csv",
    "sample_solution",
]

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    family: str = "triangle"
    levels: tuple = (3, 5)
    k: int = 1
    grad_degree: object = "auto"  # int, "auto" or "theory"
    kappa_inv: float = 1.0
    quad_bump: int = 0
    format: str = "markdown"
    out: str | None = None
    export_matrix: str | None = None
    case: ManufacturedCase | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 1 <= self.k <= 4:
            raise ValueError(f"k must be in 1..4, got {self.k}")
        if isinstance(self.grad_degree, int) and self.grad_degree < self.k - 1:
            raise ValueError(f"grad degree r={self.grad_degree} must be >= k-1")
        if self.format not in ("markdown", "csv"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.kappa_inv < 0:
            raise ValueError("kappa_inv must be nonnegative")
        lo, hi = self.levels
        if lo < 1 or hi < lo:
            raise ValueError(f"bad level range {self.levels}")


def resolve_grad_degree(config, mesh):
    """Weak gradient degree for a run.

    ``auto``: k+1 on triangles, k+3 on non-convex families.
    ``theory``: N+k-1 for convex cells, 2N+k-1 otherwise, N the largest
    number of cell edges.
    """
    r = config.grad_degree
    if isinstance(r, str) and r.isdigit():
        r = int(r)
    convex = config.family == MeshFamily.TRIANGLE.value
    if r == "auto":
        return config.k + 1 if convex else config.k + 3
    if r == "theory":
        n = max(len(c) for c in mesh.cells)
        return n + config.k - 1 if convex else 2 * n + config.k - 1
    return int(r)


def solve_level(mesh, k, r, case, *, quad_bump=0, export_matrix=None):
    """Assemble, solve and measure one mesh; returns (LevelErrors, system, solution)."""
    qdeg = 2 * max(r, k) + 2 + quad_bump
    ops = LocalOperatorCache(mesh, k, r, qdeg)
    system = assemble(mesh, k, r, case.kappa_inv, case.f, operators=ops)
    if export_matrix:
        export_matrix_market(system, export_matrix)
    sol = solve(system)
    Qu = project_velocity(case.u, mesh, k)
    errs = LevelErrors(
        level=0,
        h=mesh.h,
        velocity_l2=l2_velocity_error(sol, Qu, ops),
        energy=energy_error(sol, Qu, ops, case.kappa_inv, system.dofmap),
        pressure_l2=l2_pressure_error(sol, case.p, ops),
        div_residual=weak_div_residual(sol, system),
        n_dofs=system.dofmap.size,
    )
    return errs, system, sol


def run_convergence(config):
    """Loop over levels; returns (ErrorReport, rendered table).

    A failing level is recorded with a diagnostic and the loop continues.
    """
    case = config.case or case_s2d(config.kappa_inv)
    if case.kappa_inv != config.kappa_inv:
        case = case.with_kappa_inv(config.kappa_inv)
    report = ErrorReport(label=f"{config.family} k={config.k}")
    lo, hi = config.levels
    for level in range(lo, hi + 1):
        try:
            mesh = build_mesh(config.family, level)
            r = resolve_grad_degree(config, mesh)
            report.label = f"{config.family} k={config.k} r={r} kappa_inv={config.kappa_inv:g}"
            export = None
            if config.export_matrix:
                export = str(config.export_matrix).format(level=level)
            errs, _, _ = solve_level(mesh, config.k, r, case, quad_bump=config.quad_bump, export_matrix=export)
            errs.level = level
        except Exception as exc:  # noqa: BLE001 - recorded per level
            log.warning("level %d failed: %s", level, exc)
            errs = LevelErrors(level, math.nan, math.nan, math.nan, math.nan, diagnostic=f"{type(exc).__name__}: {exc}")
        report.levels.append(errs)
        log.info("level %d done: %s", level, errs)
    convergence_orders(report)
    table = render_csv(report) if config.format == "csv" else render_markdown(report)
    return report, table


# ---------------------------------------------------------------------------
# Rendering


def _fmt_err(x):
    if not np.isfinite(x):
        return "-"
    # 0.317E-3 style
    m, e = f"{x:.2E}".split("E")
    return f"0.{m.replace('.', '')}E{int(e) + 1:+d}"


def _fmt_order(o):
    return "-" if o is None or not np.isfinite(o) else f"{o:.1f}"


def render_markdown(report):
    lines = [
        f"<!-- {report.label} -->" if report.label else "",
        "| G_i | ‖Q_h u − u_h‖ | O(h^r) | \\|\\|\\|Q_h u − u_h\\|\\|\\| | O(h^r) | ‖p − p_h‖ | O(h^r) |",
        "|---:|---:|---:|---:|---:|---:|---:|",
    ]
    for lev, orders in zip(report.levels, report.orders):
        if lev.diagnostic:
            lines.append(f"| {lev.level} | failed: {lev.diagnostic} | | | | | |")
            continue
        o = orders or {}
        lines.append(
            f"| {lev.level} | {_fmt_err(lev.velocity_l2)} | {_fmt_order(o.get('velocity_l2'))} "
            f"| {_fmt_err(lev.energy)} | {_fmt_order(o.get('energy'))} "
            f"| {_fmt_err(lev.pressure_l2)} | {_fmt_order(o.get('pressure_l2'))} |"
        )
    return "\n".join(line for line in lines if line) + "\n"


CSV_FIELDS = [
    "level",
    "h",
    "velocity_l2",
    "velocity_l2_order",
    "energy",
    "energy_order",
    "pressure_l2",
    "pressure_l2_order",
    "div_residual",
    "n_dofs",
    "diagnostic",
]


def render_csv(report):
    """CSV with round-trippable float representations."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for lev, orders in zip(report.levels, report.orders):
        o = orders or {}
        w.writerow(
            [
                lev.level,
                repr(lev.h),
                repr(lev.velocity_l2),
                repr(o.get("velocity_l2", math.nan)),
                repr(lev.energy),
                repr(o.get("energy", math.nan)),
                repr(lev.pressure_l2),
                repr(o.get("pressure_l2", math.nan)),
                repr(lev.div_residual),
                lev.n_dofs,
                lev.diagnostic,
            ]
        )
    return buf.getvalue()


def parse_csv(text):
    """Inverse of :func:`render_csv`."""
    report = ErrorReport()
    for row in csv.DictReader(io.StringIO(text)):
        report.levels.append(
            LevelErrors(
                level=int(row["level"]),
                h=float(row["h"]),
                velocity_l2=float(row["velocity_l2"]),
                energy=float(row["energy"]),
                pressure_l2=float(row["pressure_l2"]),
                div_residual=float(row["div_residual"]),
                n_dofs=int(row["n_dofs"]),
                diagnostic=row["diagnostic"],
            )
        )
        vals = {c: float(row[f"{c}_order"]) for c in ErrorReport.COLUMNS}
        report.orders.append(None if all(math.isnan(v) for v in vals.values()) else vals)
    return report


# ---------------------------------------------------------------------------
# Single runs


def _points_in_polygon(pts, poly):
    """Boolean mask of points inside (or on the boundary of) a polygon."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)
        within = (np.minimum(x0, x1) - 1e-12 <= x) & (x <= np.maximum(x0, x1) + 1e-12)
        within &= (np.minimum(y0, y1) - 1e-12 <= y) & (y <= np.maximum(y0, y1) + 1e-12)
        on_edge |= within & (np.abs(cross) <= 1e-12 * max(abs(x1 - x0), abs(y1 - y0), 1e-300))
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xint)
    return inside | on_edge


def sample_solution(solution, system, n_samples=21):
    """Evaluate u_0 and p_h on a uniform grid of the unit square.

    Returns a structured dict of arrays: x, y, cell, flagged, u1, u2, p.
    Grid points found in no cell are assigned to the nearest centroid and
    flagged.
    """
    mesh = system.dofmap.mesh
    ops_cache = system.operators
    g = np.linspace(0.0, 1.0, n_samples)
    X, Y = np.meshgrid(g, g)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    owner = np.full(len(pts), -1, dtype=np.int64)
    for c in range(mesh.n_cells):
        poly = mesh.cell_points(c)
        lo, hi = poly.min(0) - 1e-12, poly.max(0) + 1e-12
        cand = np.flatnonzero((owner < 0) & np.all((pts >= lo) & (pts <= hi), axis=1))
        if cand.size:
            hit = _points_in_polygon(pts[cand], poly)
            owner[cand[hit]] = c
    flagged = owner < 0
    if flagged.any():
        d = ((pts[flagged, None, :] - mesh.centroids[None]) ** 2).sum(-1)
        owner[flagged] = d.argmin(1)
    u = np.empty((len(pts), 2))
    p = np.empty(len(pts))
    for i, (pt, c) in enumerate(zip(pts, owner)):
        ops = ops_cache[c]
        rel = pt - ops_cache.origin(c)
        bk = ops.basis_k.eval(rel[None])[0]
        u[i] = solution.velocity.cell[c] @ bk
        p[i] = solution.pressure[c] @ ops.basis_km1.eval(rel[None])[0]
    return {"x": pts[:, 0], "y": pts[:, 1], "cell": owner, "flagged": flagged, "u1": u[:, 0], "u2": u[:, 1], "p": p}


def run_single(config, mesh=None, n_samples=21):
    """One assemble + solve.

    Returns (samples dict, coefficient CSV text, sample CSV text, solution,
    system).  ``mesh`` overrides the generated mesh (e.g. one read from a
    mesh file).
    """
    case = config.case or case_s2d(config.kappa_inv)
    if case.kappa_inv != config.kappa_inv:
        case = case.with_kappa_inv(config.kappa_inv)
    if mesh is None:
        mesh = build_mesh(config.family, config.levels[1])
    r = resolve_grad_degree(config, mesh)
    qdeg = 2 * max(r, config.k) + 2 + config.quad_bump
    ops = LocalOperatorCache(mesh, config.k, r, qdeg)
    system = assemble(mesh, config.k, r, case.kappa_inv, case.f, operators=ops)
    if config.export_matrix:
        export_matrix_market(system, config.export_matrix)
    sol = solve(system)
    samples = sample_solution(sol, system, n_samples)

    sbuf = io.StringIO()
    w = csv.writer(sbuf, lineterminator="\n")
    w.writerow(["x", "y", "cell", "flagged", "u1", "u2", "p"])
    for i in range(len(samples["x"])):
        w.writerow(
            [
                repr(float(samples["x"][i])),
                repr(float(samples["y"][i])),
                int(samples["cell"][i]),
                int(samples["flagged"][i]),
                repr(float(samples["u1"][i])),
                repr(float(samples["u2"][i])),
                repr(float(samples["p"][i])),
            ]
        )
    cbuf = io.StringIO()
    w = csv.writer(cbuf, lineterminator="\n")
    w.writerow(["kind", "entity", "component", "index", "value"])
    for c in range(mesh.n_cells):
        for comp in range(2):
            for j, v in enumerate(sol.velocity.cell[c, comp]):
                w.writerow(["u0", c, comp, j, repr(float(v))])
    for e in range(mesh.n_edges):
        for comp in range(2):
            for j, v in enumerate(sol.velocity.edge[e, comp]):
                w.writerow(["ub", e, comp, j, repr(float(v))])
    for c in range(mesh.n_cells):
        for j, v in enumerate(sol.pressure[c]):
            w.writerow(["p", c, 0, j, repr(float(v))])
    return samples, cbuf.getvalue(), sbuf.getvalue(), sol, system
