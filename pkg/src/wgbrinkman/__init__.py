"""Stabilizer-free weak Galerkin finite elements for the Brinkman equations
on 2D polygonal (including non-convex) meshes."""

from .assembly import DofMap, SaddleSystem, assemble, export_matrix_market, load_vector
from .cases import ManufacturedCase, case_s2d, polynomial_patch_case, zero_case
from .errors import (
    ErrorReport,
    LevelErrors,
    convergence_orders,
    discrete_h1_norm,
    energy_error,
    energy_norm,
    l2_pressure_error,
    l2_velocity_error,
    observed_order,
)
from .mesh import (
    MeshError,
    MeshFamily,
    PolygonalMesh,
    build_mesh,
    build_nonconvex_mesh,
    build_uniform_triangle_mesh,
    outward_normal,
    read_mesh,
    triangulate_cell,
    write_mesh,
)
from .projection import ProjectedField, project_cell, project_cells, project_edge, project_edges, project_velocity
from .solver import DiscreteSolution, SingularSystemError, solve, weak_div_residual
from .study import RunConfig, parse_csv, render_csv, render_markdown, run_convergence, run_single
from .weak_ops import LocalOperatorCache, local_operators, weak_divergence_matrix, weak_gradient_matrix

__version__ = "0.1.0"
