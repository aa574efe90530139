"""Direct solution of the assembled saddle-point system."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .projection import ProjectedField

__all__ = ["DiscreteSolution", "SingularSystemError", "solve", "weak_div_residual", "RESIDUAL_WARN"]

RESIDUAL_WARN = 1e-8


class SingularSystemError(RuntimeError):
    """The saddle system could not be factorized."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


@dataclass
class DiscreteSolution:
    velocity: ProjectedField
    pressure: np.ndarray  # (n_cells, dim P_{k-1})
    multiplier: float
    residual: float
    vector: np.ndarray
    status: str = "ok"

    @property
    def k(self):
        return self.velocity.degree


def _pinned_factor(K0, pin):
    keep = np.ones(K0.shape[0])
    keep[pin] = 0.0
    D = sp.diags(keep)
    Kp = (D @ K0 @ D + sp.diags(1.0 - keep)).tocsc()
    try:
        return spla.splu(Kp, permc_spec="COLAMD"), keep
    except RuntimeError as exc:
        match = re.search(r"(\d+)", str(exc))
        pivot = int(match.group(1)) if match else None
        raise SingularSystemError(f"saddle system is singular ({exc})", pivot) from exc


def solve(system):
    """Solve the bordered saddle system by sparse LU (SuperLU).

    The mean-zero multiplier row is dense over the pressure block, which
    ruins fill-reducing orderings, so it is not factorized directly.  With
    z the indicator of the cell-constant pressure modes (the kernel of the
    unbordered block K0) and c the multiplier column,

        lambda = z.b / z.c,
        K0 y = b - c lambda   (one pressure DOF pinned to 0),
        x = y - (c.y / c.z) z,

    which is the exact solution of the bordered system.  The residual is
    measured against the full bordered matrix.

    Raises
    ------
    SingularSystemError
        If factorization hits an exactly zero pivot; ``pivot`` holds the
        reported column when SuperLU gives one.
    """
    K = system.matrix
    dm = system.dofmap
    n = dm.multiplier_index
    b_full = system.rhs
    b = b_full[:n]
    c = np.zeros(n)
    c[dm.pressure_slice()] = system.m
    z = np.zeros(n)
    z[dm.pressure_offset + dm.nkm1 * np.arange(dm.mesh.n_cells)] = 1.0
    lam = float(z @ b) / float(z @ c)
    K0 = K[:n, :n]
    lu, keep = _pinned_factor(K0, dm.pressure_offset)
    y = lu.solve((b - lam * c) * keep)
    x = np.empty(n + 1)
    x[:n] = y - (c @ y - b_full[n]) / (c @ z) * z
    x[n] = lam

    if not np.all(np.isfinite(x)):
        raise SingularSystemError("saddle system solve produced non-finite values")
    bnorm = np.linalg.norm(b_full)
    res = np.linalg.norm(K @ x - b_full)
    rel = res / bnorm if bnorm > 0 else res
    status = "ok"
    if rel > RESIDUAL_WARN:
        status = "warning: residual above tolerance"
        warnings.warn(f"relative residual {rel:.3e} exceeds {RESIDUAL_WARN:g}", RuntimeWarning, stacklevel=2)

    velocity = dm.velocity_field(x)
    pressure = x[dm.pressure_slice()].reshape(dm.mesh.n_cells, dm.nkm1).copy()
    return DiscreteSolution(velocity, pressure, float(x[dm.multiplier_index]), float(rel), x, status)


def weak_div_residual(solution, system):
    """(sum_T ||div_w u_h||_T^2)^(1/2) using the scheme's own operators."""
    ops_cache = system.operators
    dm = system.dofmap
    total = 0.0
    for ops, cells in ops_cache.groups():
        U = dm.local_vectors(solution.velocity, cells)
        d = U @ ops.div.T  # (n, nkm1)
        total += float(np.einsum("ni,ij,nj->", d, ops.mass_km1, d))
    return float(np.sqrt(max(total, 0.0)))
