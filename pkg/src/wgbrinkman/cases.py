"""Manufactured solutions on the unit square.

The main case uses the stream function

    psi(x, y) = -4 x^2 (1-x)^2 y^2 (1-y)^2,    u = (d psi/dy, -d psi/dx),

which gives

    u1 = -8 (x^2 - 2x^3 + x^4)(y - 3y^2 + 2y^3)
    u2 =  8 (x - 3x^2 + 2x^3)(y^2 - 2y^3 + y^4)

and the pressure p = (x - 1/2)^3.  The load is f = -lap(u) + grad(p) + kappa_inv * u.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["ManufacturedCase", "case_s2d", "polynomial_patch_case", "zero_case"]


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact fields of a Brinkman problem with viscosity 1.

    Vector callables return arrays shaped (2, npts); ``grad_u`` returns
    (2, 2, npts) with ``grad_u[i, j] = d u_i / d x_j``.
    """

    name: str
    kappa_inv: float
    u: Callable
    grad_u: Callable
    lap_u: Callable
    p: Callable
    grad_p: Callable

    def div_u(self, x, y):
        g = self.grad_u(x, y)
        return g[0, 0] + g[1, 1]

    def f(self, x, y):
        u = np.asarray(self.u(x, y))
        return -np.asarray(self.lap_u(x, y)) + np.asarray(self.grad_p(x, y)) + self.kappa_inv * u

    def with_kappa_inv(self, kappa_inv):
        return ManufacturedCase(self.name, float(kappa_inv), self.u, self.grad_u, self.lap_u, self.p, self.grad_p)


# one-dimensional factors and derivatives
def _a(t):  # t^2 - 2t^3 + t^4 = t^2 (1-t)^2
    return t**2 - 2 * t**3 + t**4


def _da(t):
    return 2 * t - 6 * t**2 + 4 * t**3


def _dda(t):
    return 2 - 12 * t + 12 * t**2


def _ddda(t):
    return -12 + 24 * t


def case_s2d(kappa_inv=1.0):
    """The 2D benchmark: u = curl of 4 x^2(1-x)^2 y^2(1-y)^2 (up to sign),
    p = (x - 1/2)^3."""
    # u1 = -4 a(x) a'(y), u2 = 4 a'(x) a(y)
    def u(x, y):
        return np.array([-4 * _a(x) * _da(y), 4 * _da(x) * _a(y)])

    def grad_u(x, y):
        return np.array(
            [
                [-4 * _da(x) * _da(y), -4 * _a(x) * _dda(y)],
                [4 * _dda(x) * _a(y), 4 * _da(x) * _da(y)],
            ]
        )

    def lap_u(x, y):
        return np.array(
            [
                -4 * (_dda(x) * _da(y) + _a(x) * _ddda(y)),
                4 * (_ddda(x) * _a(y) + _da(x) * _dda(y)),
            ]
        )

    def p(x, y):
        return (x - 0.5) ** 3 + 0.0 * y

    def grad_p(x, y):
        return np.array([3 * (x - 0.5) ** 2, 0.0 * y])

    return ManufacturedCase("s2d", float(kappa_inv), u, grad_u, lap_u, p, grad_p)


def polynomial_patch_case(k, kappa_inv=1.0):
    """Zero velocity with a mean-zero pressure in P_{k-1}.

    A nonzero polynomial velocity of degree <= 2 cannot vanish on the whole
    boundary of the square, so for k <= 2 the velocity part is zero and the
    test exercises the pressure/load consistency.  The pressure is
    (x - 1/2) - (y - 1/2) for k = 2 and adds (x - 1/2)(y - 1/2) for k >= 3.
    """
    zero2 = lambda x, y: np.zeros((2,) + np.shape(x))  # noqa: E731

    def p(x, y):
        out = np.zeros_like(np.asarray(x, dtype=float))
        if k >= 2:
            out = out + (x - 0.5) - (y - 0.5)
        if k >= 3:
            out = out + (x - 0.5) * (y - 0.5)
        return out

    def grad_p(x, y):
        gx = np.zeros_like(np.asarray(x, dtype=float))
        gy = np.zeros_like(gx)
        if k >= 2:
            gx, gy = gx + 1.0, gy - 1.0
        if k >= 3:
            gx, gy = gx + (y - 0.5), gy + (x - 0.5)
        return np.array([gx, gy])

    return ManufacturedCase(
        f"patch_k{k}",
        float(kappa_inv),
        zero2,
        lambda x, y: np.zeros((2, 2) + np.shape(x)),
        zero2,
        p,
        grad_p,
    )


def zero_case(kappa_inv=1.0):
    zero2 = lambda x, y: np.zeros((2,) + np.shape(x))  # noqa: E731
    zero1 = lambda x, y: np.zeros(np.shape(x))  # noqa: E731
    return ManufacturedCase("zero", float(kappa_inv), zero2, lambda x, y: np.zeros((2, 2) + np.shape(x)), zero2, zero1, zero2)
