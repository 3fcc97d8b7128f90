"""Cell-level integral identities for bilinear interpolation and inverse estimates.

For a rectangle ``tau`` with centre ``(x_t, y_t)`` and sizes ``(h_x, h_y)`` put

    F(x) = ((x - x_t)^2 - h_x^2 / 4) / 2,    J(y) = ((y - y_t)^2 - h_y^2 / 4) / 2.

For ``g`` in C^3 and bilinear ``w`` the interpolation error ``g - g^I``
satisfies three exact identities (see :func:`lin_identity_sides`).  The
edge term of the third one is a difference of integrals over the right edge
(``x = x_i``) and the left edge (``x = x_{i-1}``), in that order; the
opposite orientation leaves an ``O(h^2)`` residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fem import QuadratureRule

__all__ = [
    "CellGeometry",
    "Bilinear",
    "NotBilinearError",
    "lin_identity_sides",
    "lin_identity_residual",
    "inverse_estimate_ratio",
    "INVERSE_ESTIMATES",
]

INVERSE_ESTIMATES = ("grad_x", "grad_y", "edge", "lp_to_lq")


class NotBilinearError(ValueError):
    pass


@dataclass(frozen=True)
class CellGeometry:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("cell must have positive width and height")

    @classmethod
    def from_mesh(cls, mesh, i: int, j: int) -> "CellGeometry":
        """Cell ``tau_ij`` of a mesh, 1-based."""
        return cls(mesh.xs[i - 1], mesh.xs[i], mesh.ys[j - 1], mesh.ys[j])

    @property
    def hx(self) -> float:
        return self.x1 - self.x0

    @property
    def hy(self) -> float:
        return self.y1 - self.y0

    @property
    def center(self) -> tuple[float, float]:
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)

    def F(self, x):
        xc = 0.5 * (self.x0 + self.x1)
        return 0.5 * ((x - xc) ** 2 - self.hx**2 / 4)

    def J(self, y):
        yc = 0.5 * (self.y0 + self.y1)
        return 0.5 * ((y - yc) ** 2 - self.hy**2 / 4)

    def points(self, order: int):
        """Gauss points (flattened ``X``, ``Y``) and weights scaled to the cell."""
        q = QuadratureRule(order)
        X = self.x0 + self.hx * q.xi
        Y = self.y0 + self.hy * q.eta
        return X, Y, q.weights * self.hx * self.hy

    def edge_points(self, order: int):
        t, w = QuadratureRule(order).points_1d
        return self.y0 + self.hy * t, w * self.hy


@dataclass(frozen=True)
class Bilinear:
    """Bilinear function on ``cell`` given by its corner values.

    Corners are ordered ``(x0, y0), (x1, y0), (x0, y1), (x1, y1)``.  Working
    in cell-local coordinates keeps evaluation well conditioned on the tiny
    cells of the layer regions.
    """

    cell: CellGeometry
    v00: float
    v10: float
    v01: float
    v11: float

    def __call__(self, x, y, dx: int = 0, dy: int = 0):
        c = self.cell
        xi = (np.asarray(x, dtype=float) - c.x0) / c.hx
        eta = (np.asarray(y, dtype=float) - c.y0) / c.hy
        v00, v10, v01, v11 = self.v00, self.v10, self.v01, self.v11
        if (dx, dy) == (0, 0):
            return v00 * (1 - xi) * (1 - eta) + v10 * xi * (1 - eta) + v01 * (1 - xi) * eta + v11 * xi * eta
        if (dx, dy) == (1, 0):
            return ((v10 - v00) * (1 - eta) + (v11 - v01) * eta) / c.hx + 0 * xi
        if (dx, dy) == (0, 1):
            return ((v01 - v00) * (1 - xi) + (v11 - v10) * xi) / c.hy + 0 * eta
        shape = np.broadcast(xi, eta).shape
        if (dx, dy) == (1, 1):
            return np.full(shape, (v11 - v10 - v01 + v00) / (c.hx * c.hy))
        return np.zeros(shape)


def _as_bilinear(cell: CellGeometry, w) -> Bilinear:
    if isinstance(w, Bilinear):
        if w.cell != cell:
            raise ValueError("bilinear field belongs to a different cell")
        return w
    corners = [w(cell.x0, cell.y0), w(cell.x1, cell.y0), w(cell.x0, cell.y1), w(cell.x1, cell.y1)]
    fit = Bilinear(cell, *(float(v) for v in corners))
    t = np.array([0.21, 0.5, 0.83])
    X = cell.x0 + cell.hx * np.repeat(t, 3)
    Y = cell.y0 + cell.hy * np.tile(t, 3)
    got = np.asarray(w(X, Y), dtype=float)
    want = fit(X, Y)
    scale = max(np.abs(corners).max(), np.finfo(float).tiny)
    if not np.allclose(got, want, rtol=0, atol=1e-9 * scale):
        raise NotBilinearError("w is not bilinear on the cell")
    return fit


def _interp_derivative(cell: CellGeometry, g: Callable, X, Y, dx, dy):
    """Derivative of the bilinear interpolant of ``g`` on ``cell``."""
    corners = [g(cell.x0, cell.y0, 0, 0), g(cell.x1, cell.y0, 0, 0), g(cell.x0, cell.y1, 0, 0), g(cell.x1, cell.y1, 0, 0)]
    return Bilinear(cell, *(float(v) for v in corners))(X, Y, dx, dy)


def lin_identity_sides(cell: CellGeometry, g: Callable, w, which: str, quad_order: int = 5,
                       edge_orientation: str = "right-left") -> tuple[float, float]:
    """Both sides ``(lhs, rhs)`` of identity ``which`` in ``{"a", "b", "c"}``.

    ``g(x, y, dx, dy)`` must return exact partial derivatives up to order
    three; ``w`` is a :class:`Bilinear` or a callable that is bilinear on the
    cell.  ``edge_orientation="left-right"`` swaps the edges in identity
    ``c`` (used to show that orientation is the wrong one).

    a.  int (g - g^I)_x w_x = int g_xyy J (w_x - 2/3 (y - y_t) w_xy)
    b.  int (g - g^I)_y w_y = int g_xxy F (w_y - 2/3 (x - x_t) w_xy)
    c.  int (g - g^I)_x w   = int R(g, w) + h_x^2/12 (int_right - int_left) g_xx w dy
    """
    if which not in ("a", "b", "c"):
        raise ValueError(f"identity must be 'a', 'b' or 'c', got {which!r}")
    w = _as_bilinear(cell, w)
    X, Y, wts = cell.points(quad_order)
    xc, yc = cell.center
    F, J = cell.F(X), cell.J(Y)
    wx, wy, wxy, w0 = w(X, Y, 1, 0), w(X, Y, 0, 1), w(X, Y, 1, 1), w(X, Y)

    if which == "a":
        err_x = g(X, Y, 1, 0) - _interp_derivative(cell, g, X, Y, 1, 0)
        lhs = err_x * wx
        rhs = g(X, Y, 1, 2) * J * (wx - 2.0 / 3.0 * (Y - yc) * wxy)
        return float(wts @ lhs), float(wts @ rhs)

    if which == "b":
        err_y = g(X, Y, 0, 1) - _interp_derivative(cell, g, X, Y, 0, 1)
        lhs = err_y * wy
        rhs = g(X, Y, 2, 1) * F * (wy - 2.0 / 3.0 * (X - xc) * wxy)
        return float(wts @ lhs), float(wts @ rhs)

    err_x = g(X, Y, 1, 0) - _interp_derivative(cell, g, X, Y, 1, 0)
    lhs = float(wts @ (err_x * w0))
    gxxx = g(X, Y, 3, 0)
    remainder = (
        F * (X - xc) * gxxx * wx / 3.0
        - cell.hx**2 / 12.0 * gxxx * w0
        + J * g(X, Y, 1, 2) * (w0 - (X - xc) * wx - 2.0 / 3.0 * (Y - yc) * wy + 2.0 / 3.0 * (X - xc) * (Y - yc) * wxy)
    )
    ye, we = cell.edge_points(quad_order)

    def edge(x_edge):
        xe = np.full_like(ye, x_edge)
        return float(we @ (g(xe, ye, 2, 0) * w(xe, ye)))

    if edge_orientation == "right-left":
        jump = edge(cell.x1) - edge(cell.x0)
    elif edge_orientation == "left-right":
        jump = edge(cell.x0) - edge(cell.x1)
    else:
        raise ValueError(f"unknown edge orientation {edge_orientation!r}")
    rhs = float(wts @ remainder) + cell.hx**2 / 12.0 * jump
    return lhs, rhs


def lin_identity_residual(cell: CellGeometry, g: Callable, w, which: str, quad_order: int = 5,
                          edge_orientation: str = "right-left") -> float:
    """``|lhs - rhs|`` of identity ``which``; see :func:`lin_identity_sides`."""
    lhs, rhs = lin_identity_sides(cell, g, w, which, quad_order, edge_orientation)
    return abs(lhs - rhs)


def _abs_linear_integral(v0, v1, h):
    """Exact ``int_0^h |l(t)| dt`` for the linear ``l`` with end values ``v0``, ``v1``."""
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    same_sign = v0 * v1 >= 0
    denom = np.where(same_sign, 1.0, np.abs(v1 - v0))
    crossing = h * (v0**2 + v1**2) / (2.0 * denom)
    return np.where(same_sign, 0.5 * h * np.abs(v0 + v1), crossing)


def inverse_estimate_ratio(cell: CellGeometry, chi, which: str, p: float = 2, q: float = 1,
                           quad_order: int = 4) -> float:
    """Measured constant of an inverse estimate for a bilinear ``chi``.

    ``"grad_x"``: ``||chi_x||_p h_x / ||chi||_p``; ``"grad_y"`` likewise in ``y``;
    ``"edge"``: ``h_x int |chi(x_i, y)| dy / ||chi||_{L1}`` on the right edge;
    ``"lp_to_lq"``: ``||chi||_q / ((h_x h_y)^{1/q - 1/p} ||chi||_p)``.

    Sup norms are taken over the corners, where a bilinear and its first
    derivatives attain them.  ``L2`` norms use Gauss quadrature (exact).
    ``L1`` norms integrate ``|chi|`` exactly along each ``x``-row, where
    ``chi`` is linear, and use composite Gauss rules across rows.
    """
    if which not in INVERSE_ESTIMATES:
        raise ValueError(f"unknown estimate {which!r}")
    chi = _as_bilinear(cell, chi)

    def norm(dx, dy, r):
        return _bilinear_norm(cell, lambda X, Y: chi(X, Y, dx, dy), r, quad_order)

    if which == "edge":
        l1 = norm(0, 0, 1)
        if l1 == 0:
            raise ValueError("chi vanishes identically; the ratio is undefined")
        edge = float(_abs_linear_integral(chi(cell.x1, cell.y0), chi(cell.x1, cell.y1), cell.hy))
        return edge * cell.hx / l1
    base_p = norm(0, 0, p)
    if base_p == 0:
        raise ValueError("chi vanishes identically; the ratio is undefined")
    if which == "grad_x":
        return norm(1, 0, p) * cell.hx / base_p
    if which == "grad_y":
        return norm(0, 1, p) * cell.hy / base_p
    inv = lambda r: 0.0 if r == math.inf else 1.0 / r  # noqa: E731
    scale = (cell.hx * cell.hy) ** (inv(q) - inv(p))
    return norm(0, 0, q) / (scale * base_p)


def _bilinear_norm(cell: CellGeometry, fn, r, quad_order: int, splits: int = 16) -> float:
    """``L^r`` norm on the cell of a function that is linear in ``x`` on every row."""
    if r == math.inf:
        X = np.array([cell.x0, cell.x1, cell.x0, cell.x1])
        Y = np.array([cell.y0, cell.y0, cell.y1, cell.y1])
        return float(np.max(np.abs(fn(X, Y))))
    if r == 2:
        X, Y, wts = cell.points(max(quad_order, 2))
        return float(np.sqrt(wts @ fn(X, Y) ** 2))
    if r != 1:
        raise ValueError(f"only p in {{1, 2, inf}} are supported, got {r}")
    t, w = QuadratureRule(quad_order).points_1d
    s = (np.arange(splits)[:, None] + t[None, :]).ravel() / splits
    ys = cell.y0 + cell.hy * s
    wy = np.tile(w, splits) / splits * cell.hy
    rows = _abs_linear_integral(fn(np.full_like(ys, cell.x0), ys), fn(np.full_like(ys, cell.x1), ys), cell.hx)
    return float(wy @ rows)
