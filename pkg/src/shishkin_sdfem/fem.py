"""Bilinear finite elements on a Shishkin mesh: interpolation, assembly, solve.

The streamline-diffusion form is

    B(U, v) = eps (grad U, grad v) + (b U_x + c U, v) + (b U_x + c U, delta b v_x)

with ``delta = C* / N`` on cells of Omega_s and Omega_2 and zero elsewhere.
The second-order part ``(-eps Lap U, delta b v_x)`` of the full residual is
left out on purpose.  The load is ``(f, v + delta b v_x)``; the Galerkin
method drops both ``delta`` terms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import CellField, cell_points
from .mesh import ShishkinMesh, Subdomain
from .problem import CoefficientSet

__all__ = [
    "SolverError",
    "QuadratureRule",
    "LayerAdaptedRule",
    "integrate_cells",
    "DofMap",
    "DiscreteField",
    "StabilizationParam",
    "AssembledSystem",
    "make_stabilization",
    "interpolate",
    "delta_at",
    "assemble",
    "solve",
    "bilinear_form",
    "load_functional",
]

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """The sparse solve failed or missed the relative residual contract."""


# --- quadrature ---------------------------------------------------------------


@lru_cache(maxsize=None)
def _graded_gauss(order: int, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on ``[0, 1]`` with breakpoints ``2^-k`` graded toward 0."""
    t, w = np.polynomial.legendre.leggauss(order)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    if levels:
        breaks = np.concatenate([[0.0], 0.5 ** np.arange(levels, 0, -1), [1.0]])
        lo, width = breaks[:-1, None], np.diff(breaks)[:, None]
        t, w = (lo + width * t).ravel(), (width * w).ravel()
    # shared between callers through the cache
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule with ``order`` points per direction on ``[0, 1]^2``.

    ``grade_x`` and ``grade_y`` switch a direction to a composite rule with
    that many geometric levels (ratio 1/2); a positive value grades toward the
    far edge, a negative one toward the near edge.
    """

    order: int = 3
    grade_x: int = 0
    grade_y: int = 0

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"quadrature order must be a positive integer, got {self.order}")

    def _rule_1d(self, grade: int) -> tuple[np.ndarray, np.ndarray]:
        t, w = _graded_gauss(self.order, abs(grade))
        if grade > 0:
            t, w = 1.0 - t[::-1], w[::-1]
        return t, w

    @cached_property
    def points_1d(self) -> tuple[np.ndarray, np.ndarray]:
        return self._rule_1d(0)

    @cached_property
    def _tensor(self):
        tx, wx = self._rule_1d(self.grade_x)
        ty, wy = self._rule_1d(self.grade_y)
        return np.repeat(tx, ty.size), np.tile(ty, tx.size), np.outer(wx, wy).ravel()

    @property
    def xi(self) -> np.ndarray:
        return self._tensor[0]

    @property
    def eta(self) -> np.ndarray:
        return self._tensor[1]

    @property
    def weights(self) -> np.ndarray:
        """Reference weights; they sum to one (the area of ``[0, 1]^2``)."""
        return self._tensor[2]

    def integrate(self, mesh: ShishkinMesh, values: np.ndarray) -> np.ndarray:
        """Per-cell integrals ``(N, N)`` of ``(N, N, P)`` point values."""
        return (values @ self.weights) * mesh.cell_areas()

    def pieces(self, mesh: ShishkinMesh):
        """``(rule, cells)`` pairs; later pairs override earlier ones on their cells."""
        return [(self, mesh)]


@dataclass(frozen=True)
class LayerAdaptedRule:
    """Gauss rule of the given order, with graded sub-rules on the coarse
    cells that touch a layer transition.

    On those cells the layer terms of a manufactured solution fall from
    ``N^-rho`` to round-off within a distance of ``eps`` (or ``sqrt(eps)``)
    of a cell edge, far below the cell width, and a plain Gauss rule misses
    them.  Use this rule when nodal identities must hold to near round-off.
    """

    order: int = 6

    def __post_init__(self):
        QuadratureRule(self.order)

    @staticmethod
    def _levels(scale: float, width: float) -> int:
        # resolve down to a tenth of the layer width
        return max(1, math.ceil(math.log(0.1 * scale / width) / math.log(0.5)))

    def pieces(self, mesh: ShishkinMesh):
        out = [(QuadratureRule(self.order), mesh)]
        N, cfg, params = mesh.N, mesh.config, mesh.params
        col = N // 2 - 1
        gx = self._levels(cfg.epsilon / cfg.beta, mesh.coarse_hx)
        if not params.saturated_x:
            out.append((QuadratureRule(self.order, grade_x=gx), mesh.block(col, col + 1, 0, N)))
        if not params.saturated_y:
            gy = self._levels(math.sqrt(cfg.epsilon), mesh.coarse_hy)
            for row, sign in ((N // 3, -1), (2 * N // 3 - 1, 1)):
                out.append((QuadratureRule(self.order, grade_y=sign * gy), mesh.block(0, N, row, row + 1)))
                if not params.saturated_x:
                    # the corner cell meets both transitions
                    corner = QuadratureRule(self.order, grade_x=gx, grade_y=sign * gy)
                    out.append((corner, mesh.block(col, col + 1, row, row + 1)))
        return out


def integrate_cells(mesh: ShishkinMesh, rule, build: Callable) -> np.ndarray:
    """Per-cell integrals ``(N, N)``.

    ``build(quad, cells)`` returns the integrand at the points of ``quad``
    in every cell of ``cells`` (the mesh itself or a :class:`CellBlock`).
    """
    out = np.zeros((mesh.N, mesh.N))
    for quad, cells in rule.pieces(mesh):
        out[cells.cell_window] = quad.integrate(cells, build(quad, cells))
    return out


# --- discrete space -----------------------------------------------------------


class DofMap:
    """Numbering of the ``(N-1)^2`` interior nodes, row-major in ``(i, j)``."""

    def __init__(self, N: int):
        self.N = N
        mask = np.ones((N + 1, N + 1), dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = False
        self.dirichlet_mask = ~mask
        self.interior = np.flatnonzero(mask.ravel())

    @property
    def n_dofs(self) -> int:
        return (self.N - 1) ** 2

    def dof(self, i: int, j: int) -> int:
        """Global dof of interior node ``(x_i, y_j)``."""
        if not (1 <= i <= self.N - 1 and 1 <= j <= self.N - 1):
            raise IndexError(f"node ({i}, {j}) is not interior")
        return (i - 1) * (self.N - 1) + (j - 1)

    def node(self, dof: int) -> tuple[int, int]:
        i, j = divmod(int(dof), self.N - 1)
        return i + 1, j + 1


class DiscreteField(CellField):
    """Continuous piecewise bilinear function given by its nodal values.

    ``values[i, j]`` is the value at ``(xs[i], ys[j])``.  Members of the
    finite element space have zero boundary values; interpolants of
    functions that do not vanish on the boundary keep their boundary values.
    """

    def __init__(self, mesh: ShishkinMesh, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.N + 1, mesh.N + 1):
            raise ValueError(f"expected nodal array of shape {(mesh.N + 1,) * 2}, got {values.shape}")
        self.mesh = mesh
        self.values = values

    @classmethod
    def from_coefficients(cls, mesh: ShishkinMesh, coefficients: np.ndarray) -> "DiscreteField":
        values = np.zeros((mesh.N + 1, mesh.N + 1))
        values[1:-1, 1:-1] = np.asarray(coefficients).reshape(mesh.N - 1, mesh.N - 1)
        return cls(mesh, values)

    @property
    def coefficients(self) -> np.ndarray:
        """Interior nodal values in dof order."""
        return self.values[1:-1, 1:-1].ravel()

    @property
    def vanishes_on_boundary(self) -> bool:
        v = self.values
        return not (v[0].any() or v[-1].any() or v[:, 0].any() or v[:, -1].any())

    def __call__(self, x: float, y: float) -> float:
        """Point evaluation at ``(x, y)`` in the closed unit square."""
        mesh = self.mesh
        a = int(np.clip(np.searchsorted(mesh.xs, x, side="right") - 1, 0, mesh.N - 1))
        b = int(np.clip(np.searchsorted(mesh.ys, y, side="right") - 1, 0, mesh.N - 1))
        xi = (x - mesh.xs[a]) / mesh.hx[a]
        eta = (y - mesh.ys[b]) / mesh.hy[b]
        v = self.values
        return float(
            v[a, b] * (1 - xi) * (1 - eta) + v[a + 1, b] * xi * (1 - eta)
            + v[a, b + 1] * (1 - xi) * eta + v[a + 1, b + 1] * xi * eta
        )

    def cell_values(self, mesh, xi, eta, dx=0, dy=0):
        if mesh is not self.mesh and mesh.N != self.mesh.N:
            raise ValueError("field lives on a different mesh")
        shape = (mesh.hx.size, mesh.hy.size, np.size(xi))
        if dx > 1 or dy > 1:
            return np.zeros(shape)
        xi = np.asarray(xi, dtype=float)[None, None, :]
        eta = np.asarray(eta, dtype=float)[None, None, :]
        v = self.values[mesh.node_window]
        v00 = v[:-1, :-1, None]
        v10 = v[1:, :-1, None]
        v01 = v[:-1, 1:, None]
        v11 = v[1:, 1:, None]
        hx = mesh.hx[:, None, None]
        hy = mesh.hy[None, :, None]
        if dx == 0 and dy == 0:
            return v00 * (1 - xi) * (1 - eta) + v10 * xi * (1 - eta) + v01 * (1 - xi) * eta + v11 * xi * eta
        if dx == 1 and dy == 0:
            return ((v10 - v00) * (1 - eta) + (v11 - v01) * eta) / hx
        if dx == 0 and dy == 1:
            return ((v01 - v00) * (1 - xi) + (v11 - v10) * xi) / hy
        return np.broadcast_to((v11 - v10 - v01 + v00) / (hx * hy), shape).copy()

    def __repr__(self):
        return f"DiscreteField(N={self.mesh.N})"


def interpolate(mesh: ShishkinMesh, g: Callable) -> DiscreteField:
    """Nodal bilinear interpolant ``g^I`` of a callable ``g(x, y)``."""
    X, Y = np.meshgrid(mesh.xs, mesh.ys, indexing="ij")
    return DiscreteField(mesh, np.asarray(g(X, Y), dtype=float) * np.ones_like(X))


# --- stabilisation ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StabilizationParam:
    """Cell-wise constant streamline-diffusion weight ``delta``."""

    c_star: float
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)


def make_stabilization(mesh: ShishkinMesh, coeffs: CoefficientSet, c_star: float = 1.0) -> StabilizationParam:
    """``delta = C*/N`` on Omega_s and Omega_2 cells, 0 on Omega_1 and Omega_12.

    ``c_star = 0`` switches stabilisation off; otherwise ``C*/N <= 1/c`` is
    required.
    """
    c_star = float(c_star)
    if not np.isfinite(c_star) or c_star < 0:
        raise ValueError(f"c_star must be non-negative, got {c_star}")
    delta = c_star / mesh.N
    if delta > 1.0 / coeffs.c:
        raise ValueError(f"C*/N = {delta:g} exceeds 1/c = {1.0 / coeffs.c:g}")
    values = np.where(mesh.cell_mask(Subdomain.OMEGA_S, Subdomain.OMEGA_2), delta, 0.0)
    return StabilizationParam(c_star=c_star, values=values)


def delta_at(stab: StabilizationParam, cell: tuple[int, int]) -> float:
    """``delta`` on cell ``tau_ij`` (1-based indices)."""
    i, j = cell
    n = stab.values.shape[0]
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"cell ({i}, {j}) out of range 1..{n}")
    return float(stab.values[i - 1, j - 1])


# --- assembly -----------------------------------------------------------------


def _reference_basis(quad: QuadratureRule):
    xi, eta = quad.xi, quad.eta
    # local order: (a, b), (a+1, b), (a, b+1), (a+1, b+1)
    phi = np.stack([(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta])
    dxi = np.stack([-(1 - eta), 1 - eta, -eta, eta])
    deta = np.stack([-(1 - xi), -xi, 1 - xi, xi])
    return phi, dxi, deta


def _local_nodes(N: int) -> np.ndarray:
    """``(N*N, 4)`` global node numbers of each cell, cells in row-major order."""
    a, b = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    a, b = a.ravel(), b.ravel()
    n = N + 1
    return np.stack([a * n + b, (a + 1) * n + b, a * n + b + 1, (a + 1) * n + b + 1], axis=1)


def _element_matrices(mesh, coeffs, delta, quad, kind):
    """``(N*N, 4, 4)`` element matrices with entry ``[r, s] = B_tau(phi_s, phi_r)``."""
    phi, dxi, deta = _reference_basis(quad)
    w = quad.weights
    ref_xx = np.einsum("q,rq,sq->rs", w, dxi, dxi)
    ref_yy = np.einsum("q,rq,sq->rs", w, deta, deta)
    ref_conv = np.einsum("q,rq,sq->rs", w, phi, dxi)      # int phi_r d(phi_s)/dxi
    ref_mass = np.einsum("q,rq,sq->rs", w, phi, phi)
    ref_sd_react = np.einsum("q,rq,sq->rs", w, dxi, phi)  # int d(phi_r)/dxi phi_s

    hx = np.repeat(mesh.hx, mesh.N)[:, None, None]
    hy = np.tile(mesh.hy, mesh.N)[:, None, None]
    eps, b, c = coeffs.epsilon, coeffs.b, coeffs.c
    K = (
        eps * (hy / hx) * ref_xx
        + eps * (hx / hy) * ref_yy
        + b * hy * ref_conv
        + c * hx * hy * ref_mass
    )
    if kind == "sdfem":
        d = delta.ravel()[:, None, None]
        K = K + d * b * b * (hy / hx) * ref_xx + d * b * c * hy * ref_sd_react
    return K


def load_functional(mesh, coeffs, stab, f: Callable, kind: str, quad) -> np.ndarray:
    """Nodal load ``(f, phi + delta b phi_x)`` (or ``(f, phi)``), shape ``(N+1)^2``.

    ``quad`` is a :class:`QuadratureRule` or a :class:`LayerAdaptedRule`.
    """
    local = np.zeros((mesh.N, mesh.N, 4))
    for rule, cells in quad.pieces(mesh):
        phi, dxi, _ = _reference_basis(rule)
        X, Y = cell_points(cells, rule.xi, rule.eta)
        fq = np.asarray(f(X, Y), dtype=float) * rule.weights
        hx, hy = cells.hx[:, None, None], cells.hy[None, :, None]
        part = (fq @ phi.T) * hx * hy
        if kind == "sdfem":
            d = stab.values[cells.cell_window][:, :, None]
            part = part + d * coeffs.b * (fq @ dxi.T) * hy
        local[cells.cell_window] = part
    local = local.reshape(mesh.N * mesh.N, 4)
    rhs = np.zeros((mesh.N + 1) ** 2)
    np.add.at(rhs, _local_nodes(mesh.N).ravel(), local.ravel())
    return rhs


@dataclass(eq=False)
class AssembledSystem:
    """Sparse system on the interior dofs plus the data used to build it.

    ``full_matrix`` is the operator on all ``(N+1)^2`` nodes before Dirichlet
    elimination, so ``w @ full_matrix @ v`` equals ``B(v, w)`` for any nodal
    vectors (boundary values included).
    """

    matrix: sp.csc_matrix
    rhs: np.ndarray
    kind: str
    mesh: ShishkinMesh
    coeffs: CoefficientSet
    stab: StabilizationParam
    quad: QuadratureRule
    full_matrix: sp.csr_matrix
    dofs: DofMap
    _lu: object = field(default=None, repr=False)

    def factor(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix.tocsc())
            except RuntimeError as exc:
                raise SolverError(f"sparse LU failed: {exc}; {condition_diagnostic(self.matrix)}") from exc
        return self._lu

    def form(self, v: DiscreteField, w: DiscreteField) -> float:
        """``B(v, w)`` for discrete fields, through the assembled operator."""
        return float(w.values.ravel() @ (self.full_matrix @ v.values.ravel()))


def condition_diagnostic(matrix) -> str:
    n = matrix.shape[0]
    if n <= 4000:
        cond = np.linalg.cond(matrix.toarray())
        return f"2-norm condition number {cond:.3e}"
    return f"matrix of size {n} too large for a dense condition estimate"


def assemble(
    mesh: ShishkinMesh,
    coeffs: CoefficientSet,
    stab: StabilizationParam,
    f: Callable,
    kind: str = "sdfem",
    quad: QuadratureRule | None = None,
) -> AssembledSystem:
    """Assemble the Galerkin or streamline-diffusion system.

    Contributions are summed cell by cell in row-major order, so the result
    does not depend on how the work is scheduled.
    """
    if kind not in ("galerkin", "sdfem"):
        raise ValueError(f"kind must be 'galerkin' or 'sdfem', got {kind!r}")
    quad = quad or QuadratureRule(3)
    if quad.order < 2:
        raise ValueError("assembly needs at least 2 quadrature points per direction")
    if stab.values.shape != (mesh.N, mesh.N):
        raise ValueError("stabilisation parameter does not match the mesh")

    # bilinear element integrands are polynomial, so the plain rule is exact
    K = _element_matrices(mesh, coeffs, stab.values, QuadratureRule(quad.order), kind)
    nodes = _local_nodes(mesh.N)
    rows = np.repeat(nodes, 4, axis=1).ravel()
    cols = np.tile(nodes, (1, 4)).ravel()
    n = (mesh.N + 1) ** 2
    full = sp.coo_matrix((K.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    full.sort_indices()

    dofs = DofMap(mesh.N)
    inner = dofs.interior
    matrix = full[inner][:, inner].tocsc()
    rhs_full = load_functional(mesh, coeffs, stab, f, kind, quad)
    return AssembledSystem(
        matrix=matrix,
        rhs=rhs_full[inner],
        kind=kind,
        mesh=mesh,
        coeffs=coeffs,
        stab=stab,
        quad=quad,
        full_matrix=full,
        dofs=dofs,
    )


def solve(system: AssembledSystem, rhs: np.ndarray | None = None, transpose: bool = False) -> DiscreteField:
    """Direct sparse solve; ``transpose=True`` solves with the adjoint operator."""
    b = system.rhs if rhs is None else np.asarray(rhs, dtype=float)
    lu = system.factor()
    x = lu.solve(b, trans="T" if transpose else "N")
    A = system.matrix.T if transpose else system.matrix
    res = np.linalg.norm(A @ x - b)
    scale = np.linalg.norm(b)
    if not np.all(np.isfinite(x)) or res > RESIDUAL_TOL * max(scale, np.finfo(float).tiny):
        raise SolverError(
            f"relative residual {res / max(scale, 1e-300):.3e} above {RESIDUAL_TOL:g}; "
            f"{condition_diagnostic(system.matrix)}"
        )
    return DiscreteField.from_coefficients(system.mesh, x)


def bilinear_form(
    mesh: ShishkinMesh,
    coeffs: CoefficientSet,
    stab: StabilizationParam,
    v: CellField,
    w: CellField,
    quad: QuadratureRule,
    cells: np.ndarray | None = None,
    kind: str = "sdfem",
) -> float:
    """``B(v, w)`` by quadrature for arbitrary cell fields, optionally on a cell subset."""
    eps, b, c = coeffs.epsilon, coeffs.b, coeffs.c

    def integrand(rule, part):
        xi, eta = rule.xi, rule.eta
        vx = v.cell_values(part, xi, eta, 1, 0)
        vy = v.cell_values(part, xi, eta, 0, 1)
        v0 = v.cell_values(part, xi, eta)
        wx = w.cell_values(part, xi, eta, 1, 0)
        wy = w.cell_values(part, xi, eta, 0, 1)
        w0 = w.cell_values(part, xi, eta)
        residual = b * vx + c * v0
        out = eps * (vx * wx + vy * wy) + residual * w0
        if kind == "sdfem":
            out = out + residual * stab.values[part.cell_window][:, :, None] * b * wx
        return out

    per_cell = integrate_cells(mesh, quad, integrand)
    if cells is not None:
        per_cell = per_cell[cells]
    return float(np.sum(per_cell))
