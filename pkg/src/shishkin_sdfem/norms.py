"""Energy norm, cell-aligned region norms, interpolation-error tables, rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .fem import QuadratureRule, StabilizationParam, interpolate
from .fields import CellField
from .mesh import ShishkinMesh, Subdomain
from .problem import CoefficientSet, ManufacturedProblem

__all__ = [
    "NormReport",
    "Rect",
    "RegionError",
    "NORM_KINDS",
    "region_cells",
    "energy_norm",
    "energy_norm_pieces",
    "region_norm",
    "interp_error_table",
    "fit_rate",
    "nodal_max_error",
]

NORM_KINDS = ("L1", "L2", "Linf_nodes", "Linf_sampled", "W1inf_sampled", "energy")

DEFAULT_SAMPLING = 5
DEFAULT_QUAD = QuadratureRule(5)


class RegionError(ValueError):
    """A requested region is not a union of whole mesh cells."""


@dataclass(frozen=True)
class Rect:
    """Axis-parallel rectangle ``[x0, x1] x [y0, y1]``; must align with mesh lines."""

    x0: float
    x1: float
    y0: float
    y1: float


@dataclass(frozen=True)
class NormReport:
    value: float
    region: str
    norm_kind: str
    sampling: int | None = None
    derivative: str = "value"

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"norm value must be non-negative, got {self.value}")


def _snap(coords: np.ndarray, value: float, what: str) -> int:
    k = int(np.argmin(np.abs(coords - value)))
    if abs(coords[k] - value) > 1e-12 * max(1.0, abs(value)):
        raise RegionError(f"{what}={value!r} is not a mesh line")
    return k


def region_cells(mesh: ShishkinMesh, region) -> tuple[np.ndarray, str]:
    """Boolean ``(N, N)`` cell mask and a label for ``region``.

    ``region`` may be ``None`` (all of Omega), a :class:`Subdomain`, an
    iterable of subdomains and/or :class:`Rect` objects (their union), or a
    boolean cell mask.
    """
    N = mesh.N
    if region is None:
        return np.ones((N, N), dtype=bool), "Omega"
    if isinstance(region, Subdomain):
        return mesh.cell_mask(region), region.value
    if isinstance(region, Rect):
        region = [region]
    if isinstance(region, np.ndarray):
        if region.shape != (N, N) or region.dtype != bool:
            raise RegionError("cell masks must be boolean arrays of shape (N, N)")
        return region, "cells"
    mask = np.zeros((N, N), dtype=bool)
    labels = []
    for part in region:
        if isinstance(part, Subdomain):
            mask |= mesh.cell_mask(part)
            labels.append(part.value)
        elif isinstance(part, Rect):
            i0 = _snap(mesh.xs, part.x0, "x0")
            i1 = _snap(mesh.xs, part.x1, "x1")
            j0 = _snap(mesh.ys, part.y0, "y0")
            j1 = _snap(mesh.ys, part.y1, "y1")
            mask[i0:i1, j0:j1] = True
            labels.append(f"[{part.x0:g},{part.x1:g}]x[{part.y0:g},{part.y1:g}]")
        else:
            raise RegionError(f"cannot interpret region part {part!r}")
    return mask, "+".join(labels)


def energy_norm_pieces(mesh, coeffs: CoefficientSet, stab: StabilizationParam, v: CellField,
                       quad: QuadratureRule = DEFAULT_QUAD, cells=None) -> tuple[float, float, float]:
    """The three squared contributions ``((eps + b^2 delta) v_x, v_x)``,
    ``eps (v_y, v_y)`` and ``(c v, v)``."""
    xi, eta = quad.xi, quad.eta
    vx = v.cell_values(mesh, xi, eta, 1, 0)
    vy = v.cell_values(mesh, xi, eta, 0, 1)
    v0 = v.cell_values(mesh, xi, eta)
    weight = coeffs.epsilon + coeffs.b**2 * stab.values[:, :, None]
    pieces = [
        quad.integrate(mesh, weight * vx * vx),
        coeffs.epsilon * quad.integrate(mesh, vy * vy),
        coeffs.c * quad.integrate(mesh, v0 * v0),
    ]
    if cells is not None:
        pieces = [p[cells] for p in pieces]
    return tuple(float(np.sum(p)) for p in pieces)


def energy_norm(mesh, coeffs, stab, v: CellField, quad: QuadratureRule = DEFAULT_QUAD, cells=None) -> float:
    """``|||v|||``, the norm associated with the streamline-diffusion form."""
    return math.sqrt(sum(energy_norm_pieces(mesh, coeffs, stab, v, quad, cells)))


_DERIVATIVES = {"value": ((0, 0),), "x": ((1, 0),), "y": ((0, 1),), "grad": ((1, 0), (0, 1))}


def _pointwise(mesh, field, xi, eta, derivative):
    try:
        orders = _DERIVATIVES[derivative]
    except KeyError:
        raise ValueError(f"derivative must be one of {sorted(_DERIVATIVES)}") from None
    if len(orders) == 1:
        return np.abs(field.cell_values(mesh, xi, eta, *orders[0]))
    gx = field.cell_values(mesh, xi, eta, 1, 0)
    gy = field.cell_values(mesh, xi, eta, 0, 1)
    return np.hypot(gx, gy)


def region_norm(
    mesh: ShishkinMesh,
    field: CellField,
    region=None,
    norm_kind: str = "L2",
    sampling: int = DEFAULT_SAMPLING,
    derivative: str = "value",
    quad: QuadratureRule = DEFAULT_QUAD,
    coeffs: CoefficientSet | None = None,
    stab: StabilizationParam | None = None,
) -> NormReport:
    """Norm of ``field`` (or of its ``x``/``y`` derivative or gradient) on a
    cell-aligned region.

    L1 and L2 use tensor Gauss quadrature; ``Linf_sampled`` takes the maximum
    over ``sampling x sampling`` equispaced points per cell (corners
    included), ``Linf_nodes`` over the mesh nodes of the region, and
    ``W1inf_sampled`` the largest of the sampled ``|v|``, ``|v_x|``, ``|v_y|``.
    ``energy`` restricts ``|||.|||`` to the region and needs ``coeffs`` and
    ``stab``.
    """
    if norm_kind not in NORM_KINDS:
        raise ValueError(f"unknown norm kind {norm_kind!r}")
    cells, label = region_cells(mesh, region)
    if not cells.any():
        return NormReport(0.0, label, norm_kind, None, derivative)

    if norm_kind == "energy":
        if coeffs is None or stab is None:
            raise ValueError("energy norm needs coeffs and stab")
        value = energy_norm(mesh, coeffs, stab, field, quad, cells)
        return NormReport(value, label, norm_kind, None, derivative)

    if norm_kind in ("L1", "L2"):
        vals = _pointwise(mesh, field, quad.xi, quad.eta, derivative)
        p = 1 if norm_kind == "L1" else 2
        per_cell = quad.integrate(mesh, vals**p)
        value = float(np.sum(per_cell[cells])) ** (1.0 / p)
        return NormReport(value, label, norm_kind, None, derivative)

    if norm_kind == "Linf_nodes":
        ref = np.array([0.0, 1.0])
        xi, eta = np.repeat(ref, 2), np.tile(ref, 2)
        vals = _pointwise(mesh, field, xi, eta, derivative)
        return NormReport(float(vals[cells].max()), label, norm_kind, 2, derivative)

    ref = np.linspace(0.0, 1.0, sampling)
    xi, eta = np.repeat(ref, sampling), np.tile(ref, sampling)
    if norm_kind == "Linf_sampled":
        vals = _pointwise(mesh, field, xi, eta, derivative)
        return NormReport(float(vals[cells].max()), label, norm_kind, sampling, derivative)

    # W1inf_sampled
    value = max(float(_pointwise(mesh, field, xi, eta, d)[cells].max()) for d in ("value", "x", "y"))
    return NormReport(value, label, norm_kind, sampling, "W1")


def interp_error_table(problem: ManufacturedProblem, mesh: ShishkinMesh,
                       sampling: int = DEFAULT_SAMPLING) -> list[NormReport]:
    """Sampled ``||u - u^I||_inf`` on Omega_s and on the rest of the square."""
    u = problem.field("u")
    error = u - interpolate(mesh, problem.u)
    smooth = mesh.cell_mask(Subdomain.OMEGA_S)
    on_s = region_norm(mesh, error, smooth, "Linf_sampled", sampling)
    rest = region_norm(mesh, error, ~smooth, "Linf_sampled", sampling)
    return [
        NormReport(on_s.value, Subdomain.OMEGA_S.value, "Linf_sampled", sampling),
        NormReport(rest.value, "Omega\\Omega_s", "Linf_sampled", sampling),
    ]


def nodal_max_error(mesh: ShishkinMesh, U, u, regions=(Subdomain.OMEGA_S, Subdomain.OMEGA_1)) -> float:
    """``max |U - u|`` over the mesh nodes that are corners of cells in ``regions``."""
    nodes = mesh.node_mask(mesh.cell_mask(*regions))
    X, Y = np.meshgrid(mesh.xs, mesh.ys, indexing="ij")
    diff = np.abs(U.values - u(X, Y))
    return float(diff[nodes].max())


def fit_rate(values: Iterable[tuple[float, float]], ln_power: float = 0) -> float:
    """Convergence rate ``p`` from ``(N, error)`` pairs, assuming
    ``error ~ C N^{-p} (ln N)^{ln_power}``.

    Least-squares slope of ``log(error / ln^k N)`` against ``log N``, negated.
    With two pairs at ``N`` and ``2N`` this is ``log2(e_N / e_2N)`` after the
    log normalisation.
    """
    pairs: Sequence[tuple[float, float]] = [(float(n), float(e)) for n, e in values]
    if len(pairs) < 2:
        raise ValueError("need at least two (N, error) pairs")
    Ns = np.array([n for n, _ in pairs])
    errs = np.array([e for _, e in pairs])
    if np.any(errs <= 0) or not np.all(np.isfinite(errs)):
        raise ValueError("errors must be positive and finite")
    if np.any(Ns <= 1):
        raise ValueError("N must exceed 1")
    if len(np.unique(Ns)) < 2:
        raise ValueError("need at least two distinct N")
    logN = np.log(Ns)
    target = np.log(errs) - ln_power * np.log(logN)
    slope = np.polyfit(logN, target, 1)[0]
    return float(-slope)
