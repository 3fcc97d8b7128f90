"""Discrete Green's function of the streamline-diffusion form.

For an interior mesh node ``x*`` the discrete Green's function ``G`` in the
finite element space satisfies ``B(v, G) = v(x*)`` for every ``v``.  In
matrix terms ``G`` solves the transposed system with a unit load at the dof
of ``x*``.  Away from the anisotropic neighbourhood

    Omega_0 = {x - x* <= K sigma_x ln N,  |y - y*| <= K sigma_y ln N},
    sigma_x = k N^{-1} ln N,  sigma_y = k N^{-1/2},

``G`` decays rapidly; ``Omega_0'`` is the union of the cells meeting
``Omega_0`` in a set of positive measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import cell_points
from .fem import (
    AssembledSystem,
    LayerAdaptedRule,
    DiscreteField,
    QuadratureRule,
    SolverError,
    assemble,
    bilinear_form,
    integrate_cells,
    interpolate,
    solve,
)
from .mesh import ShishkinMesh, Subdomain
from .norms import energy_norm
from .problem import CoefficientSet, ManufacturedProblem

__all__ = [
    "GreenConfig",
    "GreenField",
    "DecayReport",
    "ErrorSplit",
    "solve_green",
    "green_decay_profile",
    "error_split_terms",
    "omega0_prime",
    "node_nearest",
    "LocalLayerNorms",
    "local_layer_norms",
]

GREEN_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class GreenConfig:
    """Probe node ``(i, j)`` (mesh node indices) and the width constants."""

    node: tuple[int, int]
    k: float = 2.0
    K: float = 2.0

    def __post_init__(self):
        if self.k <= 0 or self.K <= 0:
            raise ValueError("k and K must be positive")

    def sigma_x(self, N: int) -> float:
        return self.k * math.log(N) / N

    def sigma_y(self, N: int) -> float:
        return self.k / math.sqrt(N)


def node_nearest(mesh: ShishkinMesh, x: float, y: float) -> tuple[int, int]:
    """Interior node index pair closest to ``(x, y)``."""
    i = int(np.clip(np.argmin(np.abs(mesh.xs - x)), 1, mesh.N - 1))
    j = int(np.clip(np.argmin(np.abs(mesh.ys - y)), 1, mesh.N - 1))
    return i, j


def omega0_prime(mesh: ShishkinMesh, config: GreenConfig) -> np.ndarray:
    """Cells (boolean ``(N, N)``) that meet ``Omega_0`` with positive measure."""
    N = mesh.N
    i, j = config.node
    xstar, ystar = mesh.xs[i], mesh.ys[j]
    logN = math.log(N)
    reach_x = config.K * config.sigma_x(N) * logN
    reach_y = config.K * config.sigma_y(N) * logN
    # Omega_0 has no lower bound in x; only its right edge and y-band matter
    cols = mesh.xs[:-1] < xstar + reach_x
    rows = (mesh.ys[:-1] < ystar + reach_y) & (mesh.ys[1:] > ystar - reach_y)
    return np.outer(cols, rows)


@dataclass(eq=False)
class GreenField:
    G: DiscreteField
    config: GreenConfig
    omega0_prime: np.ndarray
    system: AssembledSystem

    @property
    def mesh(self) -> ShishkinMesh:
        return self.G.mesh

    @property
    def probe(self) -> tuple[float, float]:
        i, j = self.config.node
        return float(self.mesh.xs[i]), float(self.mesh.ys[j])

    def energy_sq(self, quad: QuadratureRule | None = None) -> float:
        """``|||G|||^2``."""
        s = self.system
        return energy_norm(s.mesh, s.coeffs, s.stab, self.G, quad or QuadratureRule(3)) ** 2

    def inside_smooth_or_outflow(self) -> bool:
        """True when ``Omega_0'`` lies in Omega_s and Omega_1, where the
        stabilisation term of the error split has its sharper bound."""
        allowed = self.mesh.cell_mask(Subdomain.OMEGA_S, Subdomain.OMEGA_1)
        return not np.any(self.omega0_prime & ~allowed)


def solve_green(mesh: ShishkinMesh, coeffs: CoefficientSet, stab, config: GreenConfig,
                system: AssembledSystem | None = None) -> GreenField:
    """Discrete Green's function for the probe node in ``config``.

    ``system`` is reused (with its factorisation) when given; it must be a
    streamline-diffusion system on ``mesh``.
    """
    i, j = config.node
    if not (1 <= i <= mesh.N - 1 and 1 <= j <= mesh.N - 1):
        raise ValueError(f"probe node {config.node} is not an interior node")
    if system is None:
        system = assemble(mesh, coeffs, stab, lambda x, y: np.zeros_like(x), "sdfem")
    elif system.kind != "sdfem" or system.mesh is not mesh:
        raise ValueError("need the streamline-diffusion system assembled on this mesh")
    load = np.zeros(system.dofs.n_dofs)
    load[system.dofs.dof(i, j)] = 1.0
    G = solve(system, load, transpose=True)
    residual = np.max(np.abs(system.matrix.T @ G.coefficients - load))
    if residual > GREEN_RESIDUAL_TOL:
        raise SolverError(f"Green's function residual {residual:.3e} above {GREEN_RESIDUAL_TOL:g}")
    return GreenField(G=G, config=config, omega0_prime=omega0_prime(mesh, config), system=system)


@dataclass(frozen=True)
class DecayReport:
    """Sampled sup norms of ``G``, ``G_x``, ``G_y`` on ``region \\ Omega_0'``.

    ``weighted`` combines them with the region's epsilon weights:
    Omega_s ``max(|G|, |G_x|, |G_y|)``; Omega_1 and Omega_12
    ``eps max(|G_x|, |G_y|) + |G|``; Omega_2
    ``eps^{1/4} |G_x| + eps^{3/4} |G_y| + eps^{1/4} |G|``.
    ``weighted_inside`` is the same combination on ``region`` intersected with
    ``Omega_0'``.
    """

    region: Subdomain
    empty: bool
    max_G: float
    max_Gx: float
    max_Gy: float
    weighted: float
    weighted_inside: float
    sampling: int
    k: float
    K: float

    @property
    def separation(self) -> float:
        """``weighted_inside / weighted`` (infinite when the outside is empty or G vanishes there)."""
        if self.empty or self.weighted == 0:
            return math.inf
        return self.weighted_inside / self.weighted


def _weighted(region: Subdomain, eps: float, g: float, gx: float, gy: float) -> float:
    if region is Subdomain.OMEGA_S:
        return max(g, gx, gy)
    if region in (Subdomain.OMEGA_1, Subdomain.OMEGA_12):
        return eps * max(gx, gy) + g
    return eps**0.25 * gx + eps**0.75 * gy + eps**0.25 * g


def green_decay_profile(gfield: GreenField, region: Subdomain, sampling: int = 5) -> DecayReport:
    mesh = gfield.mesh
    eps = gfield.system.coeffs.epsilon
    ref = np.linspace(0.0, 1.0, sampling)
    xi, eta = np.repeat(ref, sampling), np.tile(ref, sampling)
    G = gfield.G
    vals = [np.abs(G.cell_values(mesh, xi, eta, dx, dy)).max(axis=2) for dx, dy in ((0, 0), (1, 0), (0, 1))]
    in_region = mesh.cell_mask(region)
    outside = in_region & ~gfield.omega0_prime
    inside = in_region & gfield.omega0_prime

    def sups(cells):
        if not cells.any():
            return 0.0, 0.0, 0.0
        return tuple(float(v[cells].max()) for v in vals)

    g, gx, gy = sups(outside)
    gi, gxi, gyi = sups(inside)
    return DecayReport(
        region=region,
        empty=not outside.any(),
        max_G=g,
        max_Gx=gx,
        max_Gy=gy,
        weighted=_weighted(region, eps, g, gx, gy),
        weighted_inside=_weighted(region, eps, gi, gxi, gyi),
        sampling=sampling,
        k=gfield.config.k,
        K=gfield.config.K,
    )


@dataclass(frozen=True)
class ErrorSplit:
    """The two terms of ``(U - u)(x*) = -eps (Lap u, delta b G_x) + B(u - u^I, G)``."""

    term1: float
    term2: float
    direct: float
    omega0_in_smooth_or_outflow: bool

    @property
    def sum(self) -> float:
        return self.term1 + self.term2

    @property
    def defect(self) -> float:
        return abs(self.sum - self.direct)


def error_split_terms(problem: ManufacturedProblem, mesh: ShishkinMesh, coeffs: CoefficientSet, stab,
                      U: DiscreteField, gfield: GreenField, quad=None) -> ErrorSplit:
    """Evaluate both terms by quadrature and the nodal error directly.

    ``term1`` uses the exact Laplacian of the manufactured solution and
    ``term2`` the exact interpolation error ``u - u^I``.  The two add up to
    the nodal error only when ``U`` was assembled with a load rule at least
    as accurate as ``quad``; :class:`LayerAdaptedRule` for both keeps the
    mismatch near round-off.
    """
    quad = quad or LayerAdaptedRule(6)
    b = coeffs.b
    if stab.is_zero:
        term1 = 0.0
    else:

        def integrand(rule, part):
            X, Y = cell_points(part, rule.xi, rule.eta)
            Gx = gfield.G.cell_values(part, rule.xi, rule.eta, 1, 0)
            return problem.laplacian(X, Y) * stab.values[part.cell_window][:, :, None] * b * Gx

        term1 = -coeffs.epsilon * float(np.sum(integrate_cells(mesh, quad, integrand)))
    e = problem.field("u") - interpolate(mesh, problem.u)
    term2 = bilinear_form(mesh, coeffs, stab, e, gfield.G, quad)
    xs, ys = gfield.probe
    i, j = gfield.config.node
    direct = float(U.values[i, j] - problem.u(xs, ys))
    return ErrorSplit(term1=term1, term2=term2, direct=direct,
                      omega0_in_smooth_or_outflow=gfield.inside_smooth_or_outflow())


@dataclass(frozen=True)
class LocalLayerNorms:
    """L1 norms of layer terms on ``Omega_s`` intersected with ``Omega_0'``.

    ``values`` holds ``||(E - E^I)_x||_1`` for each of ``E1, E2, E12``
    (keys ``"x_E1"`` and so on), ``||(E1 + E12 - (E1 + E12)^I)_y||_1``
    (``"y_E1E12"``) and ``||Lap(E1 + E12)||_1`` (``"lap_E1E12"``).
    ``bounds`` holds the matching reference scale ``N^-rho sigma_y ln N``,
    times ``1/eps`` for the Laplacian.
    """

    values: dict
    bounds: dict

    def ratios(self) -> dict:
        return {key: self.values[key] / self.bounds[key] for key in self.values}


def local_layer_norms(problem: ManufacturedProblem, gfield: GreenField, quad=None) -> LocalLayerNorms:
    mesh = gfield.mesh
    quad = quad or LayerAdaptedRule(6)
    cells = gfield.omega0_prime & mesh.cell_mask(Subdomain.OMEGA_S)
    eps = problem.coeffs.epsilon

    def l1(field, dx, dy):
        def integrand(rule, part):
            return np.abs(field.cell_values(part, rule.xi, rule.eta, dx, dy))

        return float(np.sum(integrate_cells(mesh, quad, integrand)[cells]))

    def err(*names):
        exact = sum((problem.field(n) for n in names[1:]), problem.field(names[0]))
        nodal = interpolate(mesh, lambda x, y: sum(problem.components[n](x, y) for n in names))
        return exact - nodal

    values = {f"x_{name}": l1(err(name), 1, 0) for name in ("E1", "E2", "E12")}
    values["y_E1E12"] = l1(err("E1", "E12"), 0, 1)
    lap = problem.field("E1") + problem.field("E12")

    def lap_integrand(rule, part):
        return np.abs(lap.cell_values(part, rule.xi, rule.eta, 2, 0) + lap.cell_values(part, rule.xi, rule.eta, 0, 2))

    values["lap_E1E12"] = float(np.sum(integrate_cells(mesh, quad, lap_integrand)[cells]))
    N = mesh.N
    scale = N ** (-mesh.config.rho) * gfield.config.sigma_y(N) * math.log(N)
    bounds = {key: scale for key in values}
    bounds["lap_E1E12"] = scale / eps
    return LocalLayerNorms(values=values, bounds=bounds)
