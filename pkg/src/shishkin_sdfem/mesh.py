"""Piecewise-uniform Shishkin mesh on the unit square.

The mesh has ``N`` intervals per direction.  In ``x`` half of them cover the
coarse part ``[0, 1 - lambda_x]`` and half the exponential layer at ``x = 1``;
in ``y`` a third covers each characteristic layer and a third the interior.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "InvalidConfigError",
    "MeshConfig",
    "TransitionParams",
    "Subdomain",
    "ShishkinMesh",
    "compute_transition_params",
    "build_mesh",
    "classify_point",
    "classify_cell",
]


class InvalidConfigError(ValueError):
    """Raised for mesh or problem parameters outside their admissible range."""


class Subdomain(enum.Enum):
    OMEGA_S = "Omega_s"
    OMEGA_1 = "Omega_1"
    OMEGA_2 = "Omega_2"
    OMEGA_12 = "Omega_12"

    def __str__(self) -> str:
        return self.value


# tie-break on shared (closed) boundaries; highest first
_PRIORITY = (Subdomain.OMEGA_12, Subdomain.OMEGA_2, Subdomain.OMEGA_1, Subdomain.OMEGA_S)


@dataclass(frozen=True)
class MeshConfig:
    N: int
    epsilon: float
    beta: float = 1.0
    rho: float = 2.5

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise InvalidConfigError(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("epsilon", "beta", "rho"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidConfigError(f"{name} must be finite, got {value!r}")
            if value <= 0:
                raise InvalidConfigError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)
        if self.N < 6 or self.N % 6:
            raise InvalidConfigError(f"N must be a positive multiple of 6, got {self.N}")


@dataclass(frozen=True)
class TransitionParams:
    lambda_x: float
    lambda_y: float
    saturated_x: bool
    saturated_y: bool

    @property
    def saturated(self) -> bool:
        """True when either parameter hit its cap (the analysis assumes neither does)."""
        return self.saturated_x or self.saturated_y


def compute_transition_params(config: MeshConfig) -> TransitionParams:
    """Mesh transition points ``lambda_x`` and ``lambda_y`` for ``config``."""
    logN = math.log(config.N)
    lx_layer = config.rho * config.epsilon / config.beta * logN
    ly_layer = config.rho * math.sqrt(config.epsilon) * logN
    lambda_x = min(0.5, lx_layer)
    lambda_y = min(0.25, ly_layer)
    return TransitionParams(
        lambda_x=lambda_x,
        lambda_y=lambda_y,
        saturated_x=lambda_x == 0.5,
        saturated_y=lambda_y == 0.25,
    )


@dataclass(frozen=True, eq=False)
class ShishkinMesh:
    """Tensor-product Shishkin mesh.

    ``xs`` and ``ys`` hold the ``N + 1`` node coordinates.  Cell ``(i, j)`` with
    ``1 <= i, j <= N`` is ``[xs[i-1], xs[i]] x [ys[j-1], ys[j]]``; the
    vectorised cell arrays below are indexed ``[i - 1, j - 1]``.
    """

    config: MeshConfig
    params: TransitionParams
    xs: np.ndarray
    ys: np.ndarray
    _tags: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.config.N

    @cached_property
    def hx(self) -> np.ndarray:
        return np.diff(self.xs)

    @cached_property
    def hy(self) -> np.ndarray:
        return np.diff(self.ys)

    @cached_property
    def x_centers(self) -> np.ndarray:
        return 0.5 * (self.xs[:-1] + self.xs[1:])

    @cached_property
    def y_centers(self) -> np.ndarray:
        return 0.5 * (self.ys[:-1] + self.ys[1:])

    @property
    def x_transition(self) -> float:
        return self.xs[self.N // 2]

    @property
    def y_transitions(self) -> tuple[float, float]:
        return self.ys[self.N // 3], self.ys[2 * self.N // 3]

    @property
    def coarse_hx(self) -> float:
        return (1.0 - self.params.lambda_x) / (self.N / 2)

    @property
    def fine_hx(self) -> float:
        return self.params.lambda_x / (self.N / 2)

    @property
    def coarse_hy(self) -> float:
        return (1.0 - 2.0 * self.params.lambda_y) / (self.N / 3)

    @property
    def fine_hy(self) -> float:
        return self.params.lambda_y / (self.N / 3)

    def cell_tags(self) -> np.ndarray:
        """``(N, N)`` object array of :class:`Subdomain` per cell (read-only)."""
        return self._tags

    def cell_mask(self, *regions: Subdomain) -> np.ndarray:
        """Boolean ``(N, N)`` mask of the cells belonging to any of ``regions``."""
        mask = np.zeros((self.N, self.N), dtype=bool)
        for region in regions:
            mask |= self._tags == region
        return mask

    def cell_areas(self) -> np.ndarray:
        return np.outer(self.hx, self.hy)

    def node_mask(self, cells: np.ndarray) -> np.ndarray:
        """Nodes (``(N+1, N+1)`` boolean) that are a corner of some cell in ``cells``."""
        nodes = np.zeros((self.N + 1, self.N + 1), dtype=bool)
        nodes[:-1, :-1] |= cells
        nodes[1:, :-1] |= cells
        nodes[:-1, 1:] |= cells
        nodes[1:, 1:] |= cells
        return nodes

    @property
    def cell_window(self) -> tuple[slice, slice]:
        """Index window of the cells covered; all of them for the full mesh."""
        return slice(None), slice(None)

    @property
    def node_window(self) -> tuple[slice, slice]:
        return slice(None), slice(None)

    def block(self, i0: int, i1: int, j0: int, j1: int) -> "CellBlock":
        """View of the cells with 0-based indices ``i0 <= a < i1``, ``j0 <= b < j1``."""
        if not (0 <= i0 < i1 <= self.N and 0 <= j0 < j1 <= self.N):
            raise IndexError(f"cell block [{i0}:{i1}, {j0}:{j1}] outside the {self.N}x{self.N} mesh")
        return CellBlock(self, i0, i1, j0, j1)

    def subdomain_measure(self, region: Subdomain) -> float:
        """Exact area of ``region`` from the transition parameters."""
        lx, ly = self.params.lambda_x, self.params.lambda_y
        width = {Subdomain.OMEGA_S: 1 - lx, Subdomain.OMEGA_2: 1 - lx}.get(region, lx)
        height = 1 - 2 * ly if region in (Subdomain.OMEGA_S, Subdomain.OMEGA_1) else 2 * ly
        return width * height


@dataclass(frozen=True, eq=False)
class CellBlock:
    """A rectangular block of cells of a mesh.

    It exposes the same per-cell arrays as the mesh (``xs``, ``ys``, ``hx``,
    ``hy``, ``cell_areas``) restricted to the block, so cell-wise field
    evaluation and quadrature can run on a few cells only.
    """

    mesh: ShishkinMesh
    i0: int
    i1: int
    j0: int
    j1: int

    @property
    def N(self) -> int:
        return self.mesh.N

    @property
    def cell_window(self) -> tuple[slice, slice]:
        return slice(self.i0, self.i1), slice(self.j0, self.j1)

    @property
    def node_window(self) -> tuple[slice, slice]:
        return slice(self.i0, self.i1 + 1), slice(self.j0, self.j1 + 1)

    @property
    def xs(self) -> np.ndarray:
        return self.mesh.xs[self.i0:self.i1 + 1]

    @property
    def ys(self) -> np.ndarray:
        return self.mesh.ys[self.j0:self.j1 + 1]

    @property
    def hx(self) -> np.ndarray:
        return self.mesh.hx[self.i0:self.i1]

    @property
    def hy(self) -> np.ndarray:
        return self.mesh.hy[self.j0:self.j1]

    def cell_areas(self) -> np.ndarray:
        return np.outer(self.hx, self.hy)


def _x_nodes(N: int, lambda_x: float) -> np.ndarray:
    half = N // 2
    xs = np.empty(N + 1)
    i = np.arange(half + 1)
    xs[: half + 1] = 2 * i * (1 - lambda_x) / N
    i = np.arange(half + 1, N + 1)
    xs[half + 1:] = 1 - 2 * (N - i) * lambda_x / N
    xs[half] = 1 - lambda_x
    xs[N] = 1.0
    return xs


def _y_nodes(N: int, lambda_y: float) -> np.ndarray:
    third = N // 3
    ys = np.empty(N + 1)
    j = np.arange(third + 1)
    ys[: third + 1] = 3 * j * lambda_y / N
    j = np.arange(third + 1, 2 * third + 1)
    ys[third + 1: 2 * third + 1] = (3 * j / N - 1) - 3 * (2 * j - N) * lambda_y / N
    j = np.arange(2 * third + 1, N + 1)
    ys[2 * third + 1:] = 1 - 3 * (N - j) * lambda_y / N
    ys[third] = lambda_y
    ys[2 * third] = 1 - lambda_y
    ys[N] = 1.0
    return ys


def _tag(in_x_layer: bool, in_y_layer: bool) -> Subdomain:
    if in_x_layer:
        return Subdomain.OMEGA_12 if in_y_layer else Subdomain.OMEGA_1
    return Subdomain.OMEGA_2 if in_y_layer else Subdomain.OMEGA_S


def build_mesh(config: MeshConfig) -> ShishkinMesh:
    params = compute_transition_params(config)
    N = config.N
    xs = _x_nodes(N, params.lambda_x)
    ys = _y_nodes(N, params.lambda_y)
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise InvalidConfigError("mesh nodes are not strictly increasing")

    # transition points are nodes, so cells are tagged by index range alone
    x_layer = np.arange(1, N + 1) > N // 2
    j = np.arange(1, N + 1)
    y_layer = (j <= N // 3) | (j > 2 * N // 3)
    lookup = np.empty((2, 2), dtype=object)
    for a in (0, 1):
        for b in (0, 1):
            lookup[a, b] = _tag(bool(a), bool(b))
    tags = lookup[x_layer.astype(int)[:, None], y_layer.astype(int)[None, :]]
    tags.setflags(write=False)
    xs.setflags(write=False)
    ys.setflags(write=False)
    return ShishkinMesh(config=config, params=params, xs=xs, ys=ys, _tags=tags)


def classify_point(mesh: ShishkinMesh, x: float, y: float) -> Subdomain:
    """Subdomain containing ``(x, y)``; shared boundaries go to the
    highest-priority region in the order Omega_12, Omega_2, Omega_1, Omega_s."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"point ({x}, {y}) lies outside the closed unit square")
    x_t = mesh.x_transition
    y_lo, y_hi = mesh.y_transitions
    in_x_layer = x >= x_t
    in_y_layer = y <= y_lo or y >= y_hi
    in_x_coarse = x <= x_t
    in_y_coarse = y_lo <= y <= y_hi
    members = {
        Subdomain.OMEGA_12: in_x_layer and in_y_layer,
        Subdomain.OMEGA_2: in_x_coarse and in_y_layer,
        Subdomain.OMEGA_1: in_x_layer and in_y_coarse,
        Subdomain.OMEGA_S: in_x_coarse and in_y_coarse,
    }
    for region in _PRIORITY:
        if members[region]:
            return region
    raise AssertionError("the four subdomains cover the closed square")


def classify_cell(mesh: ShishkinMesh, i: int, j: int) -> Subdomain:
    """Subdomain of cell ``tau_ij`` (1-based indices, as in ``x_{i-1} <= x <= x_i``)."""
    N = mesh.N
    if not (1 <= i <= N and 1 <= j <= N):
        raise IndexError(f"cell ({i}, {j}) out of range 1..{N}")
    return classify_point(mesh, mesh.x_centers[i - 1], mesh.y_centers[j - 1])
