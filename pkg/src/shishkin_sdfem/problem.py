"""Convection-diffusion data and manufactured solutions with layer structure.

The model problem is ``-eps * Lap(u) + b u_x + c u = f`` on the unit square
with ``u = 0`` on the boundary.  Benchmarks are tensor products
``u(x, y) = g1(x) g2(y)`` where ``g1`` carries an exponential layer at
``x = 1`` and ``g2`` two characteristic layers at ``y = 0`` and ``y = 1``.
Splitting each factor into a smooth and a layer part gives the four
components ``S, E1, E2, E12`` of the usual regularity decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .fields import ExactField
from .mesh import InvalidConfigError

__all__ = [
    "CoefficientSet",
    "ManufacturedProblem",
    "make_benchmark",
    "eval_component",
    "COMPONENTS",
    "BENCHMARKS",
]

COMPONENTS = ("S", "E1", "E2", "E12")

# exp(-t) is flushed to exactly 0 beyond this argument
UNDERFLOW_CUTOFF = 700.0


def decay(t):
    """``exp(-t)`` for ``t >= 0`` with a deterministic flush to zero past 700."""
    t = np.asarray(t, dtype=float)
    return np.where(t > UNDERFLOW_CUTOFF, 0.0, np.exp(-np.minimum(t, UNDERFLOW_CUTOFF)))


@dataclass(frozen=True)
class CoefficientSet:
    """Constant data ``eps``, ``b``, ``c`` and the lower bound ``beta <= b``.

    ``beta`` defaults to ``b``.
    """

    epsilon: float
    b: float = 1.0
    c: float = 1.0
    beta: float | None = None

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", self.b)
        for name in ("epsilon", "b", "c", "beta"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0:
                raise InvalidConfigError(f"{name} must be positive and finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.epsilon >= 1:
            raise InvalidConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.b < self.beta:
            raise InvalidConfigError(f"b={self.b} must be >= beta={self.beta}")


# --- one-dimensional profiles -------------------------------------------------
# Each profile is a callable p(t, k) returning the k-th derivative.


def _linear(t, k):
    t = np.asarray(t, dtype=float)
    if k == 0:
        return t
    if k == 1:
        return np.ones_like(t)
    return np.zeros_like(t)


def _one(t, k):
    t = np.asarray(t, dtype=float)
    return np.ones_like(t) if k == 0 else np.zeros_like(t)


def _expo(t, k):
    # (e^t - 1) / (e - 1): vanishes at 0, equals 1 at 1, no vanishing derivative
    t = np.asarray(t, dtype=float)
    if k == 0:
        return np.expm1(t) / math.expm1(1.0)
    return np.exp(t) / math.expm1(1.0)


def _bump(t, k):
    # 1 + t(1 - t): equals 1 at both ends
    t = np.asarray(t, dtype=float)
    if k == 0:
        return 1.0 + t * (1.0 - t)
    if k == 1:
        return 1.0 - 2.0 * t
    if k == 2:
        return np.full_like(t, -2.0)
    return np.zeros_like(t)


def _x_layer(eps, beta, amplitude):
    """-A (e^{-beta(1-x)/eps} - e^{-beta/eps}) / (1 - e^{-beta/eps})."""
    tail = float(decay(beta / eps))
    scale = amplitude / (1.0 - tail)

    def layer(x, k):
        x = np.asarray(x, dtype=float)
        e = decay(beta * (1.0 - x) / eps)
        if k == 0:
            return -scale * (e - tail)
        return -scale * (beta / eps) ** k * e

    return layer


def _y_layer(eps, amplitude):
    """-A (e^{-y/sqrt(eps)} + e^{-(1-y)/sqrt(eps)}) / (1 + e^{-1/sqrt(eps)})."""
    r = math.sqrt(eps)
    scale = amplitude / (1.0 + float(decay(1.0 / r)))

    def layer(y, k):
        y = np.asarray(y, dtype=float)
        lo = decay(y / r)
        hi = decay((1.0 - y) / r)
        return -scale * ((-1.0 / r) ** k * lo + (1.0 / r) ** k * hi)

    return layer


def _product(px, py):
    def fn(x, y, dx=0, dy=0):
        return px(x, dx) * py(y, dy)

    return fn


# smooth x-profile, smooth y-profile; the y-profile must equal 1 at y = 0, 1
BENCHMARKS: dict[str, tuple[Callable, Callable]] = {
    "plain": (_linear, _one),
    "curved": (_expo, _bump),
}


@dataclass(frozen=True, eq=False)
class ManufacturedProblem:
    """Exact solution ``u = S + E1 + E2 + E12`` and its forcing.

    ``components`` maps each of ``S, E1, E2, E12`` to a callable
    ``fn(x, y, dx, dy)`` returning exact partial derivatives.  Any such set
    of closures can be supplied directly; :func:`make_benchmark` builds the
    tensor-product ones.
    """

    coeffs: CoefficientSet
    components: Mapping[str, Callable]
    name: str = "custom"
    _fields: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        missing = set(COMPONENTS) - set(self.components)
        if missing:
            raise ValueError(f"missing solution components: {sorted(missing)}")

    def u(self, x, y, dx=0, dy=0):
        return sum(self.components[name](x, y, dx, dy) for name in COMPONENTS)

    def f(self, x, y, dx=0, dy=0):
        c = self.coeffs
        lap = self.u(x, y, dx + 2, dy) + self.u(x, y, dx, dy + 2)
        return -c.epsilon * lap + c.b * self.u(x, y, dx + 1, dy) + c.c * self.u(x, y, dx, dy)

    def laplacian(self, x, y):
        return self.u(x, y, 2, 0) + self.u(x, y, 0, 2)

    def evaluator(self, which: str) -> Callable:
        if which == "u":
            return self.u
        if which == "f":
            return self.f
        if which in COMPONENTS:
            return self.components[which]
        raise KeyError(f"unknown field {which!r}")

    def field(self, which: str) -> ExactField:
        """Component as an :class:`ExactField` usable by the norm routines."""
        if which not in self._fields:
            self._fields[which] = ExactField(self.evaluator(which), name=which)
        return self._fields[which]


def make_benchmark(coeffs: CoefficientSet, variant: str = "plain") -> ManufacturedProblem:
    """Tensor-product benchmark ``u = g1(x) g2(y)``.

    ``variant="plain"`` gives ``g1(x) = x - (e^{-beta(1-x)/eps} - e^{-beta/eps})
    / (1 - e^{-beta/eps})`` and ``g2(y) = 1 - (e^{-y/sqrt(eps)} +
    e^{-(1-y)/sqrt(eps)}) / (1 + e^{-1/sqrt(eps)})``.  With these the smooth
    part ``S = x`` is bilinear and ``E1`` is independent of ``y``.

    ``variant="curved"`` replaces the smooth factors by ``(e^x - 1)/(e - 1)``
    and ``1 + y(1 - y)`` so that every component has non-trivial third
    derivatives; the layer factors keep the same shape.
    """
    try:
        smooth_x, smooth_y = BENCHMARKS[variant]
    except KeyError:
        raise ValueError(f"unknown benchmark {variant!r}; choose from {sorted(BENCHMARKS)}") from None
    eps, beta = coeffs.epsilon, coeffs.beta
    layer_x = _x_layer(eps, beta, amplitude=float(smooth_x(1.0, 0)))
    layer_y = _y_layer(eps, amplitude=float(smooth_y(0.0, 0)))
    components = {
        "S": _product(smooth_x, smooth_y),
        "E1": _product(layer_x, smooth_y),
        "E2": _product(smooth_x, layer_y),
        "E12": _product(layer_x, layer_y),
    }
    return ManufacturedProblem(coeffs=coeffs, components=components, name=variant)


def eval_component(problem: ManufacturedProblem, which: str, x, y, dx: int = 0, dy: int = 0):
    """Exact value of ``d^{dx+dy} comp / dx^dx dy^dy`` at ``(x, y)``.

    ``which`` is one of ``S, E1, E2, E12, u, f``; derivative orders are
    limited to ``dx + dy <= 3``.
    """
    if dx < 0 or dy < 0 or dx + dy > 3:
        raise ValueError(f"unsupported derivative order (dx={dx}, dy={dy}); need dx + dy <= 3")
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if np.any((x_arr < 0) | (x_arr > 1) | (y_arr < 0) | (y_arr > 1)):
        raise ValueError("evaluation point outside the closed unit square")
    value = problem.evaluator(which)(x_arr, y_arr, dx, dy)
    return value.item() if np.ndim(value) == 0 else value
