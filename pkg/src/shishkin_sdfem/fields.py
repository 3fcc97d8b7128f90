"""Scalar fields that can be evaluated cell-wise on a Shishkin mesh.

Every field answers one question: its value (or a partial derivative) at a
set of reference points ``(xi, eta)`` in ``[0, 1]^2`` mapped into every cell
of a mesh.  The result has shape ``(N, N, P)`` indexed by cell ``[i-1, j-1]``
and point.  Derivatives are taken cell-wise, so piecewise fields such as
``u - u^I`` are handled without trouble at cell edges.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["CellField", "ExactField", "cell_points"]


def cell_points(mesh, xi, eta):
    """Physical coordinates of reference points in every cell, each ``(N, N, P)``."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    X = mesh.xs[:-1, None, None] + mesh.hx[:, None, None] * xi[None, None, :]
    Y = mesh.ys[None, :-1, None] + mesh.hy[None, :, None] * eta[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    return X, Y


class CellField:
    """Base class; subclasses implement :meth:`cell_values`."""

    def cell_values(self, mesh, xi, eta, dx: int = 0, dy: int = 0) -> np.ndarray:
        raise NotImplementedError

    def __add__(self, other: "CellField") -> "CellField":
        return _Combination(((1.0, self), (1.0, other)))

    def __sub__(self, other: "CellField") -> "CellField":
        return _Combination(((1.0, self), (-1.0, other)))

    def __mul__(self, alpha: float) -> "CellField":
        return _Combination(((float(alpha), self),))

    __rmul__ = __mul__

    def __neg__(self) -> "CellField":
        return _Combination(((-1.0, self),))


class ExactField(CellField):
    """A field given by a callable ``fn(x, y, dx, dy)`` with exact derivatives."""

    def __init__(self, fn: Callable[..., np.ndarray], name: str = "field"):
        self.fn = fn
        self.name = name

    def __call__(self, x, y, dx: int = 0, dy: int = 0):
        return self.fn(x, y, dx, dy)

    def cell_values(self, mesh, xi, eta, dx=0, dy=0):
        X, Y = cell_points(mesh, xi, eta)
        return np.asarray(self.fn(X, Y, dx, dy), dtype=float) * np.ones_like(X)

    def __repr__(self):
        return f"ExactField({self.name})"


class _Combination(CellField):
    def __init__(self, terms):
        flat = []
        for alpha, f in terms:
            if isinstance(f, _Combination):
                flat.extend((alpha * beta, g) for beta, g in f.terms)
            else:
                flat.append((alpha, f))
        self.terms = tuple(flat)

    def cell_values(self, mesh, xi, eta, dx=0, dy=0):
        out = None
        for alpha, f in self.terms:
            vals = alpha * f.cell_values(mesh, xi, eta, dx, dy)
            out = vals if out is None else out + vals
        return out
