"""Convex oracles: function value plus one deterministic subgradient.

The subdifferential of a piecewise function is a set; every oracle here
returns a single fixed element of it (smallest active index wins) so that
solver runs are reproducible.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import DimensionMismatch
from .geometry import Halfspace

# Absolute gap below the max that still counts as an active piece.
ACTIVE_TOL = 1e-12


class ConvexOracle(ABC):
    """Finite convex function on R^n with a subgradient everywhere."""

    @property
    @abstractmethod
    def dim(self) -> int:
        raise NotImplementedError

    @abstractmethod
    def eval(self, x) -> float:
        raise NotImplementedError

    @abstractmethod
    def subgradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def eval_many(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.array([self.eval(p) for p in pts])


class MaxAffineFunction(ConvexOracle):
    """f(x) = max_k (rows[k] . x + offsets[k])."""

    def __init__(self, rows, offsets):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        offsets = np.asarray(offsets, dtype=float).ravel()
        if rows.shape[0] != offsets.shape[0] or rows.shape[0] == 0:
            raise DimensionMismatch("need one offset per row and at least one row")
        self.rows = rows
        self.offsets = offsets

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def n_pieces(self) -> int:
        return self.rows.shape[0]

    def _values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch("point dimension does not match function")
        return self.rows @ x + self.offsets

    def eval(self, x) -> float:
        return float(np.max(self._values(x)))

    def eval_with_index(self, x) -> Tuple[float, int]:
        """Value and the smallest index active within ACTIVE_TOL."""
        vals = self._values(x)
        top = float(np.max(vals))
        idx = int(np.argmax(vals >= top - ACTIVE_TOL))
        return top, idx

    def subgradient(self, x) -> np.ndarray:
        _, idx = self.eval_with_index(x)
        return self.rows[idx].copy()

    def eval_many(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (pts @ self.rows.T + self.offsets).max(axis=1)


class QuadraticForm(ConvexOracle):
    """f(q) = q^T gram q for a positive-semidefinite gram matrix."""

    def __init__(self, gram):
        gram = np.asarray(gram, dtype=float)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise DimensionMismatch("gram matrix must be square")
        gram = (gram + gram.T) / 2.0
        eigs = np.linalg.eigvalsh(gram)
        scale = max(1.0, float(abs(eigs[-1])))
        if eigs[0] < -1e-8 * scale:
            raise ValueError("gram matrix is not positive semidefinite")
        self.gram = gram

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    def eval(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.gram @ x)

    def subgradient(self, x) -> np.ndarray:
        return 2.0 * (self.gram @ np.asarray(x, dtype=float))

    def eval_many(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.einsum("ij,jk,ik->i", pts, self.gram, pts)


class EpigraphPoint(NamedTuple):
    """A lifted point (x, y); it lies in epi(f) when f(x) <= y."""

    x: np.ndarray
    y: float


class LinearConstraintSet:
    """{ z : rows z + offsets <= 0 componentwise }."""

    def __init__(self, rows, offsets):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        offsets = np.asarray(offsets, dtype=float).ravel()
        if rows.shape[0] != offsets.shape[0] or rows.shape[0] == 0:
            raise DimensionMismatch("need one offset per row and at least one row")
        self.rows = rows
        self.offsets = offsets
        norms = np.linalg.norm(rows, axis=1)
        self.row_norms = norms
        self._safe_norms = np.maximum(norms, 1e-300)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    def violations(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.rows @ z + self.offsets

    def max_violation(self, z) -> float:
        return float(np.max(self.violations(z)))

    def normalized_max_violation(self, z) -> Tuple[float, int]:
        """(worst violation in Euclidean-distance units, its row index)."""
        scaled = self.violations(z) / self._safe_norms
        idx = int(np.argmax(scaled))
        return float(scaled[idx]), idx

    def as_max_affine(self) -> MaxAffineFunction:
        """The violation function max_k (rows[k] z + offsets[k]) as an oracle."""
        return MaxAffineFunction(self.rows, self.offsets)


def epigraph_separator(f: ConvexOracle, point: EpigraphPoint) -> Optional[Halfspace]:
    """Halfspace containing epi(f) and excluding ``point``; None if inside.

    The returned normal is (g, -1) with g a subgradient at point.x,
    anchored at (point.x, f(point.x)).
    """
    x = np.asarray(point.x, dtype=float)
    if x.shape != (f.dim,):
        raise DimensionMismatch("point dimension does not match oracle")
    value = float(f.eval(x))
    if value <= point.y:
        return None
    g = f.subgradient(x)
    normal = np.append(g, -1.0)
    anchor = np.append(x, value)
    return Halfspace(normal, anchor)
