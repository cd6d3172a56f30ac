"""Ellipsoid geometry: membership, halfspace intersection, cut updates.

An ellipsoid is stored as a center c and a symmetric positive-definite
matrix P with E = { x : (x - c)^T P^{-1} (x - c) <= 1 }.  Membership is
evaluated through a Cholesky solve, so P is never inverted explicitly.
Volume is tracked in log space from the closed-form per-cut determinant
ratio instead of recomputed determinants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DegenerateShape, DimensionMismatch, PreconditionViolated

# Squared Cholesky pivots below this signal a numerically collapsed shape.
_PIVOT_FLOOR = 1e-300

_MEMBERSHIP_TOL = 1e-9


class Ellipsoid:
    """E = { x : (x - center)^T shape_inv^{-1} (x - center) <= 1 }.

    ``shape_inv`` is the matrix P above.  Instances are immutable in use:
    every cut builds a fresh object, re-symmetrizes P exactly, and factors
    it once so later membership tests are a pair of triangular solves.
    """

    __slots__ = ("dim", "center", "shape_inv", "log_volume_ratio", "_chol")

    def __init__(self, center, shape_inv, log_volume_ratio: float = 0.0):
        center = np.asarray(center, dtype=float)
        shape = np.asarray(shape_inv, dtype=float)
        if center.ndim != 1 or center.size == 0:
            raise DimensionMismatch("center must be a nonempty vector")
        d = center.shape[0]
        if shape.shape != (d, d):
            raise DimensionMismatch(
                f"shape matrix is {shape.shape}, expected ({d}, {d})"
            )
        shape = (shape + shape.T) / 2.0
        try:
            chol = np.linalg.cholesky(shape)
        except np.linalg.LinAlgError as exc:
            raise DegenerateShape("shape matrix is not positive definite") from exc
        pivot = float(np.min(np.diagonal(chol)))
        if pivot * pivot < _PIVOT_FLOOR:
            raise DegenerateShape(
                f"smallest factorization pivot {pivot * pivot:.3e} below {_PIVOT_FLOOR:g}"
            )
        self.dim = d
        self.center = center
        self.shape_inv = shape
        self.log_volume_ratio = float(log_volume_ratio)
        self._chol = chol

    @classmethod
    def ball(cls, center, radius: float) -> "Ellipsoid":
        center = np.asarray(center, dtype=float)
        if not radius > 0.0:
            raise ValueError("ball radius must be positive")
        return cls(center, (radius * radius) * np.eye(center.shape[0]))

    def quadratic_form(self, x) -> float:
        """(x - c)^T P^{-1} (x - c), via the cached factor."""
        x = np.asarray(x, dtype=float)
        if x.shape != self.center.shape:
            raise DimensionMismatch("point dimension does not match ellipsoid")
        w = np.linalg.solve(self._chol, x - self.center)
        return float(w @ w)

    def contains(self, x) -> bool:
        return self.quadratic_form(x) <= 1.0 + _MEMBERSHIP_TOL

    def contains_many(self, points) -> np.ndarray:
        """Vectorized membership for an (k, dim) array of points."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionMismatch("points must be a (k, dim) array")
        w = np.linalg.solve(self._chol, (pts - self.center).T)
        return (w * w).sum(axis=0) <= 1.0 + _MEMBERSHIP_TOL

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"Ellipsoid(dim={self.dim}, center={self.center!r}, "
            f"log_volume_ratio={self.log_volume_ratio:.6f})"
        )


class Halfspace:
    """{ x : normal^T (x - anchor) <= 0 }."""

    __slots__ = ("normal", "anchor")

    def __init__(self, normal, anchor):
        normal = np.asarray(normal, dtype=float)
        anchor = np.asarray(anchor, dtype=float)
        if normal.ndim != 1 or anchor.shape != normal.shape:
            raise DimensionMismatch("normal and anchor must be vectors of equal length")
        if not float(normal @ normal) > 0.0:
            raise ValueError("halfspace normal must be nonzero")
        self.normal = normal
        self.anchor = anchor

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def violation(self, x) -> float:
        """normal^T (x - anchor); positive outside the halfspace."""
        return float(self.normal @ (np.asarray(x, dtype=float) - self.anchor))


class CutKind(Enum):
    UPDATED = "updated"
    EMPTY_INTERSECTION = "empty_intersection"
    NO_CUT = "no_cut"


@dataclass(frozen=True, eq=False)
class CutOutcome:
    kind: CutKind
    ellipsoid: Optional[Ellipsoid]  # present only for UPDATED
    depth_used: float               # normalized depth alpha


def deep_cut(e: Ellipsoid, h: Halfspace, slack: float) -> CutOutcome:
    """Minimum-volume ellipsoid containing E cut at depth ``slack``.

    The cut constraint is { x : h.normal^T (x - e.center) + slack <= 0 };
    h.anchor plays no role here.  With alpha = slack / sqrt(H^T P H):
    alpha >= 1 certifies an empty intersection, alpha <= -1/d means the
    plane lies beyond the far side and no update helps (NO_CUT).  A
    negative slack (shallow cut) is accepted; the solver only ever passes
    slack >= 0.
    """
    if h.dim != e.dim:
        raise DimensionMismatch("halfspace dimension does not match ellipsoid")
    d = e.dim
    ph = e.shape_inv @ h.normal
    h2 = float(h.normal @ ph)
    if not h2 > 0.0:
        raise DegenerateShape("cut direction has nonpositive ellipsoid norm")
    root = math.sqrt(h2)
    alpha = float(slack) / root
    if alpha >= 1.0:
        return CutOutcome(CutKind.EMPTY_INTERSECTION, None, alpha)
    if alpha <= -1.0 / d:
        return CutOutcome(CutKind.NO_CUT, None, alpha)
    step = (1.0 + d * alpha) / (d + 1.0)
    new_center = e.center - step * (ph / root)
    if d == 1:
        # The generic formulas divide by d^2 - 1; the 1-D interval update
        # is exact and trivial.
        new_shape = e.shape_inv * ((1.0 - alpha) ** 2 / 4.0)
        dlog = math.log((1.0 - alpha) / 2.0)
    else:
        sigma = d * d * (1.0 - alpha * alpha) / (d * d - 1.0)
        tau = 2.0 * step / (1.0 + alpha)
        new_shape = sigma * (e.shape_inv - tau * np.outer(ph, ph) / h2)
        # vol(E')/vol(E) = sqrt(sigma^d * (1 - tau)); 1 - tau simplifies to
        # (d-1)(1-alpha) / ((d+1)(1+alpha)).
        dlog = 0.5 * (
            d * math.log(sigma)
            + math.log((d - 1.0) * (1.0 - alpha))
            - math.log((d + 1.0) * (1.0 + alpha))
        )
    try:
        updated = Ellipsoid(new_center, new_shape, e.log_volume_ratio + dlog)
    except DegenerateShape:
        # A rank-one downdate of an extremely thin shape matrix can round
        # indefinite.  Flooring the bad eigenvalues yields a superset of
        # the exact update (containment survives); the volume change is
        # then recomputed exactly from the eigenvalues.
        updated = _inflate_to_valid(new_center, new_shape, e)
    return CutOutcome(CutKind.UPDATED, updated, alpha)


def _inflate_to_valid(center: np.ndarray, shape: np.ndarray, prev: Ellipsoid) -> Ellipsoid:
    sym = 0.5 * (shape + shape.T)
    w, vec = np.linalg.eigh(sym)
    top = float(w[-1])
    if not top > 0.0:
        raise DegenerateShape("shape matrix collapsed in every direction")
    w = np.maximum(w, top * 1e-15)
    repaired = (vec * w) @ vec.T
    # The previous shape passed Cholesky, but eigvalsh may still report a
    # nonpositive value for it at this conditioning; measure both sides
    # with the same relative floor.
    prev_w = np.linalg.eigvalsh(prev.shape_inv)
    prev_w = np.maximum(prev_w, float(prev_w[-1]) * 1e-15)
    dlog = 0.5 * (float(np.sum(np.log(w))) - float(np.sum(np.log(prev_w))))
    return Ellipsoid(center, repaired, prev.log_volume_ratio + dlog)


def central_cut(e: Ellipsoid, h: Halfspace) -> CutOutcome:
    """Cut through the center: h.anchor must coincide with e.center.

    Delegates to deep_cut with slack 0 so the two agree bit for bit.
    """
    if h.dim != e.dim:
        raise DimensionMismatch("halfspace dimension does not match ellipsoid")
    gap = float(np.max(np.abs(h.anchor - e.center)))
    scale = 1.0 + float(np.max(np.abs(e.center)))
    if gap > 1e-9 * scale:
        raise PreconditionViolated(
            "central cut requires the halfspace anchored at the ellipsoid center"
        )
    return deep_cut(e, h, 0.0)


def intersects_halfspace(e: Ellipsoid, h: Halfspace) -> bool:
    """True iff E and the halfspace share a point.

    Short-circuits when the center already satisfies the constraint;
    otherwise compares the center's plane distance against the ellipsoid
    extent along the normal, strictly and with no tolerance padding.
    """
    if h.dim != e.dim:
        raise DimensionMismatch("halfspace dimension does not match ellipsoid")
    s = float(h.normal @ (e.center - h.anchor))
    if s <= 0.0:
        return True
    h2 = float(h.normal @ (e.shape_inv @ h.normal))
    return s * s < h2
