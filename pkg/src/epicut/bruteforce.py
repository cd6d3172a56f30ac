"""Small brute-force reference oracles used to cross-check the solver.

Deliberately independent of the solver modules: plain enumeration and
dense sampling with numpy only, so agreement between the two paths is
meaningful evidence.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .errors import SizeLimitExceeded
from .lp import LinearSystem

# Hard caps keep the exponential enumerations honest about their scope.
_MAX_VERTEX_DIM = 4
_MAX_VERTEX_ROWS = 12
_MAX_GRID_ROWS = 4
_MAX_GRID_RESOLUTION = 200
_MAX_ACTIVE_ROWS = 4


@dataclass
class OracleFeasibility:
    feasible: bool
    witness: Optional[np.ndarray]
    min_norm_point: Optional[np.ndarray]


def vertex_enumerate_feasible(
    system: LinearSystem, tol: float = 1e-9
) -> OracleFeasibility:
    """Decide feasibility of A x + b <= 0 by enumerating tight-row subsets.

    For every row subset of size at most n, the least-norm solution of
    the corresponding equality system is a candidate; the min-norm
    feasible point always arises this way (it is the least-norm point of
    the affine hull of its own tight rows), so an empty candidate pass
    proves infeasibility.
    """
    n, m = system.n, system.m
    if n > _MAX_VERTEX_DIM:
        raise SizeLimitExceeded(f"dimension {n} exceeds oracle cap {_MAX_VERTEX_DIM}")
    if m > _MAX_VERTEX_ROWS:
        raise SizeLimitExceeded(f"row count {m} exceeds oracle cap {_MAX_VERTEX_ROWS}")

    best: Optional[np.ndarray] = None
    best_norm = math.inf
    for size in range(0, min(n, m) + 1):
        for subset in itertools.combinations(range(m), size):
            if size == 0:
                x = np.zeros(n)
            else:
                a_sub = system.rows[list(subset)]
                b_sub = system.offsets[list(subset)]
                x, _, _, _ = np.linalg.lstsq(a_sub, -b_sub, rcond=None)
                if float(np.max(np.abs(a_sub @ x + b_sub))) > 1e-8:
                    continue  # inconsistent tight set
            if system.violation(x) <= tol:
                nx = float(np.linalg.norm(x))
                if nx < best_norm:
                    best_norm = nx
                    best = x
    if best is None:
        return OracleFeasibility(False, None, None)
    return OracleFeasibility(True, best.copy(), best)


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """All tuples of `parts` nonnegative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def simplex_grid_min(
    system: LinearSystem, resolution: int = 100
) -> Tuple[float, np.ndarray]:
    """Minimum of ||A^T q||^2 over the lattice {q = k/resolution} in the simplex."""
    m = system.m
    if m > _MAX_GRID_ROWS:
        raise SizeLimitExceeded(f"row count {m} exceeds oracle cap {_MAX_GRID_ROWS}")
    if resolution > _MAX_GRID_RESOLUTION or resolution < 1:
        raise SizeLimitExceeded(
            f"resolution {resolution} outside [1, {_MAX_GRID_RESOLUTION}]"
        )
    best_value = math.inf
    best_q = np.full(m, 1.0 / m)
    for comp in _compositions(resolution, m):
        q = np.asarray(comp, dtype=float) / resolution
        g = system.rows.T @ q
        value = float(g @ g)
        if value < best_value:
            best_value = value
            best_q = q
    return best_value, best_q


def sample_subgradient_norms(
    system: LinearSystem, x, count: int = 64, seed: int = 0
) -> np.ndarray:
    """Norms of convex combinations of the rows active at x.

    Activity is recomputed here (row value within 1e-12 of the max), and
    the active set is capped so the sample stays a meaningful sweep of
    the subdifferential.  Vertex weights are always included.
    """
    x = np.asarray(x, dtype=float)
    values = system.rows @ x + system.offsets
    top = float(np.max(values))
    active = np.flatnonzero(values >= top - 1e-12)
    if active.size > _MAX_ACTIVE_ROWS:
        raise SizeLimitExceeded(
            f"{active.size} active rows exceed oracle cap {_MAX_ACTIVE_ROWS}"
        )
    rows = system.rows[active]
    k = active.size
    weights = [np.eye(k)[i] for i in range(k)]
    rng = np.random.default_rng(seed)
    raw = rng.random((count, k))
    raw /= raw.sum(axis=1, keepdims=True)
    weights.extend(raw)
    grads = np.asarray(weights) @ rows
    return np.linalg.norm(grads, axis=1)
