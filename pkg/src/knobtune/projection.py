"""Randomized linear maps from the optimizer-facing low-dimensional space
onto the normalized knob space [-1, 1]^D.

Two constructions are provided, plus an identity map so the full-space
baseline runs through the same machinery:

* ``hesbo`` -- a count-sketch-style sparse map: every high-dim row carries
  exactly one nonzero entry, +-1 in a uniformly random column. Projections
  can never leave [-1, 1]^D, so no clipping is needed. Low-dim domain
  [-1, 1]^d.
* ``rembo`` -- a dense matrix with i.i.d. standard-normal entries over the
  low-dim domain [-sqrt(d), sqrt(d)]^d; projected points may fall outside
  the box and are clipped coordinate-wise.

Matrices are drawn once from a seeded PCG64 generator (stream order: hash
columns first, then signs) and are immutable for the whole session;
``project`` is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import hesbo_expand

HESBO = "hesbo"
REMBO = "rembo"
IDENTITY = "identity"

KINDS = (HESBO, REMBO, IDENTITY)


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    kind: str
    high_dim: int
    low_dim: int
    seed: int | None
    hesbo_h: np.ndarray | None = None       # shape (D,), int64, values in [0, d)
    hesbo_sigma: np.ndarray | None = None   # shape (D,), floats +-1
    rembo_entries: np.ndarray | None = None  # shape (D, d)

    @property
    def low_bound(self) -> float:
        """Half-width of the symmetric low-dim domain [-b, b]^d."""
        return math.sqrt(self.low_dim) if self.kind == REMBO else 1.0

    def to_json_dict(self) -> dict:
        doc = {
            "kind": self.kind,
            "high_dim": self.high_dim,
            "low_dim": self.low_dim,
            "seed": self.seed,
        }
        if self.kind == HESBO:
            # embed the realized map so logs stay reproducible even if the
            # generator implementation ever changes
            doc["h"] = [int(v) for v in self.hesbo_h]
            doc["sigma"] = [int(v) for v in self.hesbo_sigma]
        return doc


def _check_dims(high_dim: int, low_dim: int) -> None:
    if low_dim < 1:
        raise ValueError(f"low dimension must be >= 1, got {low_dim}")
    if low_dim > high_dim:
        raise ValueError(
            f"low dimension {low_dim} exceeds high dimension {high_dim}"
        )


def make_hesbo(high_dim: int, low_dim: int, seed: int) -> ProjectionMatrix:
    """Sparse sign-hash projection: h(i) uniform over columns, sigma(i)
    uniform over {-1, +1}, drawn independently per row."""
    _check_dims(high_dim, low_dim)
    rng = np.random.default_rng(seed)
    h = rng.integers(0, low_dim, size=high_dim, dtype=np.int64)
    sigma = rng.choice(np.array([-1.0, 1.0]), size=high_dim)
    return ProjectionMatrix(HESBO, high_dim, low_dim, seed, hesbo_h=h, hesbo_sigma=sigma)


def make_rembo(high_dim: int, low_dim: int, seed: int) -> ProjectionMatrix:
    """Dense Gaussian projection with i.i.d. N(0, 1) entries."""
    _check_dims(high_dim, low_dim)
    rng = np.random.default_rng(seed)
    entries = rng.standard_normal((high_dim, low_dim))
    return ProjectionMatrix(REMBO, high_dim, low_dim, seed, rembo_entries=entries)


def make_identity(dim: int) -> ProjectionMatrix:
    """Coordinate-wise identity; the full-space baseline path."""
    _check_dims(dim, dim)
    return ProjectionMatrix(IDENTITY, dim, dim, None)


def project(matrix: ProjectionMatrix, point: np.ndarray) -> np.ndarray:
    """Map a low-dim point to the D-dimensional normalized space.

    For hesbo, component i equals sigma(i) * p[h(i)] and therefore always
    lies in [-1, 1]; rembo output may exceed the box and needs clipping.
    """
    point = np.ascontiguousarray(point, dtype=np.float64)
    if point.shape != (matrix.low_dim,):
        raise ValueError(
            f"point has shape {point.shape}, expected ({matrix.low_dim},)"
        )
    if matrix.kind == HESBO:
        return hesbo_expand(matrix.hesbo_h, matrix.hesbo_sigma, point[None, :])[0]
    if matrix.kind == REMBO:
        return matrix.rembo_entries @ point
    return point.copy()


def project_batch(matrix: ProjectionMatrix, points: np.ndarray) -> np.ndarray:
    """Vectorized ``project`` over an (n, d) array of points."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if matrix.kind == HESBO:
        return hesbo_expand(matrix.hesbo_h, matrix.hesbo_sigma, points)
    if matrix.kind == REMBO:
        return points @ matrix.rembo_entries.T
    return points.copy()


def clip_to_unit(x: np.ndarray) -> np.ndarray:
    """Clamp every coordinate into [-1, 1]; interior coordinates unchanged."""
    return np.clip(x, -1.0, 1.0)


def make_projection(kind: str, high_dim: int, low_dim: int, seed: int) -> ProjectionMatrix:
    if kind == HESBO:
        return make_hesbo(high_dim, low_dim, seed)
    if kind == REMBO:
        return make_rembo(high_dim, low_dim, seed)
    if kind == IDENTITY:
        return make_identity(high_dim)
    raise ValueError(f"unknown projection kind {kind!r}")


def projection_from_json(doc: dict) -> ProjectionMatrix:
    """Rebuild a matrix from its session-log header serialization."""
    kind = doc["kind"]
    high_dim, low_dim = doc["high_dim"], doc["low_dim"]
    if kind == HESBO:
        h = np.asarray(doc["h"], dtype=np.int64)
        sigma = np.asarray(doc["sigma"], dtype=np.float64)
        return ProjectionMatrix(HESBO, high_dim, low_dim, doc.get("seed"),
                                hesbo_h=h, hesbo_sigma=sigma)
    if kind == REMBO:
        return make_rembo(high_dim, low_dim, doc["seed"])
    if kind == IDENTITY:
        return make_identity(high_dim)
    raise ValueError(f"unknown projection kind {kind!r}")
