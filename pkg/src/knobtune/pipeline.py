"""Conversion of low-dimensional points into concrete knob assignments.

The chain, applied per knob dimension:

    project -> clip (rembo only) -> normalize to [0, 1]
            -> special-value bias (hybrid knobs only) -> scale to the knob

Biasing reserves the first ``S * p`` of the unit interval for the S special
values (consecutive segments of width p in declaration order) and rescales
the rest onto the regular range, so the regular path stays strictly
monotone and local search is undisturbed. Bucketization restricts the
optimizer-facing coordinates to K uniformly spaced values; it never touches
the knob scales themselves.

Everything here is pure and deterministic: the same point always expands to
the identical assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .projection import REMBO, ProjectionMatrix, clip_to_unit, project
from .space import (
    CATEGORICAL,
    INTEGER,
    ConfigSpace,
    KnobSpec,
    SpaceError,
    effective_numeric_range,
)

DEFAULT_BIAS = 0.2
DEFAULT_BUCKETS = 10_000


class Grid:
    """K uniformly spaced values spanning [lo, hi], endpoints included."""

    def __init__(self, lo: float, hi: float, count: int):
        if count < 2:
            raise ValueError(f"bucket count must be >= 2, got {count}")
        if not lo < hi:
            raise ValueError(f"empty grid domain [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)
        self.count = int(count)
        self.step = (self.hi - self.lo) / (self.count - 1)
        self.values = np.linspace(self.lo, self.hi, self.count)
        self.values.setflags(write=False)

    def snap(self, x: np.ndarray) -> np.ndarray:
        """Round to the nearest grid value, ties toward +inf.

        Output values are drawn from ``self.values`` verbatim, so the set of
        reachable values has cardinality exactly ``count``.
        """
        idx = np.floor((np.asarray(x, dtype=np.float64) - self.lo) / self.step + 0.5)
        idx = np.clip(idx.astype(np.int64), 0, self.count - 1)
        return self.values[idx]

    def __repr__(self) -> str:
        return f"Grid(lo={self.lo}, hi={self.hi}, count={self.count})"


def bucketize_grid(lo: float, hi: float, bucket_count: int) -> Grid:
    """Grid of ``bucket_count`` values over [lo, hi], step span/(K-1)."""
    return Grid(lo, hi, bucket_count)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to expand a low-dim point into knob values."""

    projection: ProjectionMatrix
    bias_p: float = DEFAULT_BIAS
    bucket_count: int | None = DEFAULT_BUCKETS

    def grid(self) -> Grid | None:
        if self.bucket_count is None:
            return None
        b = self.projection.low_bound
        return bucketize_grid(-b, b, self.bucket_count)


def validate_pipeline(space: ConfigSpace, config: PipelineConfig) -> None:
    """Check the bias mass and bucket count against a concrete space."""
    if not 0.0 <= config.bias_p < 1.0:
        raise ValueError(f"bias probability must be in [0, 1), got {config.bias_p}")
    if config.bucket_count is not None and config.bucket_count < 2:
        raise ValueError(f"bucket count must be >= 2, got {config.bucket_count}")
    for knob in space.knobs:
        mass = len(knob.special_values) * config.bias_p
        if mass >= 1.0:
            raise SpaceError(
                f"knob {knob.name!r}: {len(knob.special_values)} special values "
                f"at bias {config.bias_p} leave no regular range (mass {mass:.3f} >= 1)"
            )
    if space.dimension != config.projection.high_dim:
        raise ValueError(
            f"projection expects {config.projection.high_dim} knobs, "
            f"space has {space.dimension}"
        )


def normalize_unit(x):
    """Min-max scale [-1, 1] -> [0, 1]; rejects out-of-range input."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < -1.0) or np.any(arr > 1.0):
        raise ValueError("input outside [-1, 1]")
    out = (arr + 1.0) / 2.0
    return float(out) if np.ndim(x) == 0 else out


class BiasOutcome(NamedTuple):
    """Result of routing a unit-interval coordinate through special-value
    biasing: either a special value index, or a rescaled regular coordinate."""

    special_index: int | None
    u: float

    @property
    def is_special(self) -> bool:
        return self.special_index is not None


def apply_bias(u: float, knob: KnobSpec, p: float) -> BiasOutcome:
    """Route u in [0, 1] to special value k when u falls in [k*p, (k+1)*p),
    otherwise rescale the remainder onto [0, 1]. Non-hybrid knobs pass
    through unchanged."""
    count = len(knob.special_values)
    if count == 0 or p == 0.0:
        return BiasOutcome(None, u)
    total = count * p
    if u < total:
        return BiasOutcome(min(int(u / p), count - 1), u)
    return BiasOutcome(None, (u - total) / (1.0 - total))


def unit_to_value(u: float, knob: KnobSpec, range_override=None):
    """Scale u in [0, 1] to a concrete knob value.

    Integers round half-up; categorical knobs split [0, 1] into equal bins
    with u = 1 assigned to the last. ``range_override`` substitutes the
    knob's (min, max), used when biasing routed to the regular remainder.
    """
    if knob.kind == CATEGORICAL:
        n_choices = len(knob.choices)
        idx = int(u * n_choices)
        if idx >= n_choices:
            idx = n_choices - 1
        return knob.choices[idx]
    lo, hi = range_override if range_override is not None else (knob.min, knob.max)
    value = lo + u * (hi - lo)
    if knob.kind == INTEGER:
        return int(math.floor(value + 0.5))
    return value


@dataclass
class KnobAssignment:
    """A concrete configuration plus per-knob provenance.

    ``special_knobs`` maps each knob that took a special value to the index
    of that value; ``clipped`` counts coordinates clamped during a rembo
    projection (always 0 otherwise).
    """

    values: dict[str, float | int | str]
    special_knobs: dict[str, int] = field(default_factory=dict)
    clipped: int = 0

    def to_json_dict(self) -> dict:
        doc = dict(self.values)
        doc["_special"] = sorted(self.special_knobs)
        return doc


def assemble_config(
    space: ConfigSpace, config: PipelineConfig, point: np.ndarray
) -> KnobAssignment:
    """Expand one low-dim point into a full knob assignment.

    The point must lie inside the projection's low-dim domain. Grid
    membership is the suggesting optimizer's responsibility; this function
    expands whatever it is given, which keeps session replay exact.
    """
    point = np.asarray(point, dtype=np.float64)
    matrix = config.projection
    bound = matrix.low_bound
    if np.any(point < -bound) or np.any(point > bound):
        raise ValueError(f"point outside the low-dim domain [-{bound}, {bound}]")
    x = project(matrix, point)
    clipped = 0
    if matrix.kind == REMBO:
        clipped = int(np.count_nonzero((x < -1.0) | (x > 1.0)))
        x = clip_to_unit(x)
    unit = (x + 1.0) / 2.0
    values: dict[str, float | int | str] = {}
    specials: dict[str, int] = {}
    for i, knob in enumerate(space.knobs):
        u = float(unit[i])
        if knob.special_values:
            routed = apply_bias(u, knob, config.bias_p)
            if routed.is_special:
                raw = knob.special_values[routed.special_index]
                values[knob.name] = int(raw) if knob.kind == INTEGER else raw
                specials[knob.name] = routed.special_index
            else:
                values[knob.name] = unit_to_value(
                    routed.u, knob, effective_numeric_range(knob)
                )
        else:
            values[knob.name] = unit_to_value(u, knob)
    return KnobAssignment(values, specials, clipped)


def validate_assignment(space: ConfigSpace, assignment: KnobAssignment) -> None:
    """Check every value against its knob's domain; raises SpaceError."""
    if set(assignment.values) != {k.name for k in space.knobs}:
        raise SpaceError("assignment does not cover exactly the space's knobs")
    for knob in space.knobs:
        value = assignment.values[knob.name]
        if knob.kind == CATEGORICAL:
            if value not in knob.choices:
                raise SpaceError(f"knob {knob.name!r}: {value!r} not a valid choice")
            continue
        if knob.kind == INTEGER and not isinstance(value, int):
            raise SpaceError(f"knob {knob.name!r}: {value!r} is not an integer")
        if not (knob.min <= value <= knob.max):
            raise SpaceError(
                f"knob {knob.name!r}: {value!r} outside [{knob.min}, {knob.max}]"
            )
        if knob.name in assignment.special_knobs:
            idx = assignment.special_knobs[knob.name]
            if value != knob.special_values[idx]:
                raise SpaceError(
                    f"knob {knob.name!r}: flagged special({idx}) but value is {value!r}"
                )
