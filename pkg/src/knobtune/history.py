"""Append-only session log.

On disk a history is newline-delimited JSON: a header line carrying the
session config, the projection serialization and the default
configuration's measured value, then one line per observation. The file is
flushed after every iteration so an interrupted session stays analyzable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .projection import ProjectionMatrix, projection_from_json


@dataclass
class Observation:
    iteration: int
    point: list[float]
    values: dict
    status: str
    raw_value: float | None
    effective_value: float
    best: float
    init_phase: bool
    penalized: bool
    specials: list[str]
    clipped: int
    wall_ms: float

    def to_json_dict(self) -> dict:
        return {
            "iter": self.iteration,
            "point": self.point,
            "config": self.values,
            "status": self.status,
            "raw_value": self.raw_value,
            "effective_value": self.effective_value,
            "best": self.best,
            "flags": {
                "init": self.init_phase,
                "penalized": self.penalized,
                "specials": self.specials,
                "clipped": self.clipped,
            },
            "wall_ms": self.wall_ms,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Observation":
        flags = doc["flags"]
        return cls(
            iteration=doc["iter"],
            point=doc["point"],
            values=doc["config"],
            status=doc["status"],
            raw_value=doc["raw_value"],
            effective_value=doc["effective_value"],
            best=doc["best"],
            init_phase=flags["init"],
            penalized=flags["penalized"],
            specials=flags["specials"],
            clipped=flags["clipped"],
            wall_ms=doc["wall_ms"],
        )


@dataclass
class History:
    """A session's config snapshot, projection, and ordered observations."""

    config: dict
    projection: dict
    default_value: float | None = None
    observations: list[Observation] = field(default_factory=list)
    stop_reason: str | None = None

    @property
    def direction(self) -> str:
        return self.config.get("direction", "maximize")

    @property
    def final_best(self) -> float | None:
        """Best effective value (maximize-oriented)."""
        if not self.observations:
            return None
        return self.observations[-1].best

    def projection_matrix(self) -> ProjectionMatrix:
        return projection_from_json(self.projection)

    def header_dict(self) -> dict:
        return {
            "config": self.config,
            "projection": self.projection,
            "default_value": self.default_value,
        }


class HistoryWriter:
    """Incremental NDJSON writer, one flush per observation."""

    def __init__(self, path, header: dict):
        self._fh = open(path, "w", encoding="utf-8")
        self._fh.write(json.dumps(header) + "\n")
        self._fh.flush()

    def append(self, obs: Observation) -> None:
        self._fh.write(json.dumps(obs.to_json_dict()) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


def read_history(path) -> History:
    """Parse an NDJSON history file."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty history file")
    try:
        header = json.loads(lines[0])
        observations = [Observation.from_json_dict(json.loads(line)) for line in lines[1:]]
    except (json.JSONDecodeError, KeyError) as e:
        raise ValueError(f"{path}: malformed history: {e}") from None
    return History(
        config=header["config"],
        projection=header["projection"],
        default_value=header.get("default_value"),
        observations=observations,
    )
