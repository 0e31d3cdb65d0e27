"""Objective-function backends.

Synthetic surfaces evaluate in-process and emulate, at desk scale, the two
phenomena the tuner is built around: a low effective dimensionality (only a
handful of knobs move the objective) and a special-value discontinuity
(the best setting of a hybrid knob sits next to its worst regular values).
The external backend shells out to an arbitrary command for tuning real
systems.

All synthetic evaluators are pure functions of the assignment once
noise_sd is 0; noise comes from a dedicated generator handed in by the
session so noisy runs replay exactly.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pipeline import KnobAssignment
from .space import (
    CATEGORICAL,
    ConfigSpace,
    KnobSpec,
    effective_numeric_range,
    is_hybrid,
)

OK = "ok"
CRASH = "crash"


@dataclass(frozen=True)
class EvalOutcome:
    status: str                 # OK or CRASH
    value: float | None = None  # present iff status == OK
    wall_time: float = 0.0


class EvaluatorSpawnError(RuntimeError):
    """The external command could not be started at all.

    Distinct from a crash outcome, which is an ordinary observation.
    """


def _norm(knob: KnobSpec, value) -> float:
    """Map a knob value onto [0, 1] for the synthetic surfaces."""
    if knob.kind == CATEGORICAL:
        return knob.choices.index(value) / (len(knob.choices) - 1)
    return (float(value) - knob.min) / (knob.max - knob.min)


def _affine(value: float, scale: float, offset: float) -> float:
    return scale * value + offset


@dataclass
class EmbeddedQuadratic:
    """Concave quadratic over a small subset of the knobs.

    value = peak - sum_i weight * (norm(v_i) - target_i)^2 + noise over the
    effective knob indices; every other knob has zero weight. ``scale`` and
    ``offset`` apply an affine transform to the final value (handy for
    checking that tuning is invariant to the objective's units).
    """

    space: ConfigSpace
    effective_dims: tuple[int, ...]
    targets: np.ndarray
    weight: float = 10.0
    peak: float = 100.0
    noise_sd: float = 0.0
    scale: float = 1.0
    offset: float = 0.0
    rng: np.random.Generator | None = None

    def __post_init__(self):
        if len(self.targets) != len(self.effective_dims):
            raise ValueError("one target per effective dimension required")

    def evaluate(self, assignment: KnobAssignment) -> EvalOutcome:
        start = time.perf_counter()
        value = self.clean_value(assignment)
        if self.noise_sd > 0.0:
            value += float(self.rng.normal(0.0, self.noise_sd))
        value = _affine(value, self.scale, self.offset)
        return EvalOutcome(OK, value, time.perf_counter() - start)

    def clean_value(self, assignment: KnobAssignment) -> float:
        loss = 0.0
        for target, dim in zip(self.targets, self.effective_dims):
            knob = self.space.knobs[dim]
            gap = _norm(knob, assignment.values[knob.name]) - float(target)
            loss += self.weight * gap * gap
        return self.peak - loss

    def optimum_value(self) -> float:
        return _affine(self.peak, self.scale, self.offset)


def default_effective_dims(space: ConfigSpace, count: int) -> tuple[int, ...]:
    """Evenly spaced numeric, non-hybrid knob indices.

    Hybrid knobs are skipped so the surface has no special-value cliffs
    unless one is planted on purpose.
    """
    numeric = [
        i for i, k in enumerate(space.knobs)
        if k.kind != CATEGORICAL and not is_hybrid(k)
    ]
    if count > len(numeric):
        raise ValueError(
            f"space has only {len(numeric)} plain numeric knobs, need {count}"
        )
    picks = np.linspace(0, len(numeric) - 1, count).astype(int)
    return tuple(numeric[i] for i in picks)


def make_embedded_quadratic(
    space: ConfigSpace,
    n_effective: int = 8,
    noise_sd: float = 0.0,
    targets_seed: int = 0,
    targets=None,
    weight: float = 10.0,
    scale: float = 1.0,
    offset: float = 0.0,
    rng: np.random.Generator | None = None,
) -> EmbeddedQuadratic:
    """Quadratic with deterministic effective dims and targets.

    Explicit ``targets`` win; otherwise they are drawn once from
    ``targets_seed`` (not the session seed), so different sessions tune the
    identical surface.
    """
    dims = default_effective_dims(space, n_effective)
    if targets is None:
        targets = np.random.default_rng(targets_seed).uniform(0.2, 0.8, size=n_effective)
    else:
        targets = np.asarray(targets, dtype=np.float64)
    return EmbeddedQuadratic(
        space, dims, targets, weight=weight,
        noise_sd=noise_sd, scale=scale, offset=offset, rng=rng,
    )


@dataclass
class SpecialValueCliff:
    """Discontinuous surface around one hybrid knob.

    The special value scores base + bonus; regular values climb linearly
    from base up to base + regular_gain < base + bonus, so the special
    value's neighborhood is the worst regular region while the special
    value itself is the global optimum.
    """

    space: ConfigSpace
    knob_name: str
    base: float = 50.0
    bonus: float = 30.0
    regular_gain: float = 20.0
    noise_sd: float = 0.0
    rng: np.random.Generator | None = None

    def __post_init__(self):
        knob = self.space[self.knob_name]
        if not is_hybrid(knob):
            raise ValueError(f"knob {self.knob_name!r} has no special values")
        if not self.regular_gain < self.bonus:
            raise ValueError("bonus must exceed regular_gain for a strict optimum")

    def evaluate(self, assignment: KnobAssignment) -> EvalOutcome:
        start = time.perf_counter()
        knob = self.space[self.knob_name]
        value = assignment.values[self.knob_name]
        if value in knob.special_values:
            score = self.base + self.bonus
        else:
            lo, hi = effective_numeric_range(knob)
            score = self.base + self.regular_gain * (float(value) - lo) / (hi - lo)
        if self.noise_sd > 0.0:
            score += float(self.rng.normal(0.0, self.noise_sd))
        return EvalOutcome(OK, score, time.perf_counter() - start)

    def optimum_value(self) -> float:
        return self.base + self.bonus


@dataclass
class CrashyQuadratic:
    """Embedded quadratic with a crash box on one knob.

    Whenever the named knob's normalized value falls inside
    [crash_lo, crash_hi], the evaluation reports a crash instead of a value.
    Exercises the session's penalty path.
    """

    inner: EmbeddedQuadratic
    crash_knob: str
    crash_lo: float = 0.8
    crash_hi: float = 1.0

    def evaluate(self, assignment: KnobAssignment) -> EvalOutcome:
        start = time.perf_counter()
        knob = self.inner.space[self.crash_knob]
        frac = _norm(knob, assignment.values[self.crash_knob])
        if self.crash_lo <= frac <= self.crash_hi:
            return EvalOutcome(CRASH, None, time.perf_counter() - start)
        return self.inner.evaluate(assignment)


@dataclass
class ExternalCommand:
    """Shell out to ``<cmd> --config <path> --output <path>``.

    The assignment is written as flat JSON; the command must write one JSON
    object {"status": "ok"|"crash", "value": number?} to the output path.
    Nonzero exit, timeout, or missing/garbled output count as a crash;
    failing to start the command at all raises EvaluatorSpawnError.
    """

    command: list[str]
    timeout: float = 60.0

    def evaluate(self, assignment: KnobAssignment) -> EvalOutcome:
        start = time.perf_counter()
        with tempfile.TemporaryDirectory(prefix="knobtune-eval-") as tmp:
            config_path = Path(tmp) / "config.json"
            output_path = Path(tmp) / "result.json"
            config_path.write_text(json.dumps(assignment.to_json_dict()))
            argv = self.command + ["--config", str(config_path), "--output", str(output_path)]
            try:
                proc = subprocess.run(
                    argv, timeout=self.timeout,
                    stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
                )
            except subprocess.TimeoutExpired:
                return EvalOutcome(CRASH, None, time.perf_counter() - start)
            except OSError as e:
                raise EvaluatorSpawnError(f"cannot run {self.command!r}: {e}") from e
            elapsed = time.perf_counter() - start
            if proc.returncode != 0:
                return EvalOutcome(CRASH, None, elapsed)
            try:
                doc = json.loads(output_path.read_text())
                status = doc["status"]
                if status == OK:
                    return EvalOutcome(OK, float(doc["value"]), elapsed)
                if status == CRASH:
                    return EvalOutcome(CRASH, None, elapsed)
            except (OSError, ValueError, KeyError, TypeError):
                pass
            return EvalOutcome(CRASH, None, elapsed)


def _parse_params(text: str) -> dict[str, str]:
    params: dict[str, str] = {}
    for item in text.split(","):
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"evaluator parameter {item!r} is not key=value")
        params[key.strip()] = value.strip()
    return params


def make_evaluator(
    spec: str,
    space: ConfigSpace,
    noise_rng: np.random.Generator,
    timeout: float = 60.0,
):
    """Build an evaluator from its CLI grammar.

    ``synthetic:<kind>[:<k=v,...>]`` or ``exec:<command>``.
    """
    head, _, rest = spec.partition(":")
    if head == "exec":
        if not rest:
            raise ValueError("exec evaluator needs a command")
        return ExternalCommand(shlex.split(rest), timeout=timeout)
    if head != "synthetic":
        raise ValueError(f"unknown evaluator family {head!r}")
    kind, _, raw_params = rest.partition(":")
    params = _parse_params(raw_params)
    if kind == "embedded_quadratic":
        raw_targets = params.pop("targets", None)
        targets = (
            [float(v) for v in raw_targets.split("/")] if raw_targets else None
        )
        evaluator = make_embedded_quadratic(
            space,
            n_effective=int(params.pop("n_effective", 8)),
            noise_sd=float(params.pop("noise_sd", 0.0)),
            targets_seed=int(params.pop("targets_seed", 0)),
            targets=targets,
            weight=float(params.pop("weight", 10.0)),
            scale=float(params.pop("scale", 1.0)),
            offset=float(params.pop("offset", 0.0)),
            rng=noise_rng,
        )
    elif kind == "special_value_cliff":
        knob = params.pop("knob", None)
        if knob is None:
            hybrids = [k.name for k in space.knobs if is_hybrid(k)]
            if not hybrids:
                raise ValueError("space has no hybrid knob for the cliff surface")
            knob = hybrids[0]
        evaluator = SpecialValueCliff(
            space, knob, noise_sd=float(params.pop("noise_sd", 0.0)), rng=noise_rng
        )
    elif kind == "crashy_quadratic":
        crash_knob = params.pop("crash_knob", space.knobs[0].name)
        inner = make_embedded_quadratic(
            space,
            n_effective=int(params.pop("n_effective", 8)),
            noise_sd=float(params.pop("noise_sd", 0.0)),
            targets_seed=int(params.pop("targets_seed", 0)),
            rng=noise_rng,
        )
        evaluator = CrashyQuadratic(
            inner, crash_knob,
            crash_lo=float(params.pop("crash_lo", 0.8)),
            crash_hi=float(params.pop("crash_hi", 1.0)),
        )
    else:
        raise ValueError(f"unknown synthetic surface {kind!r}")
    if params:
        raise ValueError(f"unused evaluator parameters: {sorted(params)}")
    return evaluator
