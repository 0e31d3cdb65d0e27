"""End-to-end tuning session orchestration.

A session fixes the projection once, evaluates the space's default
configuration to seed the crash-penalty baseline (iteration 0, never shown
to the optimizer), walks the optimizer through an LHS init phase and the
suggest/evaluate/observe loop, and logs every observation. Crashing
evaluations receive a quarter of the worst value seen so far instead of a
real measurement; an optional early-stopping policy ends the session when
the best value stops improving.

Internally all values are maximize-oriented: a minimize session negates
measurements on the way in and reports are converted back on the way out.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .evaluators import CRASH, OK, EvaluatorSpawnError, make_evaluator
from .history import History, HistoryWriter, Observation
from .optimizers import make_optimizer
from .pipeline import (
    DEFAULT_BIAS,
    DEFAULT_BUCKETS,
    KnobAssignment,
    PipelineConfig,
    assemble_config,
    validate_pipeline,
)
from .projection import IDENTITY, make_projection
from .space import ConfigSpace, parse_space

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

DEFAULT_DIMS = 16
DEFAULT_INIT = 10
DEFAULT_ITERS = 100

STOP_COMPLETED = "completed"
STOP_EARLY = "early-stop"
STOP_EVALUATOR_ERROR = "evaluator-error"


class SessionError(RuntimeError):
    """Session cannot proceed (bad config, unusable default, ...)."""


@dataclass
class SessionConfig:
    """All tuning hyperparameters for one session."""

    space_path: str
    evaluator: str
    projection: str = "hesbo"          # hesbo | rembo | none
    dims: int = DEFAULT_DIMS
    bias_p: float = DEFAULT_BIAS
    buckets: int | None = DEFAULT_BUCKETS
    n_init: int = DEFAULT_INIT
    n_iters: int = DEFAULT_ITERS
    seed: int = 0
    direction: str = MAXIMIZE
    optimizer: str = "gp"
    early_stop: tuple[float, int] | None = None   # (min improvement %, patience)
    timeout: float = 60.0

    def validate(self) -> None:
        if self.direction not in (MAXIMIZE, MINIMIZE):
            raise SessionError(f"direction must be maximize or minimize, got {self.direction!r}")
        if self.projection not in ("hesbo", "rembo", "none"):
            raise SessionError(f"unknown projection {self.projection!r}")
        if self.n_init < 1:
            raise SessionError("n_init must be >= 1")
        if self.n_init > self.n_iters:
            raise SessionError(
                f"n_init ({self.n_init}) cannot exceed n_iters ({self.n_iters})"
            )
        if self.early_stop is not None:
            x, k = self.early_stop
            if x <= 0 or k < 1:
                raise SessionError("early stop policy needs x > 0 and patience >= 1")

    def to_json_dict(self) -> dict:
        doc = asdict(self)
        if self.early_stop is not None:
            doc["early_stop"] = list(self.early_stop)
        return doc


def crash_penalty(worst_effective: float, direction: str) -> float:
    """Substitute value for a crashed evaluation.

    A quarter of the worst throughput seen so far when maximizing; four
    times the worst latency when minimizing (expressed on the negated
    internal scale, that is again 4x the minimum effective value).
    """
    if direction == MAXIMIZE:
        return worst_effective / 4.0
    return 4.0 * worst_effective


def should_stop(best_series, x: float, k: int, n_init: int, direction: str) -> bool:
    """Early-stopping policy (x percent, patience k).

    ``best_series`` holds the best value per iteration, 1-indexed via
    position 0 = iteration 1, in the session's own units. True once the
    latest best improves on the best from k iterations ago by less than x
    percent; the init phase never counts toward the window.
    """
    t = len(best_series)
    if t < n_init + k:
        return False
    now = best_series[-1]
    ago = best_series[t - k - 1]
    if direction == MAXIMIZE:
        return now < ago * (1.0 + x / 100.0)
    return now > ago * (1.0 - x / 100.0)


def _sub_seeds(seed: int) -> tuple[int, int, int]:
    """Deterministic child seeds: projection, optimizer, evaluator noise."""
    state = np.random.SeedSequence(seed).generate_state(3)
    return int(state[0]), int(state[1]), int(state[2])


def run_session(
    config: SessionConfig,
    evaluator=None,
    space: ConfigSpace | None = None,
    output_path=None,
) -> History:
    """Run one full tuning session and return its History.

    ``evaluator`` and ``space`` default to what the config describes; tests
    and library callers may inject their own. When ``output_path`` is given
    the history is flushed there iteration by iteration, and a partial file
    survives an evaluator spawn failure.
    """
    config.validate()
    if space is None:
        space = parse_space(config.space_path)
    proj_seed, opt_seed, noise_seed = _sub_seeds(config.seed)
    if config.projection == "none":
        matrix = make_projection(IDENTITY, space.dimension, space.dimension, proj_seed)
    else:
        matrix = make_projection(config.projection, space.dimension, config.dims, proj_seed)
    pipeline = PipelineConfig(matrix, config.bias_p, config.buckets)
    validate_pipeline(space, pipeline)
    if evaluator is None:
        evaluator = make_evaluator(
            config.evaluator, space, np.random.default_rng(noise_seed), config.timeout
        )
    sign = 1.0 if config.direction == MAXIMIZE else -1.0

    # iteration 0: the default configuration seeds the penalty baseline but
    # is never fed to the optimizer
    default_assignment = KnobAssignment(space.defaults())
    default_outcome = evaluator.evaluate(default_assignment)
    if default_outcome.status != OK:
        raise SessionError(
            "default configuration crashed; no baseline for the crash penalty"
        )
    default_value = float(default_outcome.value)
    worst = sign * default_value

    history = History(
        config=config.to_json_dict(),
        projection=matrix.to_json_dict(),
        default_value=default_value,
    )
    writer = HistoryWriter(output_path, history.header_dict()) if output_path else None

    bound = matrix.low_bound
    grid = pipeline.grid()
    optimizer = make_optimizer(
        config.optimizer, matrix.low_dim, -bound, bound, grid, config.n_init, opt_seed
    )

    best = -np.inf
    best_series: list[float] = []
    history.stop_reason = STOP_COMPLETED
    try:
        for iteration in range(1, config.n_iters + 1):
            started = time.perf_counter()
            point = optimizer.suggest()
            assignment = assemble_config(space, pipeline, point)
            outcome = evaluator.evaluate(assignment)
            if outcome.status == CRASH:
                effective = crash_penalty(worst, config.direction)
                raw = None
                penalized = True
            else:
                effective = float(sign * outcome.value)
                raw = float(outcome.value)
                penalized = False
            worst = min(worst, effective)
            best = max(best, effective)
            best_series.append(sign * best)
            optimizer.observe(point, effective)
            obs = Observation(
                iteration=iteration,
                point=[float(v) for v in point],
                values=dict(assignment.values),
                status=outcome.status,
                raw_value=raw,
                effective_value=effective,
                best=best,
                init_phase=iteration <= config.n_init,
                penalized=penalized,
                specials=sorted(assignment.special_knobs),
                clipped=assignment.clipped,
                wall_ms=(time.perf_counter() - started) * 1000.0,
            )
            history.observations.append(obs)
            if writer:
                writer.append(obs)
            if config.early_stop is not None and iteration > config.n_init:
                x, k = config.early_stop
                if should_stop(best_series, x, k, config.n_init, config.direction):
                    history.stop_reason = STOP_EARLY
                    break
    except EvaluatorSpawnError:
        history.stop_reason = STOP_EVALUATOR_ERROR
        raise
    finally:
        if writer:
            writer.close()
    return history
