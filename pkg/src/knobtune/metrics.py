"""Convergence metrics over finished session histories.

Two headline numbers for an A/B comparison: how much better the treatment's
final configuration is (percent), and how many times earlier it matched the
baseline's final best (time-to-optimal speedup).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .history import History
from .session import MAXIMIZE

NOT_REACHED = "not reached"


def _check_pair(baseline: History, treatment: History) -> None:
    if not baseline.observations or not treatment.observations:
        raise ValueError("histories must contain at least one observation")
    if baseline.direction != treatment.direction:
        raise ValueError(
            f"direction mismatch: baseline {baseline.direction}, "
            f"treatment {treatment.direction}"
        )


def best_curve(history: History) -> np.ndarray:
    """Best-so-far per iteration, in the session's own units."""
    sign = 1.0 if history.direction == MAXIMIZE else -1.0
    return sign * np.asarray([o.best for o in history.observations])


def attained_iteration(history: History, target: float) -> int | None:
    """Earliest iteration whose best-so-far matches ``target``.

    ``target`` is on the maximize-oriented scale; None when never matched.
    """
    for obs in history.observations:
        if obs.best >= target:
            return obs.iteration
    return None


@dataclass(frozen=True)
class TimeToOptimal:
    iteration: int | None       # earliest treatment iteration matching baseline best
    baseline_iteration: int     # where the baseline first attained its final best
    speedup: float | None       # baseline_iteration / iteration

    @property
    def reached(self) -> bool:
        return self.iteration is not None


def time_to_optimal(baseline: History, treatment: History) -> TimeToOptimal:
    """Earliest treatment iteration beating the baseline's final best."""
    _check_pair(baseline, treatment)
    target = baseline.final_best
    i_base = attained_iteration(baseline, target)
    i_treat = attained_iteration(treatment, target)
    if i_treat is None:
        return TimeToOptimal(None, i_base, None)
    return TimeToOptimal(i_treat, i_base, i_base / i_treat)


def final_improvement(baseline: History, treatment: History) -> float:
    """Percent improvement of the treatment's final best over the baseline's.

    Maximize: 100 * (T - B) / B. Minimize: 100 * (B - T) / B, i.e. the
    relative reduction.
    """
    _check_pair(baseline, treatment)
    sign = 1.0 if baseline.direction == MAXIMIZE else -1.0
    best_b = sign * baseline.final_best
    best_t = sign * treatment.final_best
    if best_b == 0:
        raise ValueError("baseline best is 0; relative improvement undefined")
    if baseline.direction == MAXIMIZE:
        return 100.0 * (best_t - best_b) / best_b
    return 100.0 * (best_b - best_t) / best_b


@dataclass
class GroupComparison:
    pairs: int
    improvement_mean: float
    improvement_ci: tuple[float, float]
    speedups: list[float]
    speedup_mean: float | None
    speedup_ci: tuple[float, float] | None
    match_iterations: list[int]
    not_reached: int


def compare_groups(baselines: list[History], treatments: list[History]) -> GroupComparison:
    """Aggregate the two metrics across seed-matched history pairs.

    Histories pair by position when the groups have equal size; a single
    baseline is reused for every treatment. [5%, 95%] percentile intervals
    mirror the usual multi-seed reporting.
    """
    if not baselines or not treatments:
        raise ValueError("need at least one baseline and one treatment history")
    if len(baselines) == 1:
        pairs = [(baselines[0], t) for t in treatments]
    elif len(baselines) == len(treatments):
        pairs = list(zip(baselines, treatments))
    else:
        raise ValueError(
            f"cannot pair {len(baselines)} baselines with {len(treatments)} "
            "treatments; use equal counts or a single baseline"
        )
    improvements = [final_improvement(b, t) for b, t in pairs]
    ttos = [time_to_optimal(b, t) for b, t in pairs]
    speedups = [t.speedup for t in ttos if t.reached]
    iterations = [t.iteration for t in ttos if t.reached]
    ci = (
        float(np.percentile(improvements, 5)),
        float(np.percentile(improvements, 95)),
    )
    speedup_ci = None
    speedup_mean = None
    if speedups:
        speedup_mean = float(np.mean(speedups))
        speedup_ci = (
            float(np.percentile(speedups, 5)),
            float(np.percentile(speedups, 95)),
        )
    return GroupComparison(
        pairs=len(pairs),
        improvement_mean=float(np.mean(improvements)),
        improvement_ci=ci,
        speedups=speedups,
        speedup_mean=speedup_mean,
        speedup_ci=speedup_ci,
        match_iterations=iterations,
        not_reached=sum(1 for t in ttos if not t.reached),
    )
