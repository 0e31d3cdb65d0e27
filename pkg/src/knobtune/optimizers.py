"""Suggest/observe optimizers over the (bucketized) low-dimensional space.

Every optimizer implements the same contract:

    opt = SomeOptimizer(d, lo, hi, grid, n_init, seed)
    point = opt.suggest()          # in-domain, on-grid
    opt.observe(point, value)      # values are maximize-oriented

The first ``n_init`` suggestions replay a Latin hypercube design; after
that each optimizer proposes from its own strategy. Suggestions are a pure
function of (seed, number of observations): each call draws from a fresh
generator spawned from the seed and the observation count, so identical
histories always yield identical traces and a repeated ``suggest()``
without an intervening ``observe()`` returns the same point.
"""

from __future__ import annotations

import numpy as np

from .gp import MaternGP
from .kernels import expected_improvement
from .pipeline import Grid

# BO-phase suggestion cadence and candidate-set sizes
RANDOM_SUGGEST_PERIOD = 10
N_UNIFORM_CANDIDATES = 2000
N_LOCAL_CANDIDATES = 500
LOCAL_STEP_FRACTION = 0.1


def lhs_sample(
    n: int,
    d: int,
    lo: float,
    hi: float,
    rng: np.random.Generator,
    grid: Grid | None = None,
) -> np.ndarray:
    """Latin hypercube design: one sample per stratum per coordinate.

    For each coordinate (in index order) a permutation of the n strata is
    drawn, then a uniform offset inside each stratum. Snapped to the grid
    afterwards when one is given.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    width = (hi - lo) / n
    out = np.empty((n, d))
    for j in range(d):
        strata = rng.permutation(n)
        offsets = rng.random(n)
        out[:, j] = lo + (strata + offsets) * width
    if grid is not None:
        out = grid.snap(out)
    return out


class Optimizer:
    """Shared plumbing: LHS init phase, history, incumbent, per-call RNG."""

    def __init__(
        self,
        d: int,
        lo: float,
        hi: float,
        grid: Grid | None,
        n_init: int,
        seed: int,
    ):
        self.d = d
        self.lo = float(lo)
        self.hi = float(hi)
        self.grid = grid
        self.n_init = n_init
        self._seed = seed
        design_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
        self._design = lhs_sample(n_init, d, lo, hi, design_rng, grid)
        self.points: list[np.ndarray] = []
        self.values: list[float] = []
        self._best_index: int | None = None

    @property
    def iteration(self) -> int:
        return len(self.points)

    @property
    def incumbent(self) -> tuple[np.ndarray, float] | None:
        if self._best_index is None:
            return None
        return self.points[self._best_index], self.values[self._best_index]

    def observe(self, point: np.ndarray, value: float) -> None:
        self.points.append(np.asarray(point, dtype=np.float64))
        self.values.append(float(value))
        if self._best_index is None or value > self.values[self._best_index]:
            self._best_index = len(self.values) - 1

    def _call_rng(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self._seed, spawn_key=(1, len(self.points)))
        )

    def _uniform(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        """Uniform sample over the domain: discrete-uniform over the grid
        values when bucketized, continuous otherwise."""
        if self.grid is not None:
            idx = rng.integers(0, self.grid.count, size=(n, self.d))
            return self.grid.values[idx]
        return rng.uniform(self.lo, self.hi, size=(n, self.d))

    def suggest(self) -> np.ndarray:
        t = len(self.points)
        if t < self.n_init:
            return self._design[t].copy()
        return self._propose(self._call_rng())

    def _propose(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class RandomOptimizer(Optimizer):
    """Uniform sampling baseline over the (bucketized) domain."""

    def _propose(self, rng: np.random.Generator) -> np.ndarray:
        return self._uniform(rng)[0]


class GPOptimizer(Optimizer):
    """Reference Bayesian optimizer: Matern GP plus expected improvement.

    Candidates are 2000 uniform samples plus 500 grid-snapped Gaussian
    perturbations of the incumbent (scale 0.1 x domain span); ties in EI
    break toward the lowest candidate index. Every RANDOM_SUGGEST_PERIOD-th
    proposal is a pure uniform sample, a cheap periodic restart.
    """

    def _propose(self, rng: np.random.Generator) -> np.ndarray:
        nth = len(self.points) - self.n_init + 1
        if nth % RANDOM_SUGGEST_PERIOD == 0 or len(self.points) < 2:
            return self._uniform(rng)[0]
        x = np.asarray(self.points)
        y = np.asarray(self.values)
        # standardization makes the suggestion sequence invariant to affine
        # transforms of the objective
        scale = y.std()
        if scale == 0.0:
            scale = 1.0
        z = (y - y.mean()) / scale
        gp = MaternGP().fit(x, z)
        candidates = self._candidates(rng)
        mean, var = gp.predict(candidates)
        ei = expected_improvement(mean, var, float(z.max()))
        if ei.max() <= 0.0:
            # collapsed posterior: nothing promises improvement, explore
            return self._uniform(rng)[0]
        return candidates[int(np.argmax(ei))].copy()

    def _candidates(self, rng: np.random.Generator) -> np.ndarray:
        uniform = self._uniform(rng, N_UNIFORM_CANDIDATES)
        center = self.points[self._best_index]
        local = center + rng.normal(
            0.0, LOCAL_STEP_FRACTION * (self.hi - self.lo),
            size=(N_LOCAL_CANDIDATES, self.d),
        )
        local = np.clip(local, self.lo, self.hi)
        if self.grid is not None:
            local = self.grid.snap(local)
        return np.vstack([uniform, local])


OPTIMIZERS = {"gp": GPOptimizer, "random": RandomOptimizer}


def make_optimizer(kind: str, d, lo, hi, grid, n_init, seed) -> Optimizer:
    try:
        cls = OPTIMIZERS[kind]
    except KeyError:
        raise ValueError(f"unknown optimizer {kind!r}, expected one of {sorted(OPTIMIZERS)}")
    return cls(d, lo, hi, grid, n_init, seed)
