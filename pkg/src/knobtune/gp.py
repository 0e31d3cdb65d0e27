"""Gaussian-process surrogate with a Matern 5/2 kernel.

Hyperparameters (one shared length-scale, signal variance) are picked by
maximizing the log marginal likelihood over a fixed log-spaced grid; no
gradient optimization, which keeps fitting deterministic and cheap at the
observation counts a tuning session produces (<= a few hundred).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .kernels import matern52_cross

LENGTHSCALE_GRID = np.logspace(-2.0, 1.0, 13)
SIGNAL_VARIANCE_GRID = np.logspace(-1.0, 1.0, 9)
BASE_JITTER = 1e-6
MAX_JITTER = 1e-2

_LOG_2PI = math.log(2.0 * math.pi)


class GPFitError(RuntimeError):
    """Covariance stayed singular after escalating jitter to the limit."""


@dataclass(frozen=True)
class GPParams:
    lengthscale: float
    signal_variance: float
    jitter: float
    log_marginal_likelihood: float


class MaternGP:
    """Exact GP regression on standardized targets."""

    def __init__(self):
        self.params: GPParams | None = None
        self._train_x: np.ndarray | None = None
        self._chol: np.ndarray | None = None
        self._alpha: np.ndarray | None = None

    def fit(self, x: np.ndarray, z: np.ndarray) -> "MaternGP":
        """Grid-search the kernel hyperparameters by marginal likelihood.

        ``z`` is expected to be standardized (zero mean, unit variance).
        Starts at BASE_JITTER on the diagonal and escalates by decades up to
        MAX_JITTER for combinations whose Cholesky fails; raises GPFitError
        if nothing factorizes.
        """
        x = np.ascontiguousarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        n = x.shape[0]
        if n < 2:
            raise GPFitError(f"need at least 2 observations to fit, got {n}")
        if not (np.isfinite(x).all() and np.isfinite(z).all()):
            raise GPFitError("observations contain non-finite values")
        best = None
        for lengthscale in LENGTHSCALE_GRID:
            corr = matern52_cross(x, x, lengthscale)
            for signal_variance in SIGNAL_VARIANCE_GRID:
                cov = signal_variance * corr
                fac = self._factorize(cov)
                if fac is None:
                    continue
                chol, jitter = fac
                alpha = cho_solve((chol, True), z, check_finite=False)
                lml = (
                    -0.5 * float(z @ alpha)
                    - float(np.sum(np.log(np.diag(chol))))
                    - 0.5 * n * _LOG_2PI
                )
                if best is None or lml > best[0]:
                    best = (lml, lengthscale, signal_variance, jitter, chol, alpha)
        if best is None:
            raise GPFitError(
                f"covariance singular for all hyperparameters on {n} points "
                f"even at jitter {MAX_JITTER}; observations may be degenerate"
            )
        lml, lengthscale, signal_variance, jitter, chol, alpha = best
        self.params = GPParams(lengthscale, signal_variance, jitter, lml)
        self._train_x = x
        self._chol = chol
        self._alpha = alpha
        return self

    @staticmethod
    def _factorize(cov: np.ndarray):
        n = cov.shape[0]
        jitter = BASE_JITTER
        while jitter <= MAX_JITTER * (1 + 1e-12):
            try:
                chol = cholesky(
                    cov + jitter * np.eye(n), lower=True, check_finite=False
                )
                return chol, jitter
            except np.linalg.LinAlgError:
                jitter *= 10.0
            except ValueError:
                # scipy raises ValueError for non-finite input
                return None
        return None

    def predict(self, candidates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at each candidate point.

        Variance is clipped at zero to absorb round-off.
        """
        if self.params is None:
            raise RuntimeError("predict() before fit()")
        candidates = np.ascontiguousarray(candidates, dtype=np.float64)
        cross = self.params.signal_variance * matern52_cross(
            self._train_x, candidates, self.params.lengthscale
        )
        mean = cross.T @ self._alpha
        v = solve_triangular(self._chol, cross, lower=True, check_finite=False)
        var = self.params.signal_variance - np.sum(v * v, axis=0)
        return mean, np.maximum(var, 0.0)
