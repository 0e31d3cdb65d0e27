"""NumPy implementations of the numeric hot paths.

Semantically identical to the compiled versions in ``_ckern``; kept as the
fallback backend and as the reference the extension is tested against.
"""

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import ndtr

_SQRT5 = np.sqrt(5.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def matern52_cross(x1, x2, lengthscale):
    """Matern 5/2 correlation matrix between two point sets.

    Returns the (n, m) matrix k(r) = (1 + t + t^2/3) exp(-t) with
    t = sqrt(5) * r / lengthscale, unit signal variance.
    """
    r = cdist(x1, x2) / lengthscale
    t = _SQRT5 * r
    return (1.0 + t + (5.0 / 3.0) * r * r) * np.exp(-t)


def expected_improvement(mu, var, best):
    """Expected improvement of each candidate over ``best``.

    Zero wherever the posterior variance is not strictly positive.
    """
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    ei = np.zeros_like(mu)
    ok = var > 0.0
    sd = np.sqrt(var[ok])
    gain = mu[ok] - best
    z = gain / sd
    ei[ok] = gain * ndtr(z) + sd * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return np.maximum(ei, 0.0)


def hesbo_expand(h, sigma, points):
    """Expand (n, d) low-dim points to (n, D) via a one-nonzero-per-row map.

    Row j of the output copies coordinate h[j] with sign sigma[j].
    """
    return points[:, h] * sigma
