"""Deterministic numeric primitives: seeded RNG streams, multivariate-normal
sampling via Cholesky, SPD linear solves, and column standardization.

Every stochastic routine in the package takes an explicit ``numpy.random.Generator``
so that a run is a pure function of its seed. Generators are always built from
PCG64, which produces the same stream on every platform.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class NotPositiveDefiniteError(ValueError):
    """A matrix required to be symmetric positive definite is not."""


def make_rng(seed: int) -> np.random.Generator:
    """Build a PCG64 generator from an integer seed."""
    return np.random.Generator(np.random.PCG64(seed))


_MIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + _MIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master_seed: int, *parts: int) -> int:
    """Mix a master seed with integer labels into a new 64-bit seed.

    The mixing is a fixed splitmix64 chain, so derived streams are stable
    across platforms and releases and distinct per label tuple.
    """
    state = _splitmix64(master_seed & _MASK64)
    for part in parts:
        state = _splitmix64(state ^ (part & _MASK64))
    return state


def cholesky_lower(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"Cholesky decomposition failed: {exc}"
        ) from exc


def mvn_sample(
    mean: np.ndarray, cov: np.ndarray, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``n`` i.i.d. samples from N(mean, cov) as an (n, p) matrix.

    Sampling is mean + z @ L.T with L the lower Cholesky factor, so a fixed
    seed yields a bit-identical sample on every platform.
    """
    mean = np.asarray(mean, dtype=float)
    lower = cholesky_lower(cov)
    p = lower.shape[0]
    if mean.shape != (p,):
        raise ValueError(f"mean has shape {mean.shape}, expected ({p},)")
    z = rng.standard_normal((n, p))
    return mean + z @ lower.T


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A.

    Uses a Cholesky solve plus one step of iterative refinement; the result
    satisfies ``||Ax - b||_inf <= 1e-8 * max(1, ||b||_inf)`` for reasonably
    conditioned systems.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.allclose(a, a.T, rtol=1e-8, atol=1e-10):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        factor = cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"SPD factorization failed (matrix singular or indefinite): {exc}"
        ) from exc
    pivots = np.diag(factor[0])
    if pivots.min() <= 0 or (pivots.max() / pivots.min()) ** 2 > 1e12:
        raise NotPositiveDefiniteError(
            "matrix is singular or too ill-conditioned for a reliable solve"
        )
    x = cho_solve(factor, b, check_finite=False)
    residual = b - a @ x
    x = x + cho_solve(factor, residual, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise NotPositiveDefiniteError("solve produced non-finite values")
    return x


def standardize_columns(
    x: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standardize each column to mean 0, sd 1 (population sd).

    Returns ``(z, means, sds)`` with ``z = (x - means) / sds``. Raises on
    any constant column, naming its index.
    """
    x = np.asarray(x, dtype=float)
    means = x.mean(axis=0)
    sds = x.std(axis=0)
    zero = np.flatnonzero(sds == 0.0)
    if zero.size:
        raise ValueError(f"column {zero[0]} is constant (sd = 0)")
    return (x - means) / sds, means, sds
