"""Seeded random draws for every distribution family the sampler needs.

All draws go through a counter-based Philox generator keyed by (seed,
stream): the same key and call sequence reproduces identical values
bit-for-bit on a platform, and distinct streams are statistically
independent, so parallel chains and replicates simply derive their own
stream ids.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .core import ValidationError, check_spd

__all__ = [
    "Rng",
    "normal_draw",
    "mvn_draw",
    "inv_gamma_draw",
    "inv_wishart_draw",
    "dirichlet_draw",
    "beta_draw",
    "bernoulli_draw",
    "categorical_draw",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x):
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


class Rng:
    """Counter-based generator with deterministic stream derivation.

    Parameters
    ----------
    seed : int
        64-bit master seed shared by a whole experiment.
    stream : int
        64-bit stream id; derive a fresh one per chain / replicate with
        :meth:`derive` rather than reusing the parent.
    """

    def __init__(self, seed, stream=0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def derive(self, *indices):
        """Independent child stream identified by a path of integers."""
        stream = self.stream
        for idx in indices:
            stream = _splitmix64(stream ^ _splitmix64(int(idx) & _MASK64))
        return Rng(self.seed, stream)

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream={self.stream})"


def normal_draw(mean, sd, rng):
    return float(mean) + float(sd) * float(rng.gen.standard_normal())


def mvn_draw(mean, cov_chol, rng):
    """Multivariate normal draw from a lower-triangular covariance factor."""
    mean = np.asarray(mean, dtype=np.float64)
    cov_chol = np.asarray(cov_chol, dtype=np.float64)
    if cov_chol.ndim != 2 or cov_chol.shape[0] != cov_chol.shape[1]:
        raise ValidationError("cov_chol must be square")
    if cov_chol.shape[0] != mean.shape[0]:
        raise ValidationError("mean and cov_chol dimensions differ")
    if np.any(np.triu(cov_chol, k=1) != 0.0):
        raise ValidationError("cov_chol must be lower-triangular")
    if np.any(np.diag(cov_chol) <= 0.0):
        raise ValidationError("cov_chol must have a positive diagonal")
    return mean + cov_chol @ rng.gen.standard_normal(mean.shape[0])


def inv_gamma_draw(shape, rate, rng):
    """Inverse-gamma draw with density proportional to x^(-shape-1) exp(-rate/x)."""
    if not shape > 0 or not rate > 0:
        raise ValidationError("inverse-gamma shape and rate must be positive")
    return float(rate / rng.gen.standard_gamma(shape))


def inv_wishart_draw(df, scale, rng):
    """Inverse-Wishart draw via the Bartlett factor of the inverse-scale Wishart."""
    scale = np.asarray(scale, dtype=np.float64)
    d = scale.shape[0]
    if not df > d - 1:
        raise ValidationError(f"inverse-Wishart df must exceed dim-1 = {d - 1}")
    scale_chol = check_spd(scale, "scale")
    bartlett = np.zeros((d, d))
    lower = np.tril_indices(d, k=-1)
    if lower[0].size:
        bartlett[lower] = rng.gen.standard_normal(lower[0].size)
    bartlett[np.diag_indices(d)] = np.sqrt(rng.gen.chisquare(df - np.arange(d)))
    # draw = (C A^-T)(C A^-T)^T with C = chol(scale): the inverse of a
    # Wishart(df, scale^-1) variate without forming scale^-1 explicitly.
    half = scale_chol @ solve_triangular(bartlett, np.eye(d), lower=True).T
    draw = half @ half.T
    return (draw + draw.T) / 2.0


def dirichlet_draw(alpha, rng):
    """Dirichlet draw; the returned vector sums to 1 exactly."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or alpha.size < 2 or np.any(alpha <= 0):
        raise ValidationError("Dirichlet concentrations must be positive")
    gammas = rng.gen.standard_gamma(alpha)
    total = gammas.sum()
    if total == 0.0:  # possible underflow for very small concentrations
        out = np.zeros_like(alpha)
        out[int(np.argmax(alpha))] = 1.0
        return out
    out = gammas / total
    out[-1] = max(0.0, 1.0 - out[:-1].sum())
    return out


def beta_draw(a, b, rng):
    if not a > 0 or not b > 0:
        raise ValidationError("Beta parameters must be positive")
    return float(rng.gen.beta(a, b))


def bernoulli_draw(p, rng):
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"Bernoulli probability {p} outside [0, 1]")
    return int(rng.gen.random() < p)


def categorical_draw(log_weights, rng):
    """Sample an index from unnormalized log weights, normalized in log space."""
    log_weights = np.asarray(log_weights, dtype=np.float64)
    if log_weights.ndim != 1 or log_weights.size == 0:
        raise ValidationError("log_weights must be a non-empty vector")
    if np.any(np.isnan(log_weights)) or np.any(log_weights == np.inf):
        raise ValidationError("log_weights must be finite or -inf")
    top = np.max(log_weights)
    if top == -np.inf:
        raise ValidationError("all categorical log weights are -inf")
    weights = np.exp(log_weights - top)
    cumulative = np.cumsum(weights)
    u = rng.gen.random() * cumulative[-1]
    return int(np.searchsorted(cumulative, u, side="right").clip(0, weights.size - 1))


def log_normalize(log_weights):
    """Probabilities from unnormalized log weights via max subtraction."""
    log_weights = np.asarray(log_weights, dtype=np.float64)
    top = np.max(log_weights)
    if top == -np.inf:
        raise ValidationError("all categorical log weights are -inf")
    weights = np.exp(log_weights - top)
    return weights / weights.sum()
