"""Dirichlet distribution algebra.

A concentration vector is any strictly positive, finite float vector of
length K >= 2 (interpreted as pseudo-counts). A simplex point is a vector of
interior probabilities summing to one. Both are plain numpy arrays; every
operation validates its inputs and raises ValueError on violations.

Boundary simplex points (a component equal to 0 or 1) are rejected rather
than clamped; callers that need boundary-safe evaluation must pre-clamp and
renormalize themselves.
"""

from __future__ import annotations

import numpy as np

from .specfn import digamma, lgamma

_SUM_TOL = 1e-12


def check_concentration(alpha) -> np.ndarray:
    """Validate and return a concentration vector as a float64 array."""
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim != 1 or a.size < 2:
        raise ValueError(f"concentration must be a vector of length >= 2, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or not np.all(a > 0.0):
        raise ValueError("concentration components must be strictly positive and finite")
    return a


def check_simplex_point(z) -> np.ndarray:
    """Validate and return an interior simplex point as a float64 array."""
    p = np.asarray(z, dtype=np.float64)
    if p.ndim != 1 or p.size < 2:
        raise ValueError(f"simplex point must be a vector of length >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("simplex point components must lie strictly inside (0, 1)")
    if abs(p.sum() - 1.0) > _SUM_TOL:
        raise ValueError(f"simplex point must sum to 1 within {_SUM_TOL}, got {p.sum()!r}")
    return p


def log_density(alpha, z) -> float:
    """Log of the Dirichlet density at an interior simplex point.

    ln Gamma(a0) - sum_k ln Gamma(a_k) + sum_k (a_k - 1) ln z_k
    """
    a = check_concentration(alpha)
    p = check_simplex_point(z)
    if a.size != p.size:
        raise ValueError(f"dimension mismatch: {a.size} vs {p.size}")
    return float(lgamma(a.sum()) - lgamma(a).sum() + ((a - 1.0) * np.log(p)).sum())


def mean(alpha) -> np.ndarray:
    """Mean of the Dirichlet distribution, alpha / alpha0."""
    a = check_concentration(alpha)
    return a / a.sum()


def kl_dirichlet(q, p) -> float:
    """Closed-form KL divergence KL(Dir(q) || Dir(p)).

    ln Gamma(q0) - ln Gamma(p0) - sum_k [ln Gamma(q_k) - ln Gamma(p_k)]
      + sum_k (q_k - p_k) (psi(q_k) - psi(q0))
    """
    qa = check_concentration(q)
    pa = check_concentration(p)
    if qa.size != pa.size:
        raise ValueError(f"dimension mismatch: {qa.size} vs {pa.size}")
    q0 = qa.sum()
    p0 = pa.sum()
    val = lgamma(q0) - lgamma(p0) - (lgamma(qa) - lgamma(pa)).sum()
    val += ((qa - pa) * (digamma(qa) - digamma(q0))).sum()
    return float(val)


def expected_log_prob(alpha, y: int) -> float:
    """E[ln z_y] under Dir(alpha): psi(alpha_y) - psi(alpha0)."""
    a = check_concentration(alpha)
    if not 0 <= y < a.size:
        raise IndexError(f"class index {y} out of range for K={a.size}")
    return float(digamma(a[y]) - digamma(a.sum()))


def expected_entropy(alpha) -> float:
    """E[H(z)] under Dir(alpha), the mean Shannon entropy of a draw.

    -sum_k (a_k / a0) (psi(a_k + 1) - psi(a0 + 1))
    """
    a = check_concentration(alpha)
    a0 = a.sum()
    return float(-((a / a0) * (digamma(a + 1.0) - digamma(a0 + 1.0))).sum())


def mutual_information(alpha) -> float:
    """Entropy of the mean minus expected entropy of a draw.

    Separates distributional uncertainty (spread of the Dirichlet) from the
    aleatoric uncertainty carried by the mean categorical itself.
    """
    a = check_concentration(alpha)
    m = a / a.sum()
    h_mean = float(-(m * np.log(m)).sum())
    return h_mean - expected_entropy(a)


def sample(alpha, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n points from Dir(alpha) as an (n, K) array.

    Per-component Gamma(alpha_k, 1) draws normalized by their sum. The draw
    stream is a pure function of the generator state, so a fixed seed and
    call order reproduce the same samples.
    """
    a = check_concentration(alpha)
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    g = rng.gamma(shape=a, scale=1.0, size=(n, a.size))
    return g / g.sum(axis=1, keepdims=True)
