"""Empirical target construction for classification.

Label counting groups dataset rows by exact byte equality of their feature
vectors; near-duplicate grouping is deliberately out of scope. The counting
estimator can be smoothed either by label smoothing or, in the Bayesian view,
by adding a Dirichlet prior's pseudo-counts to the observed counts.
"""

from __future__ import annotations

import numpy as np

from .data import LabeledDataset
from .simplex import check_concentration


def input_key(x: np.ndarray) -> bytes:
    """Grouping key for a feature vector: its exact float64 bytes."""
    return np.ascontiguousarray(x, dtype=np.float64).tobytes()


def count_labels(dataset: LabeledDataset) -> dict[bytes, np.ndarray]:
    """Per-unique-input label frequency counts.

    Returns a map from input_key to a length-K integer count vector. The
    counts over all entries sum to len(dataset).
    """
    counts: dict[bytes, np.ndarray] = {}
    for row, label in zip(dataset.inputs, dataset.labels):
        key = input_key(row)
        if key not in counts:
            counts[key] = np.zeros(dataset.n_classes, dtype=np.int64)
        counts[key][label] += 1
    return counts


def posterior_target(prior, counts) -> np.ndarray:
    """Concentration of the count-updated Dirichlet: prior + counts.

    The prior acts as pseudo-counts: the resulting mean interpolates between
    the empirical label frequency (small prior mass) and the prior mean
    (large prior mass).
    """
    beta = check_concentration(prior)
    c = np.asarray(counts, dtype=np.float64)
    if c.shape != beta.shape:
        raise ValueError(f"dimension mismatch: {beta.shape} vs {c.shape}")
    if np.any(c < 0):
        raise ValueError("counts must be non-negative")
    return beta + c


def smoothed_label(y: int, lam: float, n_classes: int) -> np.ndarray:
    """Label-smoothed target (1 - lam) * onehot(y) + lam / K."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"smoothing coefficient must lie in [0, 1], got {lam}")
    if not 0 <= y < n_classes:
        raise IndexError(f"class index {y} out of range for K={n_classes}")
    out = np.full(n_classes, lam / n_classes)
    out[y] += 1.0 - lam
    return out


def _entropy(p: np.ndarray) -> float:
    """Shannon entropy with the 0 * ln 0 = 0 convention."""
    nz = p > 0.0
    return float(-(p[nz] * np.log(p[nz])).sum())


def empirical_risk_decomposition(dataset: LabeledDataset, model_probs: dict[bytes, np.ndarray]):
    """Mean cross-entropy risk, computed directly and as distribution matching.

    The direct form is -(1/N) sum_i ln q_{y_i}(x_i). The decomposed form
    groups duplicates: sum over unique inputs of (n_x / N) [KL(phat_x || q_x)
    + H(phat_x)] with phat_x the normalized count vector. Both are returned;
    they agree to rounding error.
    """
    counts = count_labels(dataset)
    for key in counts:
        if key not in model_probs:
            raise KeyError("model probability missing for a dataset input")

    n = len(dataset)
    direct = 0.0
    for row, label in zip(dataset.inputs, dataset.labels):
        q = np.asarray(model_probs[input_key(row)], dtype=np.float64)
        direct -= np.log(q[label])
    direct /= n

    decomposed = 0.0
    for key, c in counts.items():
        n_x = c.sum()
        phat = c / n_x
        q = np.asarray(model_probs[key], dtype=np.float64)
        nz = phat > 0.0
        kl = float((phat[nz] * (np.log(phat[nz]) - np.log(q[nz]))).sum())
        decomposed += (n_x / n) * (kl + _entropy(phat))
    return direct, decomposed
