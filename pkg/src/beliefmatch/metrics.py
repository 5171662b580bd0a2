"""Calibration and predictive-uncertainty metrics.

Expected calibration error bins predictions by confidence into M left-open
right-closed intervals (i/M, (i+1)/M] (a confidence of exactly 0 lands in
bin 0) and averages |accuracy - confidence| weighted by bin occupancy.
Empty bins contribute nothing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

DEFAULT_ECE_BINS = 15


@dataclass(frozen=True)
class CalibrationReport:
    """Per-bin calibration summary plus the scalar ECE."""

    m_bins: int
    counts: np.ndarray
    avg_confidence: np.ndarray
    avg_accuracy: np.ndarray
    ece: float

    @property
    def bins(self) -> list[tuple[int, float, float]]:
        """(count, avg_confidence, avg_accuracy) triples, one per bin."""
        return [
            (int(c), float(cf), float(ac))
            for c, cf, ac in zip(self.counts, self.avg_confidence, self.avg_accuracy)
        ]


def ece(confidences, correct, m_bins: int = DEFAULT_ECE_BINS) -> CalibrationReport:
    """Expected calibration error over confidence/correctness pairs."""
    conf = np.asarray(confidences, dtype=np.float64)
    hit = np.asarray(correct, dtype=np.float64)
    if conf.shape != hit.shape or conf.ndim != 1:
        raise ValueError("confidences and correct must be equal-length vectors")
    if m_bins < 1:
        raise ValueError("m_bins must be >= 1")
    if conf.size and (conf.min() < 0.0 or conf.max() > 1.0):
        raise ValueError("confidences must lie in [0, 1]")

    idx = np.clip(np.ceil(conf * m_bins).astype(np.int64) - 1, 0, m_bins - 1)
    counts = np.bincount(idx, minlength=m_bins)
    conf_sum = np.bincount(idx, weights=conf, minlength=m_bins)
    acc_sum = np.bincount(idx, weights=hit, minlength=m_bins)
    occupied = counts > 0
    avg_conf = np.zeros(m_bins)
    avg_acc = np.zeros(m_bins)
    avg_conf[occupied] = conf_sum[occupied] / counts[occupied]
    avg_acc[occupied] = acc_sum[occupied] / counts[occupied]
    total = max(conf.size, 1)
    value = float(((counts / total) * np.abs(avg_acc - avg_conf)).sum())
    return CalibrationReport(m_bins, counts, avg_conf, avg_acc, value)


def predictive_entropy(p) -> float:
    """Shannon entropy of a probability vector, 0 ln 0 = 0; in [0, ln K]."""
    arr = np.asarray(p, dtype=np.float64)
    nz = arr > 0.0
    return float(-(arr[nz] * np.log(arr[nz])).sum())


def predictive_entropy_rows(probs: np.ndarray) -> np.ndarray:
    """Row-wise predictive entropy for a matrix of probability vectors."""
    arr = np.asarray(probs, dtype=np.float64)
    safe = np.where(arr > 0.0, arr, 1.0)
    return -(arr * np.log(safe)).sum(axis=-1)


def confidence_and_prediction(p) -> tuple[float, int]:
    """(max probability, argmax index); ties break to the lowest index."""
    arr = np.asarray(p, dtype=np.float64)
    k = int(arr.argmax())
    return float(arr[k]), k


@dataclass(frozen=True)
class EntropyHistogram:
    """Fixed-range entropy histogram with summary statistics."""

    counts: np.ndarray
    edges: np.ndarray
    mean: float | None
    median: float | None


def entropy_histogram(entropies, bins: int, value_range=None) -> EntropyHistogram:
    """Counting histogram over a fixed range (defaults to the data range)."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    vals = np.asarray(entropies, dtype=np.float64)
    if value_range is None:
        value_range = (float(vals.min()), float(vals.max())) if vals.size else (0.0, 1.0)
    counts, edges = np.histogram(vals, bins=bins, range=value_range)
    if vals.size:
        return EntropyHistogram(counts, edges, float(vals.mean()), float(np.median(vals)))
    return EntropyHistogram(counts, edges, None, None)


def write_reliability_csv(report: CalibrationReport, path) -> None:
    """One row per bin: lower, upper, count, avg_conf, avg_acc."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["lower", "upper", "count", "avg_conf", "avg_acc"])
        for i in range(report.m_bins):
            writer.writerow(
                [
                    repr(i / report.m_bins),
                    repr((i + 1) / report.m_bins),
                    int(report.counts[i]),
                    repr(float(report.avg_confidence[i])),
                    repr(float(report.avg_accuracy[i])),
                ]
            )


def write_entropy_histogram_csv(histograms: dict[str, EntropyHistogram], path) -> None:
    """One row per (source, bin): source, lower, upper, count."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["source", "bin_lower", "bin_upper", "count"])
        for source, hist in histograms.items():
            for i, count in enumerate(hist.counts):
                writer.writerow(
                    [source, repr(float(hist.edges[i])), repr(float(hist.edges[i + 1])), int(count)]
                )
