"""Top-N expected calibration error with confidence-sorted equal-count bins.

A prediction's rank-N confidence is its N-th largest class probability and it
counts as correct at rank N when that N-th best class is the true label.
Records are sorted by rank-N confidence and split into equal-count bins
(quantile binning); the calibration error is the count-weighted mean absolute
gap between per-bin accuracy and per-bin confidence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .probs import as_probs, top_n


@dataclass(frozen=True, eq=False)
class PredictionRecord:
    """One sample's probability vector plus its true-label index."""

    probs: np.ndarray
    true_label: int

    def __post_init__(self):
        p = as_probs(self.probs)
        if p.ndim != 1:
            raise InvalidInputError("a prediction record holds a single vector")
        object.__setattr__(self, "probs", p)
        label = int(self.true_label)
        if not 0 <= label < p.shape[0]:
            raise InvalidInputError(
                f"true_label {label} out of range for {p.shape[0]} classes"
            )
        object.__setattr__(self, "true_label", label)


@dataclass(frozen=True)
class BinStats:
    """Count, mean confidence, mean accuracy, and gap (acc - conf) of one bin."""

    count: int
    mean_conf: float
    mean_acc: float
    gap: float


@dataclass(frozen=True)
class ReliabilityReport:
    """Per-bin statistics and the resulting calibration error for one rank."""

    rank: int
    bins: list[BinStats]
    ece: float
    n_total: int


def rank_confidence_correct(
    records: list[PredictionRecord], rank: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-record rank-N confidence and correctness indicator."""
    conf = np.empty(len(records))
    correct = np.empty(len(records))
    for i, rec in enumerate(records):
        idx, c = top_n(rec.probs, rank)
        conf[i] = c
        correct[i] = 1.0 if idx == rec.true_label else 0.0
    return conf, correct


def bin_by_confidence(
    records: list[PredictionRecord], rank: int, num_bins: int
) -> list[list[int]]:
    """Split record indices into equal-count bins of ascending confidence.

    Records are stably sorted by rank-N confidence (ascending) and cut into
    ``num_bins`` contiguous groups of size ``n // num_bins``, with the first
    ``n % num_bins`` groups one element larger. Groups that would be empty
    (``num_bins > n``) are omitted.

    Returns:
        A list of index lists into ``records``; every record appears in
        exactly one bin.
    """
    if not records:
        raise InvalidInputError("cannot bin an empty record list")
    if not isinstance(num_bins, (int, np.integer)) or num_bins < 1:
        raise InvalidParameterError(f"num_bins must be >= 1, got {num_bins!r}")
    conf, _ = rank_confidence_correct(records, rank)
    order = np.argsort(conf, kind="stable")
    n = len(records)
    base, rem = divmod(n, num_bins)
    bins: list[list[int]] = []
    start = 0
    for i in range(num_bins):
        size = base + (1 if i < rem else 0)
        if size == 0:
            continue
        bins.append([int(j) for j in order[start : start + size]])
        start += size
    return bins


def ece(records: list[PredictionRecord], rank: int, num_bins: int) -> ReliabilityReport:
    """Rank-N expected calibration error over confidence-sorted bins.

    ``ece = sum_i (|B_i| / n) * |acc(B_i) - conf(B_i)|`` where the bins come
    from :func:`bin_by_confidence`.
    """
    conf, correct = rank_confidence_correct(records, rank)
    groups = bin_by_confidence(records, rank, num_bins)
    n = len(records)
    stats: list[BinStats] = []
    total = 0.0
    for idxs in groups:
        c = float(conf[idxs].mean())
        a = float(correct[idxs].mean())
        stats.append(BinStats(count=len(idxs), mean_conf=c, mean_acc=a, gap=a - c))
        total += (len(idxs) / n) * abs(a - c)
    return ReliabilityReport(rank=rank, bins=stats, ece=total, n_total=n)


def _fmt6(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # avoid "-0.000000"
    return f"{x:.6f}"


def reliability_csv(report: ReliabilityReport) -> str:
    """Render a report as CSV: header plus one 6-decimal row per bin."""
    lines = ["rank,bin,count,mean_conf,mean_acc,gap"]
    for i, b in enumerate(report.bins):
        lines.append(
            f"{report.rank},{i},{b.count},"
            f"{_fmt6(b.mean_conf)},{_fmt6(b.mean_acc)},{_fmt6(b.gap)}"
        )
    return "\n".join(lines) + "\n"
