"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written in plain Python (lists, ``sorted``,
sequential sums) so it shares no code path with the numpy implementations it
verifies.
"""

from __future__ import annotations

import math


def brute_force_ece(prob_rows, labels, rank: int, num_bins: int) -> float:
    """Naive sort + equal-count split + bin-weighted |acc - conf|."""
    n = len(prob_rows)
    conf: list[float] = []
    correct: list[float] = []
    for probs, label in zip(prob_rows, labels):
        by_rank = sorted(range(len(probs)), key=lambda i: (-probs[i], i))
        cls = by_rank[rank - 1]
        conf.append(float(probs[cls]))
        correct.append(1.0 if cls == label else 0.0)
    order = sorted(range(n), key=lambda i: conf[i])  # Python sort is stable
    base, rem = divmod(n, num_bins)
    total = 0.0
    start = 0
    for b in range(num_bins):
        size = base + (1 if b < rem else 0)
        if size == 0:
            continue
        idxs = order[start : start + size]
        start += size
        acc = sum(correct[i] for i in idxs) / size
        avg_conf = sum(conf[i] for i in idxs) / size
        total += (size / n) * abs(acc - avg_conf)
    return total


def brute_force_bin_sizes(n: int, num_bins: int) -> list[int]:
    """Equal-count split sizes, remainder given to the earliest bins."""
    base, rem = divmod(n, num_bins)
    sizes = [base + (1 if b < rem else 0) for b in range(num_bins)]
    return [s for s in sizes if s > 0]


def dense_grid_temperature(logit_rows, labels, t_min: float, t_max: float, points: int = 10000):
    """Argmin of the mean NLL over a dense log-spaced temperature grid."""
    best_t, best_nll = None, math.inf
    log_lo, log_hi = math.log(t_min), math.log(t_max)
    for j in range(points):
        t = math.exp(log_lo + (log_hi - log_lo) * j / (points - 1))
        total = 0.0
        for row, label in zip(logit_rows, labels):
            z = [v / t for v in row]
            m = max(z)
            lse = m + math.log(sum(math.exp(v - m) for v in z))
            total += lse - z[label]
        nll = total / len(labels)
        if nll < best_nll:
            best_t, best_nll = t, nll
    return best_t, best_nll
