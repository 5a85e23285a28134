"""Post-hoc temperature scaling and two-temperature score combination.

A single scalar temperature is fitted on held-out logits by minimizing the
mean negative log-likelihood; the classifier itself stays fixed. Separately,
two log-probability streams (e.g. acoustic and language scores of n-best
hypotheses) are combined with independent temperatures and re-ranked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .probs import as_logits

#: Default search bounds; wide enough for any temperature seen in practice.
DEFAULT_BOUNDS = (0.05, 20.0)
#: Size of the coarse log-spaced search grid (always contains t = 1).
GRID_POINTS = 64
#: Golden-section refinement stops once the bracket is narrower than this.
REFINE_TOL = 1e-4

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TemperatureFit:
    """Fitted temperature with its NLL and the unit-temperature NLL."""

    t_star: float
    nll_at_t_star: float
    nll_at_unit: float
    search_bounds: tuple[float, float]


@dataclass(frozen=True)
class ScoredHypothesis:
    """One hypothesis with its acoustic and language log-probabilities (nats)."""

    id: str
    am_logp: float
    lm_logp: float

    def __post_init__(self):
        if not (math.isfinite(self.am_logp) and math.isfinite(self.lm_logp)):
            raise InvalidInputError(f"hypothesis {self.id!r} has non-finite scores")


def _stack_validation(validation) -> tuple[np.ndarray, np.ndarray]:
    if len(validation) == 0:
        raise InvalidInputError("validation set is empty")
    logits = as_logits(np.stack([np.asarray(lg, dtype=np.float64) for lg, _ in validation]))
    labels = np.array([int(lab) for _, lab in validation])
    k = logits.shape[-1]
    if np.any(labels < 0) or np.any(labels >= k):
        raise InvalidInputError(f"labels must lie in [0, {k})")
    return logits, labels


def nll_at_temperature(logits: np.ndarray, labels: np.ndarray, t: float) -> float:
    """Mean negative log-likelihood of the labels under logits / t."""
    if t <= 0.0:
        raise InvalidParameterError(f"temperature must be positive, got {t}")
    z = logits / t
    z = z - z.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1))
    picked = z[np.arange(len(labels)), labels]
    return float(np.mean(lse - picked))


def _search_grid(t_min: float, t_max: float) -> np.ndarray:
    pts = np.geomspace(t_min, t_max, GRID_POINTS)
    # Snap the point nearest to t=1 (in log space) onto exactly 1.0; the grid
    # stays sorted because 1 lies strictly between that point's neighbours.
    k = int(np.argmin(np.abs(np.log(pts))))
    pts[k] = 1.0
    return pts


def fit_temperature(
    validation: Sequence[tuple[np.ndarray, int]],
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
) -> TemperatureFit:
    """Fit the NLL-minimizing temperature on a validation set.

    Search strategy: evaluate a 64-point log-spaced grid over ``bounds``
    (with t=1 snapped onto the grid), then refine around the best grid point
    with golden-section search until the bracket is narrower than 1e-4. The
    best temperature evaluated anywhere is returned, so the fit is never
    worse than t=1 and lands exactly on a bound when the NLL is monotone.

    Args:
        validation: sequence of (logit vector, true label) pairs.
        bounds: (t_min, t_max) with 0 < t_min <= 1 <= t_max; t=1 must be
            inside so the no-rescaling fallback is always an option.
    """
    t_min, t_max = float(bounds[0]), float(bounds[1])
    if not (0.0 < t_min < t_max):
        raise InvalidInputError(f"need 0 < t_min < t_max, got {bounds!r}")
    if not (t_min <= 1.0 <= t_max):
        raise InvalidInputError(f"bounds must contain t=1, got {bounds!r}")
    logits, labels = _stack_validation(validation)

    def nll(t: float) -> float:
        return nll_at_temperature(logits, labels, t)

    best_t = t_min
    best_nll = math.inf
    grid = _search_grid(t_min, t_max)
    values = np.array([nll(t) for t in grid])
    k = int(np.argmin(values))
    best_t, best_nll = float(grid[k]), float(values[k])

    # Golden-section refinement inside the bracket around the best grid point.
    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, len(grid) - 1)])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = nll(c), nll(d)
    while (b - a) > REFINE_TOL:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = nll(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = nll(d)
    for t, v in ((c, fc), (d, fd)):
        if v < best_nll:
            best_t, best_nll = float(t), float(v)

    nll_unit = nll(1.0)
    if nll_unit < best_nll:  # guard against refinement round-off
        best_t, best_nll = 1.0, nll_unit
    return TemperatureFit(
        t_star=best_t,
        nll_at_t_star=best_nll,
        nll_at_unit=nll_unit,
        search_bounds=(t_min, t_max),
    )


def combine_scores(
    hyps: Sequence[ScoredHypothesis], t1: float, t2: float
) -> tuple[str, list[tuple[ScoredHypothesis, float]]]:
    """Rank hypotheses by ``am_logp / t1 + lm_logp / t2``.

    Returns the best hypothesis id and the full ranking (descending combined
    score; ties keep input order).
    """
    if len(hyps) == 0:
        raise InvalidInputError("hypothesis list is empty")
    if t1 <= 0.0 or t2 <= 0.0:
        raise InvalidParameterError(f"temperatures must be positive, got {t1}, {t2}")
    scores = np.array([h.am_logp / t1 + h.lm_logp / t2 for h in hyps])
    order = np.argsort(-scores, kind="stable")
    ranked = [(hyps[int(i)], float(scores[int(i)])) for i in order]
    return ranked[0][0].id, ranked
