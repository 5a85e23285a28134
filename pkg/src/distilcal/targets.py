"""Supervision distributions: one-hot, smoothed, softened, and interpolated.

Soft labels are stored as normalized distributions rather than logits so the
simplex invariant can be checked at every module boundary. Dense vectors only;
class counts up to a few thousand are fine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .probs import as_logits, as_probs, softmax_t


@dataclass(frozen=True)
class HardLabel:
    """A true-class index together with the class count it indexes into."""

    class_index: int
    num_classes: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise InvalidParameterError(
                f"need at least 2 classes, got {self.num_classes}"
            )
        if not 0 <= self.class_index < self.num_classes:
            raise InvalidInputError(
                f"class_index {self.class_index} out of range "
                f"for {self.num_classes} classes"
            )


@dataclass(frozen=True)
class SmoothingConfig:
    """Label-smoothing strength; 0 keeps the one-hot target, 1 is uniform."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidParameterError(f"epsilon must be in [0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class InterpolationConfig:
    """Mixing factor between hard and soft targets, plus the soft-label temperature."""

    lam: float
    temperature: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidParameterError(f"lam must be in [0, 1], got {self.lam}")
        if not self.temperature > 0.0:
            raise InvalidParameterError(
                f"temperature must be positive, got {self.temperature}"
            )


def one_hot(label: HardLabel) -> np.ndarray:
    """Probability vector with all mass on the true class."""
    v = np.zeros(label.num_classes)
    v[label.class_index] = 1.0
    return v


def smooth_label(label: HardLabel, cfg: SmoothingConfig) -> np.ndarray:
    """Smoothed target: true class gets ``1 - eps + eps/k``, others ``eps/k``."""
    k = label.num_classes
    v = np.full(k, cfg.epsilon / k)
    v[label.class_index] += 1.0 - cfg.epsilon
    return v


def soft_label(teacher_logits, temperature: float) -> np.ndarray:
    """Teacher logits softened into a distribution at the given temperature."""
    return softmax_t(as_logits(teacher_logits), temperature)


def interpolate_target(hard: HardLabel, soft, lam: float) -> np.ndarray:
    """Convex combination ``lam * one_hot(hard) + (1 - lam) * soft``."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameterError(f"lam must be in [0, 1], got {lam}")
    s = as_probs(soft)
    if s.ndim != 1 or s.shape[0] != hard.num_classes:
        raise InvalidInputError(
            f"soft label has shape {s.shape}, expected ({hard.num_classes},)"
        )
    return lam * one_hot(hard) + (1.0 - lam) * s
