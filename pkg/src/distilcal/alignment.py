"""Frame-wise target construction from forced alignments.

A forced alignment labels every frame; consecutive frames usually repeat the
same label. Teacher posteriors, on the other hand, arrive once per *token*.
The bridge is: map the alignment into the teacher's unit vocabulary, collapse
repeated neighbours (deduplication, keeping run lengths), look up one teacher
posterior per collapsed token, then repeat each posterior by its run length
(rearrangement) so the teacher stream is frame-synchronous again.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, UnmappedTokenError
from .probs import as_probs

#: Yields one posterior vector per deduplicated token it is given.
PosteriorProvider = Callable[[Sequence[str]], Sequence[np.ndarray]]


@dataclass(frozen=True)
class Alignment:
    """A frame-wise label sequence tagged with its unit vocabulary."""

    frames: tuple[str, ...]
    unit: str

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(str(t) for t in self.frames))
        object.__setattr__(self, "unit", str(self.unit))


@dataclass(frozen=True)
class UnitMap:
    """Total fine-to-coarse token mapping between two unit vocabularies."""

    mapping: Mapping[str, str]
    source: str
    target: str

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))

    def apply(self, token: str) -> str:
        try:
            return self.mapping[token]
        except KeyError:
            raise UnmappedTokenError(token, self.source, self.target) from None


@dataclass(frozen=True)
class RunLengthAlignment:
    """Deduplicated labels plus the length of each collapsed run."""

    labels: tuple[str, ...]
    runs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "runs", tuple(int(r) for r in self.runs))
        if len(self.labels) != len(self.runs):
            raise InvalidInputError(
                f"{len(self.labels)} labels but {len(self.runs)} run lengths"
            )
        if any(r < 1 for r in self.runs):
            raise InvalidInputError("run lengths must be positive")
        if any(a == b for a, b in zip(self.labels, self.labels[1:])):
            raise InvalidInputError("deduplicated labels cannot repeat consecutively")

    @property
    def frame_count(self) -> int:
        return sum(self.runs)


@dataclass(frozen=True)
class TargetSet:
    """Per-frame supervision: the hard label plus per-teacher soft labels."""

    hard: str
    soft: tuple[tuple[str, np.ndarray], ...]


def map_units(a: Alignment, m: UnitMap) -> Alignment:
    """Replace every frame token by its image under the unit map."""
    if a.unit != m.source:
        raise InvalidInputError(
            f"alignment unit {a.unit!r} does not match map source {m.source!r}"
        )
    return Alignment(frames=tuple(m.apply(t) for t in a.frames), unit=m.target)


def deduplicate(a: Alignment) -> RunLengthAlignment:
    """Collapse maximal runs of equal consecutive tokens, keeping run lengths."""
    labels: list[str] = []
    runs: list[int] = []
    for token, grp in groupby(a.frames):
        labels.append(token)
        runs.append(sum(1 for _ in grp))
    return RunLengthAlignment(labels=tuple(labels), runs=tuple(runs))


def rearrange(
    posteriors: Sequence[np.ndarray], rla: RunLengthAlignment
) -> list[np.ndarray]:
    """Repeat posterior i ``runs[i]`` times, restoring the frame rate."""
    if len(posteriors) != len(rla.labels):
        raise InvalidInputError(
            f"got {len(posteriors)} posteriors for {len(rla.labels)} "
            f"deduplicated labels"
        )
    out: list[np.ndarray] = []
    for p, run in zip(posteriors, rla.runs):
        vec = as_probs(p)
        out.extend([vec] * run)
    return out


def build_framewise_targets(
    a: Alignment,
    teachers: Sequence[tuple[str, Optional[UnitMap], PosteriorProvider]],
) -> list[TargetSet]:
    """Assemble per-frame hard labels plus one soft-label stream per teacher.

    Each teacher is a ``(teacher_id, unit_map_or_None, provider)`` triple;
    ``None`` means the teacher already shares the alignment's unit. The
    provider must yield exactly one posterior per deduplicated token of the
    mapped alignment, else an error naming both lengths is raised.
    """
    ids = [str(t[0]) for t in teachers]
    if len(set(ids)) != len(ids):
        raise InvalidInputError(f"duplicate teacher ids: {ids}")
    streams: list[tuple[str, list[np.ndarray]]] = []
    for tid, unit_map, provider in teachers:
        mapped = a if unit_map is None else map_units(a, unit_map)
        rla = deduplicate(mapped)
        posteriors = provider(list(rla.labels))
        streams.append((str(tid), rearrange(posteriors, rla)))
    out: list[TargetSet] = []
    for i, hard in enumerate(a.frames):
        out.append(
            TargetSet(hard=hard, soft=tuple((tid, s[i]) for tid, s in streams))
        )
    return out
