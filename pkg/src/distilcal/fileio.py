"""Line-oriented file formats used by the command-line tools.

Formats (one record per line throughout):

* prediction file: JSON objects ``{"logits": [...], "label": int}``;
* hypothesis file: JSON objects
  ``{"utt": str, "id": str, "am_logp": float, "lm_logp": float}``;
* alignment file: ``utt-id<TAB>tok tok tok ...``;
* unit-map file: TSV lines ``fine<TAB>coarse``;
* posterior file: ``utt-id<TAB>token-index<TAB>p0 p1 ... pK-1``.

Parse errors raise :class:`FileFormatError` carrying the offending line
number. Posterior vectors may be off the simplex by up to 1e-6 (6-decimal
files round); they are renormalized on load, anything worse is rejected.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .alignment import Alignment, UnitMap
from .errors import FileFormatError
from .tempscale import ScoredHypothesis

#: Posterior rows may miss the simplex by this much before being rejected.
POSTERIOR_SUM_TOL = 1e-6


def _lines(path) -> list[tuple[int, str]]:
    text = Path(path).read_text(encoding="utf-8")
    return [
        (i, line)
        for i, line in enumerate(text.splitlines(), start=1)
        if line.strip()
    ]


def read_prediction_file(path) -> tuple[np.ndarray, np.ndarray]:
    """Logit matrix and label vector from a JSON-lines prediction file."""
    logits: list[list[float]] = []
    labels: list[int] = []
    width = None
    for line_no, line in _lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FileFormatError(path, line_no, f"bad JSON: {e.msg}") from None
        if not isinstance(obj, dict) or "logits" not in obj or "label" not in obj:
            raise FileFormatError(path, line_no, "need keys 'logits' and 'label'")
        row = obj["logits"]
        if (
            not isinstance(row, list)
            or len(row) < 2
            or not all(isinstance(v, (int, float)) for v in row)
        ):
            raise FileFormatError(path, line_no, "'logits' must list >= 2 numbers")
        if not all(np.isfinite(v) for v in row):
            raise FileFormatError(path, line_no, "logits must be finite")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FileFormatError(
                path, line_no, f"expected {width} logits, got {len(row)}"
            )
        label = obj["label"]
        if not isinstance(label, int) or isinstance(label, bool):
            raise FileFormatError(path, line_no, "'label' must be an integer")
        if not 0 <= label < len(row):
            raise FileFormatError(
                path, line_no, f"label {label} out of range for {len(row)} classes"
            )
        logits.append([float(v) for v in row])
        labels.append(label)
    if not logits:
        raise FileFormatError(path, 0, "no prediction records found")
    return np.array(logits), np.array(labels)


def read_hypothesis_file(path) -> dict[str, list[ScoredHypothesis]]:
    """Hypotheses grouped by utterance, both levels in file order."""
    groups: dict[str, list[ScoredHypothesis]] = {}
    for line_no, line in _lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FileFormatError(path, line_no, f"bad JSON: {e.msg}") from None
        try:
            utt = str(obj["utt"])
            hyp = ScoredHypothesis(
                id=str(obj["id"]),
                am_logp=float(obj["am_logp"]),
                lm_logp=float(obj["lm_logp"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FileFormatError(
                path, line_no, f"need finite 'utt'/'id'/'am_logp'/'lm_logp': {e}"
            ) from None
        groups.setdefault(utt, []).append(hyp)
    if not groups:
        raise FileFormatError(path, 0, "no hypotheses found")
    return groups


def read_alignment_file(path, unit: str) -> dict[str, Alignment]:
    """Alignments keyed by utterance id, in file order."""
    out: dict[str, Alignment] = {}
    for line_no, line in _lines(path):
        parts = line.split("\t", 1)
        utt = parts[0].strip()
        if not utt:
            raise FileFormatError(path, line_no, "missing utterance id")
        if utt in out:
            raise FileFormatError(path, line_no, f"duplicate utterance {utt!r}")
        tokens = parts[1].split() if len(parts) == 2 else []
        out[utt] = Alignment(frames=tuple(tokens), unit=unit)
    if not out:
        raise FileFormatError(path, 0, "no alignments found")
    return out


def read_unit_map_file(path, source: str, target: str) -> UnitMap:
    """Fine-to-coarse token table from a 2-column TSV file."""
    mapping: dict[str, str] = {}
    for line_no, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise FileFormatError(path, line_no, "expected 'fine<TAB>coarse'")
        if parts[0] in mapping and mapping[parts[0]] != parts[1]:
            raise FileFormatError(
                path, line_no, f"conflicting images for token {parts[0]!r}"
            )
        mapping[parts[0]] = parts[1]
    if not mapping:
        raise FileFormatError(path, 0, "empty unit map")
    return UnitMap(mapping=mapping, source=source, target=target)


def read_posterior_file(path) -> dict[str, list[np.ndarray]]:
    """Per-utterance posterior lists, ordered by token index.

    Token indices must be contiguous from 0 within each utterance and all
    vectors in the file must share one width.
    """
    rows: dict[str, dict[int, np.ndarray]] = {}
    width = None
    for line_no, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise FileFormatError(
                path, line_no, "expected 'utt<TAB>token-index<TAB>p0 p1 ...'"
            )
        utt = parts[0].strip()
        try:
            index = int(parts[1])
        except ValueError:
            raise FileFormatError(path, line_no, f"bad token index {parts[1]!r}") from None
        if index < 0:
            raise FileFormatError(path, line_no, f"negative token index {index}")
        try:
            vec = np.array([float(v) for v in parts[2].split()])
        except ValueError:
            raise FileFormatError(path, line_no, "probabilities must be numbers") from None
        if vec.size < 2 or not np.all(np.isfinite(vec)) or np.any(vec < 0):
            raise FileFormatError(
                path, line_no, "need >= 2 finite non-negative probabilities"
            )
        if width is None:
            width = vec.size
        elif vec.size != width:
            raise FileFormatError(
                path, line_no, f"expected {width} probabilities, got {vec.size}"
            )
        total = vec.sum()
        if abs(total - 1.0) > POSTERIOR_SUM_TOL:
            raise FileFormatError(
                path, line_no, f"probabilities sum to {total:.8f}, not 1"
            )
        vec = vec / total
        per_utt = rows.setdefault(utt, {})
        if index in per_utt:
            raise FileFormatError(path, line_no, f"duplicate token index {index}")
        per_utt[index] = vec
    if not rows:
        raise FileFormatError(path, 0, "no posteriors found")
    out: dict[str, list[np.ndarray]] = {}
    for utt, by_index in rows.items():
        expected = set(range(len(by_index)))
        if set(by_index) != expected:
            raise FileFormatError(
                path, 0, f"utterance {utt!r} has gaps in its token indices"
            )
        out[utt] = [by_index[i] for i in range(len(by_index))]
    return out


def read_config_file(path) -> dict[str, str]:
    """key=value lines; blank lines and '#' comments are ignored."""
    out: dict[str, str] = {}
    for line_no, line in _lines(path):
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise FileFormatError(path, line_no, "expected 'key=value'")
        key, value = stripped.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise FileFormatError(path, line_no, "empty key")
        if key in out:
            raise FileFormatError(path, line_no, f"duplicate key {key!r}")
        out[key] = value
    return out


def write_text_atomic(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
