"""Core domain types shared by every module.

A FrameRecord is one scene's pre-digested detector output: a dense BEV-style
feature map, a per-anchor objectness map, and a list of ROI feature vectors
with confidences. Samplers never look at ``hidden_label``; it exists so the
simulator can play the role of the human annotator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence, Tuple

import numpy as np


class Domain(str, Enum):
    SOURCE = "source"
    TARGET = "target"


@dataclass(frozen=True, eq=False)
class FrameRecord:
    """One scene's detector-side artifacts.

    feature_map: (C, H, W) activations.
    objectness_map: (C', H, W) foreground probabilities in [0, 1].
    roi_features: (k, d_roi) per-detection feature vectors; k may be 0.
    roi_confidences: (k,) confidences in [0, 1].
    """

    id: str
    domain: Domain
    feature_map: np.ndarray
    objectness_map: np.ndarray
    roi_features: np.ndarray
    roi_confidences: np.ndarray
    hidden_label: Any = None


def validate_frame(frame: FrameRecord) -> list:
    """Return a list of invariant violations (empty means the frame is valid)."""
    errors = []
    fm = np.asarray(frame.feature_map)
    om = np.asarray(frame.objectness_map)
    if fm.ndim != 3:
        errors.append("feature_map must have shape (C, H, W)")
    if om.ndim != 3:
        errors.append("objectness_map must have shape (C', H, W)")
    if fm.ndim == 3 and om.ndim == 3 and fm.shape[1:] != om.shape[1:]:
        errors.append("feature_map and objectness_map spatial shapes differ")
    if fm.ndim == 3 and 0 in fm.shape:
        errors.append("feature_map has an empty dimension")
    if om.ndim == 3 and 0 in om.shape:
        errors.append("objectness_map has an empty dimension")
    if om.size and (np.min(om) < 0.0 or np.max(om) > 1.0):
        errors.append("objectness out of [0,1]")
    if not np.all(np.isfinite(fm)):
        errors.append("feature_map contains non-finite values")
    rois = np.asarray(frame.roi_features)
    confs = np.asarray(frame.roi_confidences)
    if rois.ndim != 2 and rois.size:
        errors.append("roi_features must have shape (k, d_roi)")
    k = rois.shape[0] if rois.ndim == 2 else 0
    n_conf = confs.shape[0] if confs.ndim == 1 else confs.size
    if k != n_conf:
        errors.append("roi length mismatch")
    if confs.size and (np.min(confs) < 0.0 or np.max(confs) > 1.0):
        errors.append("roi confidence out of [0,1]")
    if not frame.id:
        errors.append("frame id is empty")
    return errors


@dataclass(frozen=True)
class BudgetSchedule:
    """Per-round annotation budgets and the pipeline epochs that trigger them."""

    rounds: int
    per_round: Tuple[int, ...]
    trigger_epochs: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_round", tuple(int(b) for b in self.per_round))
        object.__setattr__(
            self, "trigger_epochs", tuple(int(e) for e in self.trigger_epochs)
        )
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")
        if len(self.per_round) != self.rounds:
            raise ValueError("per_round length must equal rounds")
        if len(self.trigger_epochs) != self.rounds:
            raise ValueError("trigger_epochs length must equal rounds")
        if any(b <= 0 for b in self.per_round):
            raise ValueError("per-round budgets must be positive")
        if any(e < 0 for e in self.trigger_epochs):
            raise ValueError("trigger epochs must be non-negative")
        if any(
            a >= b for a, b in zip(self.trigger_epochs, self.trigger_epochs[1:])
        ):
            raise ValueError("trigger_epochs must be strictly increasing")

    @property
    def total_budget(self) -> int:
        return sum(self.per_round)

    @staticmethod
    def equal_split(budget: int, rounds: int, trigger_epochs: Sequence[int]) -> "BudgetSchedule":
        """Split a total budget across rounds as evenly as possible."""
        if rounds <= 0:
            return BudgetSchedule(0, (), ())
        base = budget // rounds
        extra = budget % rounds
        per_round = tuple(base + (1 if i < extra else 0) for i in range(rounds))
        if any(b <= 0 for b in per_round):
            raise ValueError("budget too small for the requested number of rounds")
        return BudgetSchedule(rounds, per_round, tuple(trigger_epochs))


@dataclass(frozen=True)
class PipelineState:
    """Immutable labeled-pool bookkeeping; updates produce new values."""

    selected_source: Tuple[str, ...] = ()
    labeled_target: Tuple[str, ...] = ()
    round: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "selected_source", tuple(self.selected_source))
        object.__setattr__(self, "labeled_target", tuple(self.labeled_target))
        if len(set(self.labeled_target)) != len(self.labeled_target):
            raise ValueError("labeled_target contains duplicate ids")
        if set(self.selected_source) & set(self.labeled_target):
            raise ValueError("selected_source and labeled_target must be disjoint")

    def to_json(self) -> str:
        payload = {
            "selected_source": list(self.selected_source),
            "labeled_target": list(self.labeled_target),
            "round": self.round,
            "rng_seed": self.rng_seed,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "PipelineState":
        payload = json.loads(text)
        return PipelineState(
            selected_source=tuple(payload["selected_source"]),
            labeled_target=tuple(payload["labeled_target"]),
            round=int(payload["round"]),
            rng_seed=int(payload["rng_seed"]),
        )


@dataclass(frozen=True)
class Score:
    frame_id: str
    value: float
