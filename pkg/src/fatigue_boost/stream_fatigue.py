"""Stream-level fatigue verdicts from per-frame probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boosted_trees import Ensemble, predict_proba
from .errors import AllFramesDegenerate, DegenerateHorizontal, EmptyStream
from .facial_features import extract_features
from .landmark_io import LandmarkFrame


@dataclass(frozen=True)
class StreamVerdict:
    frame_probs: tuple[float, ...]
    mean_prob: float
    verdict: bool
    decision_threshold: float
    frame_ids: tuple[int, ...] = ()
    skipped: int = 0

    def as_dict(self) -> dict:
        return {
            "frames": [
                {"frame_id": fid, "probability": p} for fid, p in zip(self.frame_ids, self.frame_probs)
            ],
            "mean_prob": self.mean_prob,
            "decision_threshold": self.decision_threshold,
            "verdict": "fatigue" if self.verdict else "non-fatigue",
            "scored": len(self.frame_probs),
            "skipped": self.skipped,
        }


def mean_probability(probs: Sequence[float]) -> float:
    # fsum is correctly rounded, so the mean does not depend on frame order.
    if len(probs) == 0:
        raise EmptyStream("no probabilities to aggregate")
    return math.fsum(probs) / len(probs)


def aggregate(
    probs: Sequence[float],
    decision_threshold: float = 0.5,
    frame_ids: Sequence[int] = (),
    skipped: int = 0,
) -> StreamVerdict:
    mean = mean_probability(probs)
    return StreamVerdict(
        frame_probs=tuple(float(p) for p in probs),
        mean_prob=mean,
        verdict=mean >= decision_threshold,
        decision_threshold=decision_threshold,
        frame_ids=tuple(frame_ids),
        skipped=skipped,
    )


def score_stream(
    ensemble: Ensemble,
    frames: Sequence[LandmarkFrame],
    decision_threshold: float = 0.5,
) -> StreamVerdict:
    """Score every frame and average. Frames with degenerate eye/mouth geometry are skipped."""
    if not frames:
        raise EmptyStream("stream has no frames")
    rows, ids = [], []
    skipped = 0
    for frame in frames:
        try:
            fv = extract_features(frame)
        except DegenerateHorizontal:
            skipped += 1
            continue
        rows.append(fv.select(ensemble.feature_names))
        ids.append(frame.frame_id)
    if not rows:
        raise AllFramesDegenerate(f"all {len(frames)} frames have degenerate geometry")
    probs = predict_proba(ensemble, np.asarray(rows, dtype=np.float64))
    return aggregate(probs.tolist(), decision_threshold, ids, skipped)
