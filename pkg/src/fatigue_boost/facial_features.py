"""Eye and mouth aspect ratios, and threshold-based blink/yawn detection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArityMismatch, DegenerateHorizontal, EmptySeries, FatigueError, NonPositiveFps
from .landmark_io import LEFT_EYE, MOUTH_SIX, RIGHT_EYE, LandmarkFrame

DEFAULT_EAR_THRESHOLD = 0.75
DEFAULT_MAR_THRESHOLD = 0.5
DEFAULT_MIN_EVENT_FRAMES = 2

FEATURE_COLUMNS = ("ear_left", "ear_right", "ear", "mar")


def _dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def aspect_ratio(points: Sequence) -> float:
    """(|p2 - p6| + |p3 - p5|) / (2 |p1 - p4|) for six points ordered p1..p6."""
    p1, p2, p3, p4, p5, p6 = points
    width = _dist(p1, p4)
    if width == 0.0:
        raise DegenerateHorizontal()
    return (_dist(p2, p6) + _dist(p3, p5)) / (2.0 * width)


def _region_ratio(frame: LandmarkFrame, indices: tuple[int, ...], region: str) -> float:
    try:
        return aspect_ratio([frame.points[i] for i in indices])
    except DegenerateHorizontal:
        raise DegenerateHorizontal(region=f"frame {frame.frame_id} {region}") from None


def compute_ear(frame: LandmarkFrame) -> tuple[float, float, float]:
    left = _region_ratio(frame, LEFT_EYE, "left eye")
    right = _region_ratio(frame, RIGHT_EYE, "right eye")
    return left, right, (left + right) / 2.0


def compute_mar(frame: LandmarkFrame) -> float:
    return _region_ratio(frame, MOUTH_SIX, "inner lip")


@dataclass(frozen=True)
class FeatureVector:
    ear_left: float
    ear_right: float
    ear: float
    mar: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.ear_left, self.ear_right, self.ear, self.mar)

    def select(self, names: Sequence[str]) -> list[float]:
        unknown = [n for n in names if n not in FEATURE_COLUMNS]
        if unknown:
            raise ArityMismatch(f"unknown feature names {unknown}; available: {FEATURE_COLUMNS}")
        return [getattr(self, n) for n in names]


def extract_features(frame: LandmarkFrame) -> FeatureVector:
    ear_left, ear_right, ear = compute_ear(frame)
    return FeatureVector(ear_left, ear_right, ear, compute_mar(frame))


def feature_matrix(frames: Sequence[LandmarkFrame], names: Sequence[str] = ("ear", "mar")) -> np.ndarray:
    """Stack the named features of every frame into an (n_frames, len(names)) array."""
    rows = [extract_features(f).select(names) for f in frames]
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), len(names))


@dataclass(frozen=True)
class EventSeries:
    blink_count: int
    blink_frequency_per_min: float
    yawn_count: int
    blink_mask: tuple[bool, ...]
    yawn_mask: tuple[bool, ...]


def _runs(flags: Sequence[bool], min_len: int) -> tuple[int, list[bool]]:
    """Count maximal True runs of length >= min_len; mask marks only counted runs."""
    mask = [False] * len(flags)
    count = 0
    i = 0
    while i < len(flags):
        if not flags[i]:
            i += 1
            continue
        j = i
        while j < len(flags) and flags[j]:
            j += 1
        if j - i >= min_len:
            count += 1
            mask[i:j] = [True] * (j - i)
        i = j
    return count, mask


def detect_events(
    series: Sequence[FeatureVector],
    ear_threshold: float = DEFAULT_EAR_THRESHOLD,
    mar_threshold: float = DEFAULT_MAR_THRESHOLD,
    min_event_frames: int = DEFAULT_MIN_EVENT_FRAMES,
    fps: float = 30.0,
) -> EventSeries:
    """Blinks are runs of ``ear < ear_threshold``, yawns runs of ``mar > mar_threshold``,
    each at least ``min_event_frames`` long.
    """
    if not series:
        raise EmptySeries("feature series is empty")
    if not fps > 0:
        raise NonPositiveFps(f"fps must be positive, got {fps}")
    if not (ear_threshold > 0 and mar_threshold > 0):
        raise FatigueError("thresholds must be positive")
    if min_event_frames < 1:
        raise FatigueError("min_event_frames must be >= 1")

    blinks, blink_mask = _runs([v.ear < ear_threshold for v in series], min_event_frames)
    yawns, yawn_mask = _runs([v.mar > mar_threshold for v in series], min_event_frames)
    minutes = len(series) / fps / 60.0
    return EventSeries(
        blink_count=blinks,
        blink_frequency_per_min=blinks / minutes,
        yawn_count=yawns,
        blink_mask=tuple(blink_mask),
        yawn_mask=tuple(yawn_mask),
    )
