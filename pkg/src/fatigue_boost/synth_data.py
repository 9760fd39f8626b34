"""Parametric synthetic landmark datasets with known fatigue labels.

Each sample's class fixes ranges for an eye-openness and a mouth-openness
parameter. Eyes and inner lip are drawn from those, everything else comes from
a static face template, and isotropic Gaussian noise is added to all 68 points.

Fatigue comes in modes (by default "drowsy" eyes and "yawning" mouth). Neither
indicator alone separates the classes, both together nearly do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec
from .landmark_io import Dataset, LabeledSample, LandmarkFrame, N_LANDMARKS

Range = tuple[float, float]


@dataclass(frozen=True)
class OpennessMode:
    eye: Range
    mouth: Range


@dataclass(frozen=True)
class FaceGeometry:
    eye_width: float = 30.0
    # Vertical eye extent at openness 1; EAR then equals eye_height / eye_width.
    eye_height: float = 12.0
    mouth_width: float = 40.0
    mouth_height: float = 32.0
    alert: OpennessMode = OpennessMode(eye=(0.55, 1.0), mouth=(0.0, 0.35))
    fatigue_modes: tuple[OpennessMode, ...] = (
        OpennessMode(eye=(0.0, 0.6), mouth=(0.0, 0.35)),  # drowsy
        OpennessMode(eye=(0.5, 1.0), mouth=(0.3, 1.0)),  # yawning
    )


@dataclass(frozen=True)
class SynthSpec:
    n_samples: int = 1000
    fatigue_fraction: float = 0.5
    noise_sigma: float = 0.5
    seed: int = 0
    fps: float = 30.0
    geometry: FaceGeometry = field(default_factory=FaceGeometry)

    def validate(self) -> None:
        if isinstance(self.n_samples, bool) or not isinstance(self.n_samples, int) or self.n_samples < 1:
            raise InvalidSpec(f"n_samples must be a positive integer, got {self.n_samples!r}")
        if not 0 <= self.fatigue_fraction <= 1:
            raise InvalidSpec(f"fatigue_fraction must be in [0, 1], got {self.fatigue_fraction!r}")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise InvalidSpec(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")
        if not self.fps > 0:
            raise InvalidSpec(f"fps must be positive, got {self.fps!r}")
        g = self.geometry
        if min(g.eye_width, g.eye_height, g.mouth_width, g.mouth_height) <= 0:
            raise InvalidSpec("template dimensions must be positive")
        if not g.fatigue_modes:
            raise InvalidSpec("at least one fatigue mode is required")
        for mode in (g.alert, *g.fatigue_modes):
            for lo, hi in (mode.eye, mode.mouth):
                if not 0 <= lo <= hi:
                    raise InvalidSpec(f"openness range ({lo}, {hi}) must satisfy 0 <= lo <= hi")


def _template() -> np.ndarray:
    """Static frontal face in pixel coordinates (y grows downward), face centre at (200, 200)."""
    pts = np.zeros((N_LANDMARKS, 2))
    # jaw 0-16: lower half-ellipse
    for i, a in enumerate(np.linspace(math.pi, 0.0, 17)):
        pts[i] = (200 + 90 * math.cos(a), 190 + 110 * math.sin(a))
    # brows 17-21, 22-26
    for i in range(5):
        pts[17 + i] = (130 + 12 * i, 140 - 6 * math.sin(math.pi * i / 4))
        pts[22 + i] = (222 + 12 * i, 140 - 6 * math.sin(math.pi * i / 4))
    # nose bridge 27-30, base 31-35
    for i in range(4):
        pts[27 + i] = (200, 160 + 15 * i)
    for i in range(5):
        pts[31 + i] = (184 + 8 * i, 218 + (4 if i == 2 else 0))
    # outer lip 48-59: ellipse around the mouth centre
    for i, a in enumerate(np.linspace(math.pi, -math.pi, 12, endpoint=False)):
        pts[48 + i] = (200 + 30 * math.cos(a), 255 - 14 * math.sin(a))
    return pts


_TEMPLATE = _template()
LEFT_EYE_CENTER = (155.0, 160.0)
RIGHT_EYE_CENTER = (245.0, 160.0)
MOUTH_CENTER = (200.0, 255.0)


def _eye(center, width: float, height: float) -> np.ndarray:
    """Six eye points in 68-convention order: corner, upper x2, corner, lower x2."""
    cx, cy = center
    half = height / 2.0
    return np.array(
        [
            (cx - width / 2, cy),
            (cx - width / 6, cy - half),
            (cx + width / 6, cy - half),
            (cx + width / 2, cy),
            (cx + width / 6, cy + half),
            (cx - width / 6, cy + half),
        ]
    )


def _inner_lip(center, width: float, height: float) -> np.ndarray:
    """Inner-lip points 60-67: left corner, upper x3, right corner, lower x3 (right to left)."""
    cx, cy = center
    half = height / 2.0
    return np.array(
        [
            (cx - width / 2, cy),
            (cx - width / 4, cy - half),
            (cx, cy - half),
            (cx + width / 4, cy - half),
            (cx + width / 2, cy),
            (cx + width / 4, cy + half),
            (cx, cy + half),
            (cx - width / 4, cy + half),
        ]
    )


def face_points(eye_openness: float, mouth_openness: float, geometry: FaceGeometry = FaceGeometry()) -> np.ndarray:
    """Noise-free 68x2 landmark array for the given openness parameters."""
    pts = _TEMPLATE.copy()
    eye_h = geometry.eye_height * eye_openness
    pts[36:42] = _eye(LEFT_EYE_CENTER, geometry.eye_width, eye_h)
    pts[42:48] = _eye(RIGHT_EYE_CENTER, geometry.eye_width, eye_h)
    pts[60:68] = _inner_lip(MOUTH_CENTER, geometry.mouth_width, geometry.mouth_height * mouth_openness)
    return pts


def generate(spec: SynthSpec) -> Dataset:
    spec.validate()
    # Own stream so a split seeded with the same integer is not correlated with the labels.
    rng = np.random.default_rng([spec.seed, 0x5D])
    n = spec.n_samples
    n_fatigued = math.floor(n * spec.fatigue_fraction)
    labels = np.zeros(n, dtype=int)
    labels[rng.permutation(n)[:n_fatigued]] = 1

    g = spec.geometry
    samples = []
    for i in range(n):
        if labels[i]:
            mode = g.fatigue_modes[int(rng.integers(len(g.fatigue_modes)))]
        else:
            mode = g.alert
        eye = rng.uniform(*mode.eye)
        mouth = rng.uniform(*mode.mouth)
        pts = face_points(eye, mouth, g)
        if spec.noise_sigma > 0:
            pts = pts + rng.normal(0.0, spec.noise_sigma, size=pts.shape)
        frame = LandmarkFrame(
            frame_id=i,
            points=tuple((float(x), float(y)) for x, y in pts),
            timestamp_s=i / spec.fps,
        )
        samples.append(LabeledSample(frame, int(labels[i])))
    return Dataset(tuple(samples), provenance=f"synthetic(n={n}, seed={spec.seed})")
