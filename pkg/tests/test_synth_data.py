import numpy as np
import pytest

from oracles import best_single_threshold_accuracy
from fatigue_boost.errors import InvalidSpec
from fatigue_boost.facial_features import extract_features, feature_matrix
from fatigue_boost.landmark_io import load_dataset, write_dataset
from fatigue_boost.synth_data import FaceGeometry, OpennessMode, SynthSpec, generate
from conftest import make_frame
from fatigue_boost.synth_data import face_points


def test_closed_eyes_give_zero_ear():
    geom = FaceGeometry(fatigue_modes=(OpennessMode(eye=(0.0, 0.0), mouth=(0.0, 0.2)),))
    ds = generate(SynthSpec(n_samples=20, fatigue_fraction=1.0, noise_sigma=0.0, geometry=geom))
    assert all(extract_features(f).ear == 0.0 for f in ds.frames)


def test_quota_exact_label_counts():
    ds = generate(SynthSpec(n_samples=1000, fatigue_fraction=0.3, seed=5))
    assert sum(ds.labels) == 300
    assert len(ds) - sum(ds.labels) == 700


def test_deterministic():
    spec = SynthSpec(n_samples=50, seed=9)
    assert generate(spec) == generate(spec)
    assert generate(spec) != generate(SynthSpec(n_samples=50, seed=10))


def test_invalid_spec():
    with pytest.raises(InvalidSpec):
        generate(SynthSpec(fatigue_fraction=1.5))
    with pytest.raises(InvalidSpec):
        generate(SynthSpec(n_samples=0))
    with pytest.raises(InvalidSpec):
        generate(SynthSpec(noise_sigma=-1))


def test_disjoint_ranges_separable_without_noise():
    geom = FaceGeometry(
        alert=OpennessMode(eye=(0.6, 1.0), mouth=(0.0, 0.3)),
        fatigue_modes=(OpennessMode(eye=(0.0, 0.4), mouth=(0.0, 0.3)),),
    )
    ds = generate(SynthSpec(n_samples=300, noise_sigma=0.0, geometry=geom, seed=2))
    ear = feature_matrix(ds.frames, ["ear"])[:, 0]
    assert best_single_threshold_accuracy(ear.tolist(), ds.labels) == 1.0


def test_generated_frames_pass_io_validation(tmp_path):
    ds = generate(SynthSpec(n_samples=30, noise_sigma=2.0, seed=1))
    write_dataset(ds, tmp_path / "s.csv")
    assert load_dataset(tmp_path / "s.csv") == ds.__class__(ds.samples, str(tmp_path / "s.csv"))


def test_ear_monotone_in_openness():
    ears = [extract_features(make_frame(face_points(o, 0.3))).ear for o in np.linspace(0, 1, 21)]
    assert all(a < b for a, b in zip(ears, ears[1:]))
