import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_frame
from oracles import six_point_ratio
from fatigue_boost.errors import DegenerateHorizontal, EmptySeries, NonPositiveFps
from fatigue_boost.facial_features import (
    FeatureVector,
    aspect_ratio,
    compute_ear,
    compute_mar,
    detect_events,
    extract_features,
)
from fatigue_boost.landmark_io import LEFT_EYE, MOUTH_SIX, RIGHT_EYE
from fatigue_boost.synth_data import face_points

coord = st.floats(-1e3, 1e3, allow_nan=False)
six_points = st.lists(st.tuples(coord, coord), min_size=6, max_size=6).filter(
    lambda p: math.dist(p[0], p[3]) > 1e-3
)


def test_closed_is_zero():
    pts = [(0, 0), (1, 0.5), (3, 0.5), (4, 0), (3, 0.5), (1, 0.5)]
    assert aspect_ratio(pts) == 0.0


def test_hand_worked_example():
    pts = [(0, 0), (1, 1), (3, 1), (4, 0), (3, -1), (1, -1)]
    assert aspect_ratio(pts) == six_point_ratio(pts) == 0.5


def test_degenerate_horizontal():
    with pytest.raises(DegenerateHorizontal):
        aspect_ratio([(2, 2), (1, 1), (3, 1), (2, 2), (3, -1), (1, -1)])


def test_congruent_eyes_are_equal(open_face):
    left, right, ear = compute_ear(open_face)
    assert left == pytest.approx(right, rel=1e-12)
    assert ear == pytest.approx(left, rel=1e-12)


def test_closed_face_features_all_zero():
    fv = extract_features(make_frame(face_points(0.0, 0.0)))
    assert fv.as_tuple() == (0.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("eye, mouth", [(0.5, 0.1), (0.9, 0.7), (0.2, 1.0)])
def test_matches_raw_recomputation(eye, mouth):
    rng = np.random.default_rng(0)
    pts = face_points(eye, mouth) + rng.normal(0, 0.3, size=(68, 2))
    frame = make_frame(pts)
    left, right, ear = compute_ear(frame)
    assert left == pytest.approx(six_point_ratio([pts[i] for i in LEFT_EYE]), rel=1e-12)
    assert right == pytest.approx(six_point_ratio([pts[i] for i in RIGHT_EYE]), rel=1e-12)
    assert compute_mar(frame) == pytest.approx(six_point_ratio([pts[i] for i in MOUTH_SIX]), rel=1e-12)


def test_mar_linear_in_height():
    base = compute_mar(make_frame(face_points(0.5, 0.3)))
    doubled = compute_mar(make_frame(face_points(0.5, 0.6)))
    assert doubled == pytest.approx(2 * base, rel=1e-12)


def test_degenerate_mouth_names_region():
    pts = face_points(0.5, 0.5)
    pts[64] = pts[60]
    with pytest.raises(DegenerateHorizontal, match="inner lip"):
        extract_features(make_frame(pts))


@settings(max_examples=300, deadline=None)
@given(
    pts=six_points,
    theta=st.floats(0, 2 * math.pi),
    scale=st.floats(0.1, 10),
    tx=coord,
    ty=coord,
    mirror=st.booleans(),
)
def test_similarity_and_mirror_invariance(pts, theta, scale, tx, ty, mirror):
    p = np.asarray(pts, dtype=float)
    if mirror:
        p[:, 0] = -p[:, 0]
    c, s = math.cos(theta), math.sin(theta)
    q = scale * p @ np.array([[c, s], [-s, c]]) + (tx, ty)
    assert aspect_ratio(q) == pytest.approx(aspect_ratio(pts), rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(pts=six_points)
def test_vertical_pair_exchange_and_sign(pts):
    p1, p2, p3, p4, p5, p6 = pts
    r = aspect_ratio(pts)
    assert r >= 0
    assert aspect_ratio([p1, p3, p2, p4, p6, p5]) == pytest.approx(r, rel=1e-12, abs=0)
    assert (r == 0) == (p2 == p6 and p3 == p5)


def fv(ear, mar=0.1):
    return FeatureVector(ear, ear, ear, mar)


def test_no_blinks_when_always_open():
    ev = detect_events([fv(0.9)] * 20, ear_threshold=0.75)
    assert ev.blink_count == 0
    assert ev.blink_frequency_per_min == 0


def test_blink_runs():
    series = [fv(x) for x in (0.9, 0.1, 0.1, 0.9, 0.1, 0.1, 0.9)]
    ev = detect_events(series, ear_threshold=0.75, min_event_frames=2)
    assert ev.blink_count == 2
    assert ev.blink_mask == (False, True, True, False, True, True, False)


def test_single_frame_dip_ignored():
    series = [fv(x) for x in (0.9, 0.1, 0.9, 0.1, 0.1, 0.9)]
    assert detect_events(series, min_event_frames=2).blink_count == 1
    assert detect_events(series, min_event_frames=1).blink_count == 2


def test_blink_frequency():
    series = [fv(0.9)] * 60
    series[10:13] = [fv(0.1)] * 3
    ev = detect_events(series, fps=30)
    assert ev.blink_count == 1
    assert ev.blink_frequency_per_min == pytest.approx(30.0)


def test_yawns():
    series = [fv(0.9, m) for m in (0.1, 0.6, 0.7, 0.8, 0.2, 0.6)]
    ev = detect_events(series, mar_threshold=0.5, min_event_frames=2)
    assert ev.yawn_count == 1


def test_event_errors():
    with pytest.raises(EmptySeries):
        detect_events([])
    with pytest.raises(NonPositiveFps):
        detect_events([fv(0.9)], fps=0)


@settings(max_examples=100, deadline=None)
@given(
    ears=st.lists(st.sampled_from([0.1, 0.9]), min_size=1, max_size=40),
    pad_front=st.integers(0, 5),
    pad_back=st.integers(0, 5),
    k=st.integers(1, 3),
)
def test_padding_with_open_frames_keeps_counts(ears, pad_front, pad_back, k):
    base = detect_events([fv(e) for e in ears], min_event_frames=k)
    padded = [0.9] * pad_front + ears + [0.9] * pad_back
    assert detect_events([fv(e) for e in padded], min_event_frames=k).blink_count == base.blink_count
