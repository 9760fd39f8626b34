import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fatigue_boost.landmark_io import Dataset, LabeledSample, LandmarkFrame
from fatigue_boost.synth_data import SynthSpec, face_points, generate


def make_frame(points, frame_id=0, timestamp_s=None):
    return LandmarkFrame(frame_id, tuple((float(x), float(y)) for x, y in points), timestamp_s)


@pytest.fixture
def open_face():
    return make_frame(face_points(0.8, 0.2))


@pytest.fixture(scope="session")
def small_dataset():
    return generate(SynthSpec(n_samples=40, fatigue_fraction=0.5, noise_sigma=0.5, seed=3))


@pytest.fixture
def random_dataset():
    rng = np.random.default_rng(11)
    samples = []
    for i in range(25):
        pts = rng.normal(200, 60, size=(68, 2))
        frame = LandmarkFrame(3 * i + 1, tuple(map(tuple, pts.tolist())), float(rng.uniform(0, 100)))
        samples.append(LabeledSample(frame, int(rng.integers(2))))
    return Dataset(tuple(samples), "random")


ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call ``criterion(name, detail)`` before asserting."""
    entry = {}

    def record(name, detail=""):
        entry["name"], entry["detail"] = name, detail

    yield record
    if entry:
        failed = request.node.rep_call.failed if hasattr(request.node, "rep_call") else True
        ACCEPTANCE_RESULTS.append((entry["name"], not failed, entry["detail"]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
