"""Second-order gradient-boosted decision trees for binary classification.

Each round takes a quadratic approximation of the logistic loss around the
current margins (per-sample gradient ``g`` and Hessian ``h``), grows one
regression tree by exact greedy search on the regularized gain, and adds its
shrunken leaf weights to the margins.

Trees route a row left iff ``x[feature] < threshold``. Ties between equal
gains go to the lower feature index, then the lower threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    DegenerateLabels,
    InvalidConfig,
    IoError,
    ModelFormatError,
    NonFiniteFeature,
    SingularLeaf,
    VersionMismatch,
)

FORMAT_VERSION = 1
HESSIAN_FLOOR = 1e-16
TIE_RTOL = 1e-12
# Largest double below 1.0; keeps sigmoid output strictly inside (0, 1).
_P_MAX = math.nextafter(1.0, 0.0)
_P_MIN = 5e-324


@dataclass(frozen=True)
class TrainConfig:
    num_trees: int = 2000
    max_depth: int = 6
    reg_lambda: float = 1.0
    gamma: float = 0.0
    learning_rate: float = 0.1
    min_child_hessian: float = 1e-3
    base_score: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.num_trees, int) and self.num_trees >= 1):
            raise InvalidConfig(f"num_trees must be a positive integer, got {self.num_trees!r}")
        if not (isinstance(self.max_depth, int) and self.max_depth >= 1):
            raise InvalidConfig(f"max_depth must be a positive integer, got {self.max_depth!r}")
        if not (math.isfinite(self.reg_lambda) and self.reg_lambda >= 0):
            raise InvalidConfig(f"lambda must be >= 0, got {self.reg_lambda!r}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise InvalidConfig(f"gamma must be >= 0, got {self.gamma!r}")
        if not (0 < self.learning_rate <= 1):
            raise InvalidConfig(f"learning_rate must be in (0, 1], got {self.learning_rate!r}")
        if not (math.isfinite(self.min_child_hessian) and self.min_child_hessian >= 0):
            raise InvalidConfig(f"min_child_hessian must be >= 0, got {self.min_child_hessian!r}")
        if not (0 < self.base_score < 1):
            raise InvalidConfig(f"base_score must be in (0, 1), got {self.base_score!r}")


@dataclass(frozen=True)
class Node:
    """A split (``feature_index >= 0``) or a leaf (``feature_index == -1``)."""

    feature_index: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    weight: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature_index < 0


@dataclass(frozen=True)
class Tree:
    nodes: tuple[Node, ...]

    @property
    def n_leaves(self) -> int:
        return sum(n.is_leaf for n in self.nodes)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf weight reached by every row of ``X``."""
        feat = np.array([n.feature_index for n in self.nodes])
        thr = np.array([n.threshold for n in self.nodes])
        left = np.array([n.left for n in self.nodes])
        right = np.array([n.right for n in self.nodes])
        weight = np.array([n.weight for n in self.nodes])

        idx = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = feat[idx] >= 0
        while active.any():
            a = rows[active]
            node = idx[a]
            go_left = X[a, feat[node]] < thr[node]
            idx[a] = np.where(go_left, left[node], right[node])
            active = feat[idx] >= 0
        return weight[idx]


@dataclass(frozen=True)
class Ensemble:
    trees: tuple[Tree, ...]
    base_margin: float
    learning_rate: float
    feature_names: tuple[str, ...]
    config: TrainConfig = field(default_factory=TrainConfig)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


@dataclass(frozen=True)
class SplitDecision:
    feature_index: int
    threshold: float
    gain: float


def sigmoid(margin):
    """Logistic function, overflow-free, clipped to the open interval (0, 1)."""
    m = np.asarray(margin, dtype=np.float64)
    e = np.exp(-np.abs(m))
    p = np.where(m >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    p = np.clip(p, _P_MIN, _P_MAX)
    return float(p) if p.ndim == 0 else p


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def logistic_grad_hess(margin, label):
    """First and second derivative of the logistic loss with respect to the margin."""
    p = sigmoid(margin)
    g = p - np.asarray(label, dtype=np.float64)
    h = np.maximum(p * (1.0 - p), HESSIAN_FLOOR)
    if np.ndim(g) == 0:
        return float(g), float(h)
    return g, h


def logloss(margins: np.ndarray, labels: np.ndarray) -> float:
    """Mean logistic loss, computed from margins without forming probabilities."""
    m = np.asarray(margins, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    # softplus(m) - y*m
    return float(np.mean(np.logaddexp(0.0, m) - y * m))


def leaf_weight(G: float, H: float, reg_lambda: float) -> float:
    denom = H + reg_lambda
    if denom == 0:
        raise SingularLeaf(f"H + lambda == 0 (H={H}, lambda={reg_lambda})")
    return -G / denom


def split_gain(G_L, H_L, G_R, H_R, reg_lambda, gamma):
    """Reduction of the regularized quadratic objective from splitting one leaf in two."""
    return 0.5 * (
        G_L * G_L / (H_L + reg_lambda)
        + G_R * G_R / (H_R + reg_lambda)
        - (G_L + G_R) * (G_L + G_R) / (H_L + H_R + reg_lambda)
    ) - gamma


def midpoint(lo: float, hi: float) -> float:
    """Threshold between two distinct sorted values that routes ``lo`` left and ``hi`` right."""
    mid = (lo + hi) / 2.0
    # Adjacent doubles can round the midpoint down onto lo.
    return hi if mid <= lo else mid


def best_split(
    rows: np.ndarray,
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    config: TrainConfig,
) -> SplitDecision | None:
    """Exact greedy search over every feature and every midpoint between distinct values."""
    rows = np.asarray(rows)
    if len(rows) < 2:
        return None
    g = grad[rows]
    h = hess[rows]
    best: SplitDecision | None = None
    for f in range(X.shape[1]):
        values = X[rows, f]
        order = np.argsort(values, kind="stable")
        xs = values[order]
        distinct = xs[1:] > xs[:-1]
        if not distinct.any():
            continue
        cg = np.cumsum(g[order])
        ch = np.cumsum(h[order])
        G_L, H_L = cg[:-1], ch[:-1]
        G_R, H_R = cg[-1] - G_L, ch[-1] - H_L
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = split_gain(G_L, H_L, G_R, H_R, config.reg_lambda, config.gamma)
        ok = (
            distinct
            & (H_L >= config.min_child_hessian)
            & (H_R >= config.min_child_hessian)
            & (H_L + config.reg_lambda > 0)
            & (H_R + config.reg_lambda > 0)
            & (gains > 0)
        )
        if not ok.any():
            continue
        cand = np.where(ok, gains, -np.inf)
        top = cand.max()
        i = int(np.argmax(cand >= top - _tie_band(top)))  # lowest threshold among ties
        if best is None or cand[i] > best.gain + _tie_band(best.gain):
            best = SplitDecision(f, midpoint(float(xs[i]), float(xs[i + 1])), float(cand[i]))
    return best


def _tie_band(gain: float) -> float:
    # Gains of the same partition reached through different sort orders differ
    # only by summation rounding; treat them as equal.
    return TIE_RTOL * max(1.0, abs(gain))


def _check_matrix(X: np.ndarray, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ArityMismatch(f"expected a 2-D feature matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ArityMismatch(f"model expects {n_features} features, got {X.shape[1]}")
    if not np.isfinite(X).all():
        raise NonFiniteFeature("feature matrix contains NaN or infinity")
    return X


class _TreeBuilder:
    def __init__(self, X, grad, hess, config: TrainConfig):
        self.X, self.grad, self.hess, self.config = X, grad, hess, config
        self.nodes: list[dict] = []
        self.leaf_of_row = np.empty(len(X), dtype=np.int64)
        self.gains: list[float] = []

    def grow(self, rows: np.ndarray, depth: int) -> int:
        node_id = len(self.nodes)
        self.nodes.append({})
        split = None
        if depth < self.config.max_depth:
            split = best_split(rows, self.X, self.grad, self.hess, self.config)
        if split is None:
            w = leaf_weight(
                float(self.grad[rows].sum()), float(self.hess[rows].sum()), self.config.reg_lambda
            )
            self.nodes[node_id] = {"weight": w}
            self.leaf_of_row[rows] = node_id
            return node_id
        self.gains.append(split.gain)
        go_left = self.X[rows, split.feature_index] < split.threshold
        left = self.grow(rows[go_left], depth + 1)
        right = self.grow(rows[~go_left], depth + 1)
        self.nodes[node_id] = {
            "feature_index": split.feature_index,
            "threshold": split.threshold,
            "left": left,
            "right": right,
        }
        return node_id

    def tree(self) -> Tree:
        return Tree(tuple(Node(**n) for n in self.nodes))


def grow_tree(X: np.ndarray, grad: np.ndarray, hess: np.ndarray, config: TrainConfig):
    """Grow one tree depth-first. Returns (tree, per-row leaf output, accepted split gains)."""
    builder = _TreeBuilder(X, grad, hess, config)
    builder.grow(np.arange(len(X)), 0)
    tree = builder.tree()
    weights = np.array([n.weight for n in tree.nodes])
    return tree, weights[builder.leaf_of_row], builder.gains


def train(
    X,
    y,
    config: TrainConfig | None = None,
    feature_names: Sequence[str] | None = None,
    callback=None,
) -> Ensemble:
    """Fit ``config.num_trees`` boosting rounds.

    ``callback(round_index, margins)`` is invoked after every round with the
    updated training margins.
    """
    config = config or TrainConfig()
    X = _check_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    if len(y) != len(X):
        raise ArityMismatch(f"{len(X)} feature rows but {len(y)} labels")
    if len(X) < 2 or not (np.any(y == 1) and np.any(y == 0)):
        raise DegenerateLabels("training needs at least two samples covering both classes")
    if not np.all((y == 0) | (y == 1)):
        raise DegenerateLabels("labels must be 0 or 1")
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(X.shape[1])]
    if len(feature_names) != X.shape[1]:
        raise ArityMismatch(f"{len(feature_names)} feature names for {X.shape[1]} columns")

    base_margin = logit(config.base_score)
    margins = np.full(len(X), base_margin)
    trees = []
    for t in range(config.num_trees):
        grad, hess = logistic_grad_hess(margins, y)
        tree, out, _ = grow_tree(X, grad, hess, config)
        margins = margins + config.learning_rate * out
        trees.append(tree)
        if callback is not None:
            callback(t, margins)
    return Ensemble(
        trees=tuple(trees),
        base_margin=base_margin,
        learning_rate=config.learning_rate,
        feature_names=tuple(feature_names),
        config=config,
    )


def predict_margin(ensemble: Ensemble, X) -> np.ndarray:
    """Margins accumulated tree by tree, in the same order as training."""
    X = _check_matrix(X, ensemble.n_features)
    margins = np.full(len(X), ensemble.base_margin)
    for tree in ensemble.trees:
        margins = margins + ensemble.learning_rate * tree.apply(X)
    return margins


def predict_proba(ensemble: Ensemble, X) -> np.ndarray:
    return np.atleast_1d(sigmoid(predict_margin(ensemble, X)))


# Serialization. Every float is stored as hexadecimal text so loading is bit-exact.


def _hex(x: float) -> str:
    return float(x).hex()


def _unhex(s) -> float:
    if not isinstance(s, str):
        raise ModelFormatError(f"expected hex-float string, got {s!r}")
    try:
        return float.fromhex(s)
    except ValueError:
        raise ModelFormatError(f"bad hex-float {s!r}") from None


_FLOAT_CONFIG = ("reg_lambda", "gamma", "learning_rate", "min_child_hessian", "base_score")


def model_to_dict(ensemble: Ensemble) -> dict:
    cfg = asdict(ensemble.config)
    for k in _FLOAT_CONFIG:
        cfg[k] = _hex(cfg[k])
    trees = []
    for tree in ensemble.trees:
        nodes = []
        for node_id, n in enumerate(tree.nodes):
            if n.is_leaf:
                nodes.append({"node_id": node_id, "kind": "leaf", "weight": _hex(n.weight)})
            else:
                nodes.append(
                    {
                        "node_id": node_id,
                        "kind": "split",
                        "feature_index": n.feature_index,
                        "threshold": _hex(n.threshold),
                        "left_id": n.left,
                        "right_id": n.right,
                    }
                )
        trees.append(nodes)
    return {
        "format_version": FORMAT_VERSION,
        "objective": "binary:logistic",
        "feature_names": list(ensemble.feature_names),
        "base_margin": _hex(ensemble.base_margin),
        "learning_rate": _hex(ensemble.learning_rate),
        "config": cfg,
        "trees": trees,
    }


def _parse_tree(raw, n_features: int) -> Tree:
    if not isinstance(raw, list) or not raw:
        raise ModelFormatError("tree must be a non-empty node list")
    nodes = []
    for pos, r in enumerate(raw):
        if not isinstance(r, dict) or r.get("node_id") != pos:
            raise ModelFormatError(f"node {pos} missing or out of order")
        kind = r.get("kind")
        if kind == "leaf":
            nodes.append(Node(weight=_unhex(r.get("weight"))))
        elif kind == "split":
            f, lid, rid = r.get("feature_index"), r.get("left_id"), r.get("right_id")
            for v in (f, lid, rid):
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ModelFormatError(f"node {pos}: non-integer index {v!r}")
            if not 0 <= f < n_features:
                raise ModelFormatError(f"node {pos}: feature_index {f} out of range")
            if not (pos < lid < len(raw) and pos < rid < len(raw)) or lid == rid:
                raise ModelFormatError(f"node {pos}: bad child ids {lid}, {rid}")
            thr = _unhex(r.get("threshold"))
            if not math.isfinite(thr):
                raise ModelFormatError(f"node {pos}: non-finite threshold")
            nodes.append(Node(feature_index=f, threshold=thr, left=lid, right=rid))
        else:
            raise ModelFormatError(f"node {pos}: unknown kind {kind!r}")
    return Tree(tuple(nodes))


def model_from_dict(doc: dict) -> Ensemble:
    if not isinstance(doc, dict):
        raise ModelFormatError("top level is not an object")
    if "format_version" not in doc:
        raise ModelFormatError("missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionMismatch(
            f"model format_version {doc['format_version']!r} is not supported (expected {FORMAT_VERSION})"
        )
    try:
        names = doc["feature_names"]
        cfg_raw = dict(doc["config"])
        raw_trees = doc["trees"]
        base_margin = _unhex(doc["base_margin"])
        learning_rate = _unhex(doc["learning_rate"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"missing or malformed field: {exc}") from None
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names) or not names:
        raise ModelFormatError("feature_names must be a non-empty list of strings")
    for k in _FLOAT_CONFIG:
        cfg_raw[k] = _unhex(cfg_raw.get(k))
    try:
        config = TrainConfig(**cfg_raw)
    except TypeError as exc:
        raise ModelFormatError(f"bad config: {exc}") from None
    except InvalidConfig as exc:
        raise ModelFormatError(f"bad config: {exc}") from None
    if not isinstance(raw_trees, list) or not raw_trees:
        raise ModelFormatError("trees must be a non-empty list")
    trees = tuple(_parse_tree(t, len(names)) for t in raw_trees)
    return Ensemble(trees, base_margin, learning_rate, tuple(names), config)


def dumps_model(ensemble: Ensemble) -> str:
    return json.dumps(model_to_dict(ensemble), indent=1, sort_keys=True) + "\n"


def save_model(ensemble: Ensemble, path: str | Path) -> None:
    try:
        Path(path).write_text(dumps_model(ensemble), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_model(path: str | Path) -> Ensemble:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON ({exc})") from None
    return model_from_dict(doc)
