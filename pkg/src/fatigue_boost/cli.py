"""Command-line entry point: synth, features, events, train, evaluate, predict, stream, replay.

Exit codes: 0 success, 1 domain error, 2 usage error.
Reports are JSON on stdout. Commands that write a file also write
``<file>.manifest.json``; ``replay`` re-runs a manifest.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boosted_trees import (
    Ensemble,
    TrainConfig,
    dumps_model,
    load_model,
    predict_proba,
    train,
)
from .errors import ArityMismatch, FatigueError, IoError
from .evaluation import ConfusionMatrix, SplitSpec, confusion, report, split_dataset
from .facial_features import (
    DEFAULT_EAR_THRESHOLD,
    DEFAULT_MAR_THRESHOLD,
    DEFAULT_MIN_EVENT_FRAMES,
    FEATURE_COLUMNS,
    detect_events,
    extract_features,
)
from .landmark_io import Dataset, infer_format, load_dataset, write_dataset
from .stream_fatigue import aggregate, score_stream
from .synth_data import SynthSpec, generate


class FeatureTable:
    """Per-frame feature rows, read either from landmark files or from a feature CSV."""

    def __init__(self, frame_ids, columns: dict[str, list[float]], labels=None):
        self.frame_ids = list(frame_ids)
        self.columns = columns
        self.labels = labels

    def matrix(self, names) -> np.ndarray:
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise ArityMismatch(
                f"model expects features {list(names)}, data provides {sorted(self.columns)}"
            )
        return np.column_stack([np.asarray(self.columns[n], dtype=np.float64) for n in names])

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "FeatureTable":
        vecs = [extract_features(f) for f in ds.frames]
        cols = {name: [getattr(v, name) for v in vecs] for name in FEATURE_COLUMNS}
        return cls([f.frame_id for f in ds.frames], cols, ds.labels if ds.is_labeled else None)


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _is_feature_csv(path: Path, fmt: str) -> bool:
    if fmt != "csv":
        return False
    first = _read_text(path).split("\n", 1)[0]
    header = [h.strip() for h in first.split(",")]
    return "x0" not in header and any(c in header for c in FEATURE_COLUMNS)


def load_features(path: str, fmt: str | None = None) -> FeatureTable:
    p = Path(path)
    fmt = infer_format(p, fmt)
    if not _is_feature_csv(p, fmt):
        return FeatureTable.from_dataset(load_dataset(p, fmt))
    reader = csv.DictReader(io.StringIO(_read_text(p)))
    ids, labels = [], []
    cols: dict[str, list[float]] = {c: [] for c in reader.fieldnames if c in FEATURE_COLUMNS}
    has_label = "label" in reader.fieldnames
    for lineno, row in enumerate(reader, start=2):
        try:
            ids.append(int(row["frame_id"]))
            for c in cols:
                cols[c].append(float(row[c]))
            if has_label:
                labels.append(int(row["label"]))
        except (TypeError, ValueError, KeyError) as exc:
            raise FatigueError(f"{p} line {lineno}: {exc}") from None
    if not ids:
        raise FatigueError(f"{p} contains no rows")
    return FeatureTable(ids, cols, labels if has_label else None)


def _fmt(x: float) -> str:
    return repr(float(x))


def _emit_csv(header, rows, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _emit_text(buf.getvalue(), out)


def _emit_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {out}: {exc}") from exc


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# manifests


def _resolved_argv(parser: argparse.ArgumentParser, args: argparse.Namespace) -> list[str]:
    argv = [args.command]
    for action in parser._actions:
        if not action.option_strings or action.dest in ("help",):
            continue
        value = getattr(args, action.dest, None)
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(flag)
        elif value is not None:
            argv += [flag, ",".join(map(str, value)) if isinstance(value, (list, tuple)) else str(value)]
    return argv


def build_manifest(args: argparse.Namespace) -> dict:
    sub = _SUBPARSERS[args.command]
    config = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("command", "func")
    }
    return {
        "command": args.command,
        "config": config,
        "argv": _resolved_argv(sub, args),
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
    }


def _write_manifest(args: argparse.Namespace, out: str) -> None:
    _emit_text(json.dumps(build_manifest(args), indent=2, sort_keys=True) + "\n", out + ".manifest.json")


# commands


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_samples=args.n,
        fatigue_fraction=args.fatigue_fraction,
        noise_sigma=args.noise,
        seed=args.seed,
        fps=args.fps,
    )
    ds = generate(spec)
    write_dataset(ds, args.out, args.format)
    _write_manifest(args, args.out)
    _print_json({"out": args.out, "samples": len(ds), "fatigued": sum(ds.labels)})
    return 0


def cmd_features(args) -> int:
    ds = load_dataset(args.data, args.format)
    header = ["frame_id"] + (["label"] if ds.is_labeled else []) + list(FEATURE_COLUMNS)
    rows = []
    for s in ds.samples:
        v = extract_features(s.frame)
        lead = [s.frame.frame_id] + ([s.label] if ds.is_labeled else [])
        rows.append(lead + [_fmt(x) for x in v.as_tuple()])
    _emit_csv(header, rows, args.out)
    if args.out:
        _write_manifest(args, args.out)
    return 0


def cmd_events(args) -> int:
    ds = load_dataset(args.data, args.format)
    ev = detect_events(
        [extract_features(f) for f in ds.frames],
        ear_threshold=args.ear_threshold,
        mar_threshold=args.mar_threshold,
        min_event_frames=args.min_event_frames,
        fps=args.fps,
    )
    _print_json(
        {
            "frames": len(ds),
            "blink_count": ev.blink_count,
            "blink_frequency_per_min": ev.blink_frequency_per_min,
            "yawn_count": ev.yawn_count,
            "manifest": build_manifest(args),
        }
    )
    return 0


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(
        num_trees=args.trees,
        max_depth=args.depth,
        reg_lambda=args.reg_lambda,
        gamma=args.gamma,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    config = _config_from_args(args)
    names = list(args.features)
    out: dict = {"model": args.out}
    if args.eval_split:
        ds = load_dataset(args.data, args.format)
        train_ds, test_ds = split_dataset(ds, SplitSpec(args.train_fraction, args.seed))
        train_tab = FeatureTable.from_dataset(train_ds)
        test_tab = FeatureTable.from_dataset(test_ds)
    else:
        train_tab, test_tab = load_features(args.data, args.format), None
    if train_tab.labels is None:
        raise FatigueError("training data has no label column")
    model = train(train_tab.matrix(names), train_tab.labels, config, names)
    _emit_text(dumps_model(model), args.out)
    _write_manifest(args, args.out)
    out["n_train"] = len(train_tab.frame_ids)
    if test_tab is not None:
        probs = predict_proba(model, test_tab.matrix(names))
        out["n_test"] = len(test_tab.frame_ids)
        out["test"] = report(confusion(probs, test_tab.labels, args.threshold))
    _print_json(out)
    return 0


def cmd_evaluate(args) -> int:
    if args.from_counts is not None:
        tp, fn, fp, tn = args.from_counts
        cm = ConfusionMatrix(tp=tp, fn_=fn, fp=fp, tn=tn)
    else:
        if not (args.model and args.data):
            raise _UsageError("evaluate needs --model and --data, or --from-counts")
        model = load_model(args.model)
        tab = load_features(args.data, args.format)
        if tab.labels is None:
            raise FatigueError("evaluation data has no label column")
        cm = confusion(predict_proba(model, tab.matrix(model.feature_names)), tab.labels, args.threshold)
    _print_json({**report(cm), "manifest": build_manifest(args)})
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    tab = load_features(args.data, args.format)
    probs = predict_proba(model, tab.matrix(model.feature_names))
    _emit_csv(["frame_id", "probability"], [[i, _fmt(p)] for i, p in zip(tab.frame_ids, probs)], args.out)
    if args.out:
        _write_manifest(args, args.out)
    return 0


def cmd_stream(args) -> int:
    model: Ensemble = load_model(args.model)
    p = Path(args.data)
    fmt = infer_format(p, args.format)
    if _is_feature_csv(p, fmt):
        tab = load_features(args.data, fmt)
        probs = predict_proba(model, tab.matrix(model.feature_names))
        verdict = aggregate(probs.tolist(), args.threshold, tab.frame_ids)
    else:
        verdict = score_stream(model, load_dataset(p, fmt).frames, args.threshold)
    _print_json({**verdict.as_dict(), "manifest": build_manifest(args)})
    return 0


def cmd_replay(args) -> int:
    try:
        manifest = json.loads(_read_text(Path(args.manifest)))
        argv = manifest["argv"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FatigueError(f"bad manifest {args.manifest}: {exc}") from None
    return main(argv)


class _UsageError(Exception):
    pass


# argument parsing


def _counts(text: str) -> tuple[int, int, int, int]:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected four integers TP,FN,FP,TN, got {text!r}") from None
    if len(parts) != 4 or min(parts) < 0:
        raise argparse.ArgumentTypeError(f"expected four non-negative integers TP,FN,FP,TN, got {text!r}")
    return tuple(parts)  # type: ignore[return-value]


def _names(text: str) -> list[str]:
    names = [n.strip() for n in text.split(",") if n.strip()]
    bad = [n for n in names if n not in FEATURE_COLUMNS]
    if not names or bad:
        raise argparse.ArgumentTypeError(f"features must be a subset of {','.join(FEATURE_COLUMNS)}")
    return names


_SUBPARSERS: dict[str, argparse.ArgumentParser] = {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fatigue-boost", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        _SUBPARSERS[name] = p
        return p

    def data_args(p, required=True):
        p.add_argument("--data", required=required, help="landmark CSV/JSONL or feature CSV")
        p.add_argument("--format", choices=("csv", "jsonl"), help="input format (default: from extension)")

    p = add("synth", cmd_synth, "generate a synthetic labeled landmark dataset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--fatigue-fraction", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.5, help="landmark noise sigma in pixels")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--out", required=True)

    p = add("features", cmd_features, "per-frame EAR/MAR feature CSV")
    data_args(p)
    p.add_argument("--out")

    p = add("events", cmd_events, "blink and yawn counts over a frame sequence")
    data_args(p)
    p.add_argument("--ear-threshold", type=float, default=DEFAULT_EAR_THRESHOLD)
    p.add_argument("--mar-threshold", type=float, default=DEFAULT_MAR_THRESHOLD)
    p.add_argument("--min-event-frames", type=int, default=DEFAULT_MIN_EVENT_FRAMES)
    p.add_argument("--fps", type=float, default=30.0)

    p = add("train", cmd_train, "train a boosted-tree fatigue classifier")
    data_args(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--trees", type=int, default=2000)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--lambda", dest="reg_lambda", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--features", type=_names, default=["ear", "mar"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-split", action="store_true", help="hold out a test split and report metrics")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--threshold", type=float, default=0.5)

    p = add("evaluate", cmd_evaluate, "confusion counts, accuracy and sensitivity")
    data_args(p, required=False)
    p.add_argument("--model")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--from-counts", type=_counts, metavar="TP,FN,FP,TN")

    p = add("predict", cmd_predict, "per-frame fatigue probabilities")
    data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out")

    p = add("stream", cmd_stream, "stream-level verdict from the mean frame probability")
    data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=0.5)

    p = add("replay", cmd_replay, "re-run a command from its manifest")
    p.add_argument("manifest")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        _SUBPARSERS[args.command].print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FatigueError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
