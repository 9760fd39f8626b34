"""Exception hierarchy.

Every error raised on bad input derives from :class:`FatigueError`; the CLI maps
those to exit code 1.
"""

from __future__ import annotations


class FatigueError(Exception):
    """Base class for all domain errors."""


# landmark_io
class IoError(FatigueError):
    pass


class RecordError(FatigueError):
    """A single record failed validation."""


class FieldCountMismatch(RecordError):
    pass


class NonNumericField(RecordError):
    pass


class NonFiniteCoordinate(RecordError):
    pass


class InvalidLabel(RecordError):
    pass


class ParseError(FatigueError):
    def __init__(self, message: str, line: int, row: int | None = None):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.row = row


class EmptyDataset(FatigueError):
    pass


class InvalidDataset(FatigueError):
    pass


# facial_features
class DegenerateHorizontal(FatigueError):
    def __init__(self, message: str = "horizontal landmark pair coincides", region: str | None = None):
        super().__init__(f"{region}: {message}" if region else message)
        self.region = region


class EmptySeries(FatigueError):
    pass


class NonPositiveFps(FatigueError):
    pass


# boosted_trees
class InvalidConfig(FatigueError):
    pass


class SingularLeaf(FatigueError):
    pass


class DegenerateLabels(FatigueError):
    pass


class NonFiniteFeature(FatigueError):
    pass


class ArityMismatch(FatigueError):
    pass


class ModelFormatError(FatigueError):
    def __init__(self, detail: str):
        super().__init__(f"malformed model file: {detail}")
        self.detail = detail


class VersionMismatch(FatigueError):
    pass


# evaluation
class EmptyPartition(FatigueError):
    pass


class LengthMismatch(FatigueError):
    pass


class InvalidProbability(FatigueError):
    pass


class EmptyMatrix(FatigueError):
    pass


class NoPositives(FatigueError):
    pass


# stream_fatigue
class EmptyStream(FatigueError):
    pass


class AllFramesDegenerate(FatigueError):
    pass


# synth_data
class InvalidSpec(FatigueError):
    pass
