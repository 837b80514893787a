"""Exception hierarchy shared by every sfmval module."""


class SfmValError(Exception):
    """Base class; the CLI maps these to exit code 1."""


# geometry
class ZeroQuaternion(SfmValError):
    pass


class NotARotation(SfmValError):
    pass


# trajectory io
class MalformedPoseLine(SfmValError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DanglingPoseLine(MalformedPoseLine):
    pass


class MalformedRecord(MalformedPoseLine):
    pass


class DuplicateImageName(SfmValError):
    pass


class DuplicateFrameKey(SfmValError):
    pass


class NonMonotonicFrames(SfmValError):
    pass


class EmptyTrajectory(SfmValError):
    pass


class NoDigitsInName(SfmValError):
    pass


class SchemaVersionMismatch(SfmValError):
    pass


class MalformedDocument(MalformedPoseLine):
    pass


class NoOverlap(SfmValError):
    pass


class LengthMismatch(SfmValError):
    pass


# alignment
class NotSymmetric(SfmValError):
    pass


class NoConvergence(SfmValError):
    pass


class DegenerateGeometry(SfmValError):
    pass


class TooFewPoints(SfmValError):
    pass


# metrics
class EmptyInput(SfmValError):
    pass


# geotag / exif
class LatitudeOutOfRange(SfmValError):
    pass


class OutOfRange(SfmValError):
    pass


class NotAJpeg(SfmValError):
    pass


class CorruptExifSegment(SfmValError):
    pass


class SegmentOverflow(SfmValError):
    pass


# synth
class InvalidParams(SfmValError):
    pass
