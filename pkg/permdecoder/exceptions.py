from enum import IntEnum
from typing import Optional


class ExitStatus(IntEnum):
    OK = 0
    INTERNAL_ERROR = 1
    INPUT_ERROR = 2
    NON_CONVERGENCE = 3
    PARTIAL_FAILURE = 4


class DecoderException(Exception):
    """
    Base error for every stage of the decoder.

    Carries an exit status the CLI hands back to the shell, and an optional
    pipeline stage name once the error has crossed a stage boundary.
    """

    default_status = ExitStatus.INPUT_ERROR

    def __init__(self, detail: str, status_code: Optional[ExitStatus] = None, stage: Optional[str] = None):
        self.detail = detail
        self.status_code = status_code if status_code is not None else self.default_status
        self.stage = stage
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.detail}"
        return self.detail

    def with_stage(self, stage: str) -> "DecoderException":
        """Annotate with the failing stage; keeps the innermost annotation."""
        if self.stage is None:
            self.stage = stage
            self.args = (str(self),)
        return self


# grid
class SidecarError(DecoderException):
    pass


class SizeMismatch(DecoderException):
    pass


class NonFiniteValues(DecoderException):
    pass


class IoFailure(DecoderException):
    pass


class EmptySelection(DecoderException):
    pass


class MaskMismatch(DecoderException):
    pass


# geometry
class NonPositivePermeability(DecoderException):
    pass


class PorosityNotSpecified(DecoderException):
    pass


# segmenter
class CoordinateOutOfRange(DecoderException):
    pass


class InvalidSeeds(DecoderException):
    pass


class MissingClassSeeds(InvalidSeeds):
    pass


class DegenerateFeature(DecoderException):
    pass


class NoUsableFeatures(DegenerateFeature):
    pass


# calib
class TooFewPoints(DecoderException):
    pass


class DuplicateIntensity(DecoderException):
    pass


class NonMonotone(DecoderException):
    pass


# pim
class IncompleteTable(DecoderException):
    pass


# micromodel
class IncompatibleVoxelSize(DecoderException):
    pass


class NonConvergence(DecoderException):
    default_status = ExitStatus.NON_CONVERGENCE


def wrap_unexpected(e: Exception, action: str) -> DecoderException:
    """
    Pass DecoderException through untouched, turn anything else into an
    internal error that names what was being attempted.
    """
    if isinstance(e, DecoderException):
        return e
    return DecoderException(f"Error {action}: {str(e)}", status_code=ExitStatus.INTERNAL_ERROR)
