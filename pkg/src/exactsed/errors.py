"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`EvaluationError`, which is a :class:`ValueError`, so callers that
only care about "bad input" can catch that.
"""


class EvaluationError(ValueError):
    pass


# -- dataset / model validation ---------------------------------------------

class ValidationError(EvaluationError):
    """Input data violates a structural invariant; ``line`` is the 1-based
    input line when the error comes from a parser."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingClip(ValidationError):
    pass


class InconsistentClasses(ValidationError):
    pass


class UnknownLabel(ValidationError):
    pass


class NonMonotoneTimestamps(ValidationError):
    pass


class NonFiniteScore(ValidationError):
    pass


class EventOutOfBounds(ValidationError):
    pass


class ZeroLengthEvent(ValidationError):
    pass


class NegativeOnset(ValidationError):
    pass


class OffsetNotAfterOnset(ValidationError):
    pass


# -- file formats -------------------------------------------------------------

class ParseError(ValidationError):
    """Malformed input file."""


class BadHeader(ParseError):
    pass


class MalformedRow(ParseError):
    pass


class NonContiguousRows(ParseError):
    pass


class NonPositiveDuration(ParseError):
    pass


class DuplicateClip(ParseError):
    pass


# -- operations -----------------------------------------------------------------

class UnknownClass(EvaluationError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


class IndexOutOfRange(EvaluationError, IndexError):
    pass


class EvenWidth(EvaluationError):
    pass


class NonPositiveWidth(EvaluationError):
    pass


class NonPositiveSegmentLength(EvaluationError):
    pass


class NegativeCumulativeCount(EvaluationError):
    """Accumulated deltas went below zero. Always an engine bug."""


class NoGroundTruth(EvaluationError):
    pass


class ZeroCrossDuration(EvaluationError):
    pass


class EmptyCurve(EvaluationError):
    pass


class NoClasses(EvaluationError):
    pass


class UnsortedInput(EvaluationError):
    pass


class EmptyThresholdList(EvaluationError):
    pass
