"""Exception hierarchy shared by the engine.

Every error carries an ``exit_code`` used by the CLI: 2 for schema or
validation problems, 3 for missing inputs.
"""

from __future__ import annotations


class EngineError(Exception):
    exit_code = 2


class ParseError(EngineError):
    """A file line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SchemaError(EngineError):
    """Payload shape or value violates the declared task/type contract."""


class DuplicateId(EngineError):
    def __init__(self, utt_id: str):
        super().__init__(f"duplicate utterance id {utt_id!r}")
        self.utt_id = utt_id


class BadMagic(EngineError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(EngineError):
    """File carries a format version this reader does not understand."""


class DimensionMismatch(EngineError):
    """Declared dimensions disagree with the payload."""


class NonFiniteValue(EngineError):
    """NaN or infinity found where only finite values are allowed."""


class LayerCountMismatch(EngineError):
    """Aggregation weights do not match the number of layers."""


class EmptyInput(EngineError):
    """Operation requires at least one element."""


class TargetTooLong(EngineError):
    """No frame path of the given length can collapse to the target."""


class OverlappingEntities(EngineError):
    """Entity token ranges overlap."""


class RangeOutOfBounds(EngineError):
    """Entity token range falls outside the transcript."""


class ReservedToken(EngineError):
    """Input text contains a reserved marker token."""


class AnswerOutOfBounds(EngineError):
    """Answer token range is empty or outside the document."""


class EmptyReference(EngineError):
    """Reference sequence must be non-empty."""


class UnknownClass(EngineError):
    """Label outside the configured class vocabulary."""


class EmptyDevSet(EngineError):
    """Offset tuning requires a non-empty dev set."""


class DimMismatch(EngineError):
    """Probe parameter shapes disagree with the feature dimensions."""


class MissingFeatures(EngineError):
    exit_code = 3

    def __init__(self, utt_id: str):
        super().__init__(f"no feature file for utterance {utt_id!r}")
        self.utt_id = utt_id


class MissingHypothesis(EngineError):
    exit_code = 3

    def __init__(self, utt_id: str):
        super().__init__(f"no hypothesis for utterance {utt_id!r}")
        self.utt_id = utt_id


class MissingInput(EngineError):
    """A required input file or directory does not exist."""

    exit_code = 3


class ValidationError(EngineError):
    """Submission fails leaderboard validation."""


class DuplicateSubmission(EngineError):
    def __init__(self, key: tuple):
        super().__init__(
            f"submission for {key} already on the board (use force to replace)"
        )
        self.key = key


class EmptyBoard(EngineError):
    """No submissions match the requested board slice."""
