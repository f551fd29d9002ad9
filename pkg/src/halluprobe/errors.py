"""Exception hierarchy shared across the toolkit.

Every failure mode that callers are expected to handle gets its own class so
tests and the CLI can match on type rather than message text.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all halluprobe errors."""


# --- corpus ingestion ---------------------------------------------------


class MissingFileError(ToolkitError):
    pass


class MalformedLineError(ToolkitError):
    def __init__(self, line_no: int, detail: str = "") -> None:
        self.line_no = line_no
        super().__init__(f"malformed manifest line {line_no}: {detail}".rstrip(": "))


class DuplicateIdError(ToolkitError):
    def __init__(self, utterance_id: str) -> None:
        self.utterance_id = utterance_id
        super().__init__(f"duplicate utterance id {utterance_id!r}")


class UnsupportedFormatError(ToolkitError):
    pass


class CorruptHeaderError(ToolkitError):
    pass


class EmptyAudioError(ToolkitError):
    pass


# --- metrics ------------------------------------------------------------


class EmptyReferenceError(ToolkitError):
    pass


class ZeroReferenceLengthError(ToolkitError):
    pass


class UnfittedVectorizerError(ToolkitError):
    pass


class InvalidSmoothingError(ToolkitError):
    pass


class EmptyTrainingTextError(ToolkitError):
    pass


class EmptySentenceError(ToolkitError):
    pass


class ProviderFailureError(ToolkitError):
    """External perplexity provider unreachable or broke protocol."""


# --- taxonomy -----------------------------------------------------------


class NonFiniteInputError(ToolkitError):
    pass


# --- perturbation -------------------------------------------------------


class EmptyWaveformError(ToolkitError):
    pass


# --- corruption ---------------------------------------------------------


class CorpusTooSmallError(ToolkitError):
    pass


class InvalidVolumeError(ToolkitError):
    pass


# --- backends and wire protocol ------------------------------------------


class BackendUnreachableError(ToolkitError):
    pass


class ProtocolViolationError(ToolkitError):
    pass


class BackendError(ToolkitError):
    """The backend answered, but with an error payload."""


class InvalidConfigError(ToolkitError):
    pass


# --- provenance ----------------------------------------------------------


class EmptyCollectionError(ToolkitError):
    pass
