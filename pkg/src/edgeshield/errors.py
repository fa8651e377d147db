"""Exception hierarchy shared by all edgeshield modules."""

from __future__ import annotations


class EdgeShieldError(Exception):
    """Base class for every error raised by this package."""


# --- flow record validation ---------------------------------------------


class MissingField(EdgeShieldError):
    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


class OutOfRange(EdgeShieldError):
    def __init__(self, field: str, value: object):
        super().__init__(f"field {field} out of range: {value!r}")
        self.field = field
        self.value = value


class MalformedNumber(EdgeShieldError):
    def __init__(self, field: str, value: object = None):
        super().__init__(f"field {field} is not a well-formed number: {value!r}")
        self.field = field
        self.value = value


class UnknownClass(EdgeShieldError):
    def __init__(self, key: object):
        super().__init__(f"unknown traffic class: {key!r}")
        self.key = key


class EmptyStream(EdgeShieldError):
    """Raised when an operation requires at least one record."""


# --- prompt codec --------------------------------------------------------


class GrammarMismatch(EdgeShieldError):
    """Prompt text does not conform to the wire grammar.

    ``position`` is the offset of the first offending character.
    """

    def __init__(self, position: int, expected: str = ""):
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"prompt grammar mismatch at offset {position}{detail}")
        self.position = position
        self.expected = expected


# --- dataset pipeline -----------------------------------------------------


class SchemaMismatch(EdgeShieldError):
    """Input file header or structure does not match the flow schema."""


class LabelUnknown(EdgeShieldError):
    def __init__(self, row: int, value: object):
        super().__init__(f"row {row}: label {value!r} is not in the taxonomy")
        self.row = row
        self.value = value


class IoFailure(EdgeShieldError):
    """Underlying I/O failed while reading or writing a dataset."""


class TooFewRecords(EdgeShieldError):
    """Dataset too small for the requested split."""


class BadProportions(EdgeShieldError):
    """Synthesis proportions do not form a probability distribution."""


class TooManyMalformedRows(EdgeShieldError):
    """Malformed-row fraction exceeded the configured abort threshold."""


# --- detector -------------------------------------------------------------


class NonFiniteInput(EdgeShieldError):
    """A logit vector contained NaN or infinity."""


class EmptyMatrix(EdgeShieldError):
    """Metrics requested on a confusion matrix with zero total count."""


class BackendUnavailable(EdgeShieldError):
    """The classifier backend cannot be reached or did not respond."""


class BackendMalformedOutput(EdgeShieldError):
    """The classifier backend returned output violating its contract."""


# --- prevention engine ----------------------------------------------------


class MissingSourceIp(EdgeShieldError):
    def __init__(self, index: int | None = None):
        where = f" at record index {index}" if index is not None else ""
        super().__init__(f"flow record has no source IP{where}")
        self.index = index


class EmptyWindow(EdgeShieldError):
    """Attack characterization requires a non-empty detection window."""


# --- simulation harness ----------------------------------------------------


class ConfigInvalid(EdgeShieldError):
    """Scenario configuration failed validation."""


class OutOfOrderEvents(EdgeShieldError):
    def __init__(self, node: str, index: int):
        super().__init__(f"telemetry events for node {node} go backwards at index {index}")
        self.node = node
        self.index = index
