"""Canonical flow record model and validation.

A :class:`FlowRecord` is one summarized network connection, the unit that
gets classified and enforced against.  ``duration`` is kept as the original
decimal string so downstream text rendering is byte-exact; everything else
numeric is coerced to int/float on validation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Mapping

from .errors import EmptyStream, MalformedNumber, MissingField, OutOfRange

# The fields rendered into prompt text, in render order.
PROMPT_FIELDS = (
    "src_port",
    "dst_port",
    "protocol",
    "duration",
    "service",
    "orig_bytes",
    "resp_bytes",
    "missed_bytes",
    "orig_ip_bytes",
    "resp_ip_bytes",
    "orig_pkts",
    "resp_pkts",
    "conn_state",
)

_COUNTER_FIELDS = (
    "orig_bytes",
    "resp_bytes",
    "missed_bytes",
    "orig_ip_bytes",
    "resp_ip_bytes",
    "orig_pkts",
    "resp_pkts",
)

_DURATION_RE = re.compile(r"[0-9]+(\.[0-9]+)?\Z")
_INT_RE = re.compile(r"[+-]?[0-9]+\Z")
# Token alphabets are restricted so prompt text stays unambiguous: no
# whitespace, no commas.
_PROTOCOL_RE = re.compile(r"[A-Za-z0-9_-]+\Z")
_SERVICE_RE = re.compile(r"[A-Za-z0-9._+-]+\Z")
_CONN_STATE_RE = re.compile(r"[A-Za-z0-9_-]+\Z")

MAX_PORT = 65535


@dataclass(frozen=True, slots=True)
class FlowRecord:
    """One network connection record.

    ``src_ip``/``dst_ip``/``timestamp`` are optional: the codec and metric
    paths never need them, while prevention requires ``src_ip``.
    """

    src_port: int
    dst_port: int
    protocol: str
    duration: str
    service: str
    orig_bytes: int
    resp_bytes: int
    missed_bytes: int
    orig_ip_bytes: int
    resp_ip_bytes: int
    orig_pkts: int
    resp_pkts: int
    conn_state: str
    src_ip: str | None = None
    dst_ip: str | None = None
    timestamp: float | None = None

    def duration_seconds(self) -> float:
        return float(self.duration)

    def prompt_fields(self) -> dict[str, int | str]:
        """The rendered fields, in render order."""
        return {name: getattr(self, name) for name in PROMPT_FIELDS}

    def as_raw(self) -> dict[str, object]:
        """Field map suitable for re-validation; optional absent fields omitted."""
        raw: dict[str, object] = {name: getattr(self, name) for name in PROMPT_FIELDS}
        for name in ("src_ip", "dst_ip", "timestamp"):
            value = getattr(self, name)
            if value is not None:
                raw[name] = value
        return raw



def _coerce_int(field: str, value: object) -> int:
    if isinstance(value, bool):
        raise MalformedNumber(field, value)
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not (math.isfinite(value) and value.is_integer()):
            raise MalformedNumber(field, value)
        return int(value)
    if isinstance(value, str):
        text = value.strip()
        if not _INT_RE.match(text):
            raise MalformedNumber(field, value)
        return int(text)
    raise MalformedNumber(field, value)


def _coerce_port(field: str, value: object) -> int:
    port = _coerce_int(field, value)
    if not 0 <= port <= MAX_PORT:
        raise OutOfRange(field, port)
    return port


def _coerce_counter(field: str, value: object) -> int:
    count = _coerce_int(field, value)
    if count < 0:
        raise OutOfRange(field, count)
    return count


def _coerce_duration(value: object) -> str:
    if isinstance(value, str):
        text = value.strip()
        if not _DURATION_RE.match(text):
            raise MalformedNumber("duration", value)
        return text
    if isinstance(value, bool):
        raise MalformedNumber("duration", value)
    if isinstance(value, int):
        if value < 0:
            raise MalformedNumber("duration", value)
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value) or value < 0:
            raise MalformedNumber("duration", value)
        # Decimal keeps the shortest-repr digits while avoiding exponent
        # notation, which the prompt grammar forbids.
        return format(Decimal(repr(value)), "f")
    raise MalformedNumber("duration", value)


def _coerce_token(field: str, value: object, pattern: re.Pattern[str]) -> str:
    if not isinstance(value, str) or not pattern.match(value):
        raise OutOfRange(field, value)
    return value


def _coerce_ip(field: str, value: object) -> str:
    if not isinstance(value, str) or not value or any(c in value for c in " \t\n,"):
        raise OutOfRange(field, value)
    return value


def _coerce_timestamp(value: object) -> float:
    if isinstance(value, bool):
        raise MalformedNumber("timestamp", value)
    if isinstance(value, (int, float)):
        ts = float(value)
    elif isinstance(value, str):
        try:
            ts = float(value.strip())
        except ValueError:
            raise MalformedNumber("timestamp", value) from None
    else:
        raise MalformedNumber("timestamp", value)
    if not math.isfinite(ts):
        raise MalformedNumber("timestamp", value)
    if ts < 0:
        raise OutOfRange("timestamp", ts)
    return ts


def validate_flow(raw: Mapping[str, object]) -> FlowRecord:
    """Validate a field map into a :class:`FlowRecord`.

    All prompt fields are required; ``src_ip``/``dst_ip``/``timestamp`` are
    optional (``None`` or empty string counts as absent).  The protocol
    token is uppercased; duration is kept verbatim when given as a string.

    Raises :class:`MissingField`, :class:`OutOfRange` or
    :class:`MalformedNumber`.
    """
    values: dict[str, object] = {}
    for name in PROMPT_FIELDS:
        value = raw.get(name)
        if value is None or (isinstance(value, str) and value == ""):
            raise MissingField(name)
        values[name] = value

    record_kwargs: dict[str, object] = {
        "src_port": _coerce_port("src_port", values["src_port"]),
        "dst_port": _coerce_port("dst_port", values["dst_port"]),
        "protocol": _coerce_token("protocol", values["protocol"], _PROTOCOL_RE).upper(),
        "duration": _coerce_duration(values["duration"]),
        "service": _coerce_token("service", values["service"], _SERVICE_RE),
        "conn_state": _coerce_token("conn_state", values["conn_state"], _CONN_STATE_RE),
    }
    for name in _COUNTER_FIELDS:
        record_kwargs[name] = _coerce_counter(name, values[name])

    for name, coerce in (("src_ip", _coerce_ip), ("dst_ip", _coerce_ip)):
        value = raw.get(name)
        if value is not None and value != "":
            record_kwargs[name] = coerce(name, value)
    ts = raw.get("timestamp")
    if ts is not None and ts != "":
        record_kwargs["timestamp"] = _coerce_timestamp(ts)

    return FlowRecord(**record_kwargs)


def class_proportions(records: Iterable[tuple[FlowRecord, int]]) -> dict[int, float]:
    """Per-class percentage of a labeled stream; values sum to 100.

    Raises :class:`EmptyStream` for an empty input.
    """
    counts: dict[int, int] = {}
    total = 0
    for _, label in records:
        counts[label] = counts.get(label, 0) + 1
        total += 1
    if total == 0:
        raise EmptyStream("no labeled flows to tally")
    return {label: 100.0 * count / total for label, count in counts.items()}
