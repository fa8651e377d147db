"""Render flow records to prompt text and parse prompt text back.

The prompt line is the wire contract between this pipeline and any
classifier backend.  A record renders to:

    Traffic from Port {src_port} to Port {dst_port} over {protocol}
    Protocol. Duration: {duration}s, Service: {service}, Bytes Sent:
    {orig_bytes}, Bytes Received: {resp_bytes}, Missed Bytes:
    {missed_bytes}, Total IP Bytes Sent: {orig_ip_bytes}, Total IP Bytes
    Received: {resp_ip_bytes}, Packets Sent: {orig_pkts}, Packets
    Received: {resp_pkts}, Connection State: {conn_state}

(as a single line).  Integers render without leading zeros, duration
renders verbatim from the stored string, and parsing is the exact inverse:
``parse_prompt(render_prompt(r))`` reproduces every rendered field of
``r``.
"""

from __future__ import annotations

from .errors import GrammarMismatch
from .flows import MAX_PORT, FlowRecord

PROMPT_TEMPLATE = (
    "Traffic from Port {src_port} to Port {dst_port} over {protocol} Protocol. "
    "Duration: {duration}s, Service: {service}, Bytes Sent: {orig_bytes}, "
    "Bytes Received: {resp_bytes}, Missed Bytes: {missed_bytes}, "
    "Total IP Bytes Sent: {orig_ip_bytes}, Total IP Bytes Received: {resp_ip_bytes}, "
    "Packets Sent: {orig_pkts}, Packets Received: {resp_pkts}, "
    "Connection State: {conn_state}"
)

_DIGITS = frozenset("0123456789")
_PROTOCOL_CHARS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-")
_SERVICE_CHARS = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789._+-"
)
_STATE_CHARS = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-"
)


def render_prompt(flow: FlowRecord) -> str:
    """Render a validated flow record as one prompt line."""
    return PROMPT_TEMPLATE.format(**flow.prompt_fields())


class _Scanner:
    """Cursor over prompt text that reports the first offending offset."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def literal(self, expected: str) -> None:
        text, pos = self.text, self.pos
        for i, ch in enumerate(expected):
            if pos + i >= len(text) or text[pos + i] != ch:
                raise GrammarMismatch(pos + i, expected=expected[i])
        self.pos += len(expected)

    def _run(self, allowed: frozenset[str], what: str) -> str:
        start = self.pos
        text = self.text
        while self.pos < len(text) and text[self.pos] in allowed:
            self.pos += 1
        if self.pos == start:
            raise GrammarMismatch(start, expected=what)
        return text[start : self.pos]

    def integer(self, field: str) -> int:
        start = self.pos
        digits = self._run(_DIGITS, "digit")
        if len(digits) > 1 and digits[0] == "0":
            raise GrammarMismatch(start, expected="integer without leading zeros")
        value = int(digits)
        if field.endswith("port") and value > MAX_PORT:
            raise GrammarMismatch(start, expected=f"{field} <= {MAX_PORT}")
        return value

    def duration(self) -> str:
        start = self.pos
        self._run(_DIGITS, "digit")
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.pos += 1
            self._run(_DIGITS, "digit")
        return self.text[start : self.pos]

    def token(self, allowed: frozenset[str], what: str) -> str:
        return self._run(allowed, what)

    def end(self) -> None:
        if self.pos != len(self.text):
            raise GrammarMismatch(self.pos, expected="end of prompt")


def parse_prompt(text: str) -> FlowRecord:
    """Parse one prompt line back into a flow record.

    The returned record carries no ``src_ip``/``dst_ip``/``timestamp``.
    Raises :class:`GrammarMismatch` with the offset of the first character
    that breaks the grammar.
    """
    s = _Scanner(text)
    s.literal("Traffic from Port ")
    src_port = s.integer("src_port")
    s.literal(" to Port ")
    dst_port = s.integer("dst_port")
    s.literal(" over ")
    protocol = s.token(_PROTOCOL_CHARS, "protocol token")
    s.literal(" Protocol. Duration: ")
    duration = s.duration()
    s.literal("s, Service: ")
    service = s.token(_SERVICE_CHARS, "service token")
    s.literal(", Bytes Sent: ")
    orig_bytes = s.integer("orig_bytes")
    s.literal(", Bytes Received: ")
    resp_bytes = s.integer("resp_bytes")
    s.literal(", Missed Bytes: ")
    missed_bytes = s.integer("missed_bytes")
    s.literal(", Total IP Bytes Sent: ")
    orig_ip_bytes = s.integer("orig_ip_bytes")
    s.literal(", Total IP Bytes Received: ")
    resp_ip_bytes = s.integer("resp_ip_bytes")
    s.literal(", Packets Sent: ")
    orig_pkts = s.integer("orig_pkts")
    s.literal(", Packets Received: ")
    resp_pkts = s.integer("resp_pkts")
    s.literal(", Connection State: ")
    conn_state = s.token(_STATE_CHARS, "connection state token")
    s.end()
    return FlowRecord(
        src_port=src_port,
        dst_port=dst_port,
        protocol=protocol,
        duration=duration,
        service=service,
        orig_bytes=orig_bytes,
        resp_bytes=resp_bytes,
        missed_bytes=missed_bytes,
        orig_ip_bytes=orig_ip_bytes,
        resp_ip_bytes=resp_ip_bytes,
        orig_pkts=orig_pkts,
        resp_pkts=resp_pkts,
        conn_state=conn_state,
    )
