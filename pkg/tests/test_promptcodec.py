import random

import pytest

from edgeshield.errors import GrammarMismatch
from edgeshield.flows import validate_flow
from edgeshield.promptcodec import parse_prompt, render_prompt

from .flowgen import random_flow
from .test_flows import REFERENCE_RAW

GOLDEN_PROMPT = (
    "Traffic from Port 49864 to Port 80 over TCP Protocol. "
    "Duration: 0.049751s, Service: http, Bytes Sent: 243, Bytes Received: 3440, "
    "Missed Bytes: 0, Total IP Bytes Sent: 511, Total IP Bytes Received: 3760, "
    "Packets Sent: 5, Packets Received: 6, Connection State: SF"
)


def test_golden_render():
    assert render_prompt(validate_flow(REFERENCE_RAW)) == GOLDEN_PROMPT


def test_golden_parse():
    record = parse_prompt(GOLDEN_PROMPT)
    assert record.prompt_fields() == validate_flow(REFERENCE_RAW).prompt_fields()
    assert record.src_ip is None
    assert record.dst_ip is None
    assert record.timestamp is None


def test_zero_flow_render():
    raw = dict(REFERENCE_RAW, src_port=0, dst_port=0, duration="0", service="-",
               conn_state="S0", orig_bytes=0, resp_bytes=0, missed_bytes=0,
               orig_ip_bytes=0, resp_ip_bytes=0, orig_pkts=0, resp_pkts=0)
    text = render_prompt(validate_flow(raw))
    assert text == (
        "Traffic from Port 0 to Port 0 over TCP Protocol. "
        "Duration: 0s, Service: -, Bytes Sent: 0, Bytes Received: 0, "
        "Missed Bytes: 0, Total IP Bytes Sent: 0, Total IP Bytes Received: 0, "
        "Packets Sent: 0, Packets Received: 0, Connection State: S0"
    )


def test_negative_duration_is_a_grammar_error():
    bad = GOLDEN_PROMPT.replace("Duration: 0.049751s", "Duration: -1s")
    with pytest.raises(GrammarMismatch) as exc:
        parse_prompt(bad)
    assert bad[exc.value.position] == "-"


@pytest.mark.parametrize(
    "mutate",
    [
        lambda s: s.replace("Traffic", "traffic"),
        lambda s: s.replace("Port 80", "Port 080"),
        lambda s: s.replace("Port 80", "Port 99999"),
        lambda s: s + " ",
        lambda s: s[:-3],
        lambda s: s.replace("Bytes Sent: 243", "Bytes Sent: 24 3"),
        lambda s: s.replace("Service: http", "Service: "),
        lambda s: s.replace(". Duration", "  Duration"),
        lambda s: s.replace("Duration: 0.049751s", "Duration: 1.s"),
        lambda s: s.replace("Service: http", "Service: httép"),
        lambda s: s.replace("Bytes Sent: 243", "Bytes Sent: 243.5"),
        lambda s: s.replace("Connection State: SF", "Connection State: SF extra"),
    ],
)
def test_corruptions_raise_grammar_mismatch(mutate):
    with pytest.raises(GrammarMismatch):
        parse_prompt(mutate(GOLDEN_PROMPT))


def test_mismatch_position_is_first_offending_offset():
    bad = GOLDEN_PROMPT.replace("over TCP", "over tCP")
    with pytest.raises(GrammarMismatch) as exc:
        parse_prompt(bad)
    assert exc.value.position == bad.index("tCP")


def test_round_trip_fuzz():
    rng = random.Random(1337)
    for _ in range(1000):
        record = random_flow(rng)
        text = render_prompt(record)
        parsed = parse_prompt(text)
        assert parsed.prompt_fields() == record.prompt_fields()


def test_rendered_text_has_no_double_spaces_or_trailing_whitespace():
    rng = random.Random(99)
    for _ in range(300):
        text = render_prompt(random_flow(rng))
        assert "  " not in text
        assert text == text.rstrip()
        assert "\n" not in text


def test_distinct_records_render_distinctly():
    rng = random.Random(4242)
    seen = {}
    for _ in range(500):
        record = random_flow(rng)
        text = render_prompt(record)
        if text in seen:
            assert seen[text] == record.prompt_fields()
        seen[text] = record.prompt_fields()
