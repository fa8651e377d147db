import random

import pytest

from edgeshield.errors import (
    EmptyStream,
    MalformedNumber,
    MissingField,
    OutOfRange,
)
from edgeshield.flows import class_proportions, validate_flow

from .flowgen import random_flow

# Reference connection record used throughout the docs and golden tests.
REFERENCE_RAW = {
    "src_port": 49864,
    "dst_port": 80,
    "protocol": "TCP",
    "duration": "0.049751",
    "service": "http",
    "orig_bytes": 243,
    "resp_bytes": 3440,
    "missed_bytes": 0,
    "orig_ip_bytes": 511,
    "resp_ip_bytes": 3760,
    "orig_pkts": 5,
    "resp_pkts": 6,
    "conn_state": "SF",
}


def test_reference_flow_validates():
    record = validate_flow(REFERENCE_RAW)
    assert record.src_port == 49864
    assert record.duration == "0.049751"
    assert record.service == "http"
    assert record.src_ip is None
    assert record.timestamp is None


def test_idle_flow_all_zero_counters():
    raw = dict(REFERENCE_RAW, duration="0", orig_bytes=0, resp_bytes=0,
               orig_ip_bytes=0, resp_ip_bytes=0, orig_pkts=0, resp_pkts=0)
    record = validate_flow(raw)
    assert record.duration == "0"
    assert record.orig_pkts == 0


def test_port_out_of_range():
    with pytest.raises(OutOfRange) as exc:
        validate_flow(dict(REFERENCE_RAW, src_port=70000))
    assert exc.value.field == "src_port"
    with pytest.raises(OutOfRange):
        validate_flow(dict(REFERENCE_RAW, dst_port=-1))


def test_missing_field():
    raw = dict(REFERENCE_RAW)
    del raw["conn_state"]
    with pytest.raises(MissingField) as exc:
        validate_flow(raw)
    assert exc.value.field == "conn_state"


def test_negative_counter_rejected():
    with pytest.raises(OutOfRange):
        validate_flow(dict(REFERENCE_RAW, orig_bytes=-5))


@pytest.mark.parametrize("bad", ["-1", "1e5", ".5", "1.", "nan", "inf", "1.2.3", "", None])
def test_malformed_duration(bad):
    raw = dict(REFERENCE_RAW, duration=bad)
    with pytest.raises((MalformedNumber, MissingField)):
        validate_flow(raw)


def test_numeric_duration_inputs_become_plain_decimal_strings():
    assert validate_flow(dict(REFERENCE_RAW, duration=0.049751)).duration == "0.049751"
    assert validate_flow(dict(REFERENCE_RAW, duration=3)).duration == "3"
    assert validate_flow(dict(REFERENCE_RAW, duration=1e-07)).duration == "0.0000001"


def test_protocol_is_case_normalized():
    assert validate_flow(dict(REFERENCE_RAW, protocol="tcp")).protocol == "TCP"
    assert validate_flow(dict(REFERENCE_RAW, protocol="udp")).protocol == "UDP"


def test_token_alphabets_enforced():
    with pytest.raises(OutOfRange):
        validate_flow(dict(REFERENCE_RAW, service="a b"))
    with pytest.raises(OutOfRange):
        validate_flow(dict(REFERENCE_RAW, protocol="TC P"))
    with pytest.raises(OutOfRange):
        validate_flow(dict(REFERENCE_RAW, conn_state="S,F"))


def test_string_counters_are_coerced():
    record = validate_flow(dict(REFERENCE_RAW, orig_bytes="243", src_port="49864"))
    assert record.orig_bytes == 243
    assert record.src_port == 49864
    with pytest.raises(MalformedNumber):
        validate_flow(dict(REFERENCE_RAW, orig_bytes="24x"))


def test_optional_endpoints_and_timestamp():
    raw = dict(REFERENCE_RAW, src_ip="10.0.0.1", dst_ip="192.168.1.5", timestamp=12.5)
    record = validate_flow(raw)
    assert record.src_ip == "10.0.0.1"
    assert record.timestamp == 12.5
    with pytest.raises(OutOfRange):
        validate_flow(dict(REFERENCE_RAW, src_ip="bad ip"))
    with pytest.raises(OutOfRange):
        validate_flow(dict(REFERENCE_RAW, timestamp=-4))
    with pytest.raises(MalformedNumber):
        validate_flow(dict(REFERENCE_RAW, timestamp="soon"))


def test_validation_is_idempotent_on_fuzzed_records():
    rng = random.Random(20240917)
    for _ in range(500):
        record = random_flow(rng, with_endpoints=rng.random() < 0.5)
        assert validate_flow(record.as_raw()) == record


def test_class_proportions_single_class():
    flow = validate_flow(REFERENCE_RAW)
    assert class_proportions([(flow, 3)] * 10) == {3: 100.0}


def test_class_proportions_hand_tally():
    # 4 flows labeled (10, 10, 3, 20): 2/4, 1/4, 1/4
    flow = validate_flow(REFERENCE_RAW)
    props = class_proportions([(flow, 10), (flow, 10), (flow, 3), (flow, 20)])
    assert props == {10: 50.0, 3: 25.0, 20: 25.0}


def test_class_proportions_empty_stream():
    with pytest.raises(EmptyStream):
        class_proportions([])


def test_class_proportions_always_sum_to_100():
    rng = random.Random(7)
    flow = validate_flow(REFERENCE_RAW)
    for _ in range(50):
        labels = [rng.randint(1, 21) for _ in range(rng.randint(1, 400))]
        total = sum(class_proportions((flow, lab) for lab in labels).values())
        assert abs(total - 100.0) < 1e-9
