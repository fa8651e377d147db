"""Labeled dataset ingestion, deterministic splitting, and synthesis.

File schema (both directions): the flow fields plus a ``label`` column
holding either a numeric label id or a class name.  Delimited files carry a
header row; JSON-lines files carry one flat object per line with the same
keys.  Malformed rows are tallied and reported, never silently dropped, and
ingestion aborts when their fraction exceeds the configured threshold.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import IO, Mapping, Sequence

from .errors import (
    BadProportions,
    EdgeShieldError,
    IoFailure,
    LabelUnknown,
    SchemaMismatch,
    TooFewRecords,
    TooManyMalformedRows,
)
from .flows import PROMPT_FIELDS, FlowRecord, validate_flow
from .taxonomy import Taxonomy, load_taxonomy

logger = logging.getLogger(__name__)

SPLIT_RATIOS = (0.60, 0.20, 0.20)
_EXPORT_COLUMNS = ("src_ip", "dst_ip") + PROMPT_FIELDS + ("timestamp", "label")


class Provenance(str, Enum):
    IOT23 = "IoT23"
    TON_IOT = "TonIoT"
    SYNTHETIC = "Synthetic"
    MIXED = "Mixed"


@dataclass(frozen=True, slots=True)
class LabeledDataset:
    """Immutable sequence of (flow, label_id) pairs in ingestion order."""

    records: tuple[tuple[FlowRecord, int], ...]
    provenance: Provenance = Provenance.MIXED
    seed: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def labels(self) -> list[int]:
        return [label for _, label in self.records]

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        return LabeledDataset(
            records=tuple(self.records[i] for i in indices),
            provenance=self.provenance,
            seed=self.seed,
        )


@dataclass(slots=True)
class IngestReport:
    """Row accounting for one ingestion run."""

    total_rows: int = 0
    accepted: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)

    @property
    def malformed_count(self) -> int:
        return len(self.malformed)


@dataclass(frozen=True, slots=True)
class SplitAssignment:
    """Disjoint train/validation/test index sets over one dataset."""

    train_idx: tuple[int, ...]
    val_idx: tuple[int, ...]
    test_idx: tuple[int, ...]
    ratios: tuple[float, float, float]
    seed: int
    stratified: bool


def _open_source(source: str | Path | IO) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        try:
            return open(source, "r", encoding="utf-8", newline=""), True
        except OSError as exc:
            raise IoFailure(f"cannot open {source}: {exc}") from exc
    if isinstance(source, io.TextIOBase):
        return source, False
    try:
        return io.TextIOWrapper(source, encoding="utf-8", newline=""), False
    except Exception as exc:  # not a readable byte stream
        raise IoFailure(f"unreadable source: {exc}") from exc


def _resolve_label(value: str, row: int, taxonomy: Taxonomy) -> int:
    text = value.strip()
    if not text:
        raise LabelUnknown(row, value)
    try:
        label = int(text)
    except ValueError:
        try:
            return taxonomy.label_for_name(text)
        except EdgeShieldError:
            raise LabelUnknown(row, value) from None
    if label not in taxonomy.label_ids:
        raise LabelUnknown(row, label)
    return label


def ingest(
    source: str | Path | IO,
    format: str = "delimited",
    *,
    delimiter: str = ",",
    taxonomy: Taxonomy | None = None,
    provenance: Provenance = Provenance.MIXED,
    seed: int = 0,
    max_malformed_fraction: float = 0.01,
) -> tuple[LabeledDataset, IngestReport]:
    """Read labeled flows from a delimited or JSON-lines source.

    Returns the dataset plus an :class:`IngestReport` tallying malformed
    rows.  Raises :class:`SchemaMismatch`, :class:`LabelUnknown`,
    :class:`IoFailure` or :class:`TooManyMalformedRows`.
    """
    if format not in ("delimited", "json-lines"):
        raise SchemaMismatch(f"unknown format: {format}")
    taxonomy = taxonomy or load_taxonomy()
    stream, owned = _open_source(source)
    report = IngestReport()
    records: list[tuple[FlowRecord, int]] = []
    try:
        if format == "delimited":
            _ingest_delimited(stream, delimiter, taxonomy, records, report)
        else:
            _ingest_jsonl(stream, taxonomy, records, report)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    finally:
        if owned:
            stream.close()

    if report.total_rows and report.malformed_count / report.total_rows > max_malformed_fraction:
        raise TooManyMalformedRows(
            f"{report.malformed_count} of {report.total_rows} rows malformed "
            f"(threshold {max_malformed_fraction:.1%})"
        )
    if report.malformed_count:
        logger.warning("ingest: %d malformed rows skipped", report.malformed_count)
    dataset = LabeledDataset(records=tuple(records), provenance=provenance, seed=seed)
    return dataset, report


def _row_to_record(
    mapping: Mapping[str, object], row: int, taxonomy: Taxonomy
) -> tuple[FlowRecord, int]:
    label_raw = mapping.get("label")
    if label_raw is None or label_raw == "":
        raise LabelUnknown(row, label_raw)
    label = _resolve_label(str(label_raw), row, taxonomy)
    flow = validate_flow(mapping)
    return flow, label


def _ingest_delimited(stream, delimiter, taxonomy, records, report) -> None:
    reader = csv.reader(stream, delimiter=delimiter)
    header = next(reader, None)
    if header is None:
        raise SchemaMismatch("empty file: no header row")
    header = [name.strip() for name in header]
    missing = [name for name in PROMPT_FIELDS + ("label",) if name not in header]
    if missing:
        raise SchemaMismatch(f"header is missing columns: {', '.join(missing)}")
    extra = [name for name in header if name not in _EXPORT_COLUMNS]
    if extra:
        raise SchemaMismatch(f"header has unknown columns: {', '.join(extra)}")
    for row_number, row in enumerate(reader, start=2):
        report.total_rows += 1
        if len(row) != len(header):
            report.malformed.append((row_number, f"expected {len(header)} fields, got {len(row)}"))
            continue
        mapping = dict(zip(header, row))
        try:
            records.append(_row_to_record(mapping, row_number, taxonomy))
            report.accepted += 1
        except LabelUnknown:
            raise
        except EdgeShieldError as exc:
            report.malformed.append((row_number, str(exc)))


def _ingest_jsonl(stream, taxonomy, records, report) -> None:
    for row_number, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        report.total_rows += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            report.malformed.append((row_number, f"invalid JSON: {exc}"))
            continue
        if not isinstance(obj, dict):
            report.malformed.append((row_number, "line is not a JSON object"))
            continue
        try:
            records.append(_row_to_record(obj, row_number, taxonomy))
            report.accepted += 1
        except LabelUnknown:
            raise
        except EdgeShieldError as exc:
            report.malformed.append((row_number, str(exc)))


def export_dataset(
    dataset: LabeledDataset,
    sink: str | Path | IO[str],
    format: str = "delimited",
    *,
    delimiter: str = ",",
) -> None:
    """Write a dataset in the ingestion schema (lossless round trip)."""
    if format not in ("delimited", "json-lines"):
        raise SchemaMismatch(f"unknown format: {format}")
    owned = isinstance(sink, (str, Path))
    try:
        stream = open(sink, "w", encoding="utf-8", newline="") if owned else sink
    except OSError as exc:
        raise IoFailure(f"cannot write {sink}: {exc}") from exc
    try:
        if format == "delimited":
            writer = csv.writer(stream, delimiter=delimiter)
            writer.writerow(_EXPORT_COLUMNS)
            for flow, label in dataset.records:
                row = []
                for name in _EXPORT_COLUMNS[:-1]:
                    value = getattr(flow, name)
                    if value is None:
                        row.append("")
                    elif name == "timestamp":
                        row.append(repr(value))
                    else:
                        row.append(value)
                row.append(label)
                writer.writerow(row)
        else:
            for flow, label in dataset.records:
                obj = flow.as_raw()
                obj["label"] = label
                stream.write(json.dumps(obj, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    finally:
        if owned:
            stream.close()


def _allocate(targets: Sequence[float], caps: Sequence[int], total: int) -> list[int]:
    """Integer allocation hitting ``total`` exactly: floor of each target,
    then distribute the remainder by largest fractional part (ties toward
    earlier entries), never exceeding per-entry caps."""
    result = [min(int(math.floor(t)), cap) for t, cap in zip(targets, caps)]
    remainder = total - sum(result)
    order = sorted(
        range(len(targets)),
        key=lambda i: (-(targets[i] - math.floor(targets[i])), i),
    )
    while remainder > 0:
        progressed = False
        for i in order:
            if remainder == 0:
                break
            if result[i] < caps[i]:
                result[i] += 1
                remainder -= 1
                progressed = True
        if not progressed:
            raise RuntimeError("allocation exceeds total capacity")
    return result


def split(dataset: LabeledDataset, seed: int) -> SplitAssignment:
    """Deterministic 60/20/20 partition of the dataset indices.

    Stratified per class when every class has at least 5 members, global
    otherwise; the mode used is recorded on the assignment.  Raises
    :class:`TooFewRecords` for datasets smaller than 5.
    """
    n = len(dataset)
    if n < 5:
        raise TooFewRecords(f"need at least 5 records, got {n}")
    n_train = round(SPLIT_RATIOS[0] * n)
    n_val = round(SPLIT_RATIOS[1] * n)
    rng = random.Random(seed)

    by_class: dict[int, list[int]] = {}
    for index, (_, label) in enumerate(dataset.records):
        by_class.setdefault(label, []).append(index)
    stratified = all(len(v) >= 5 for v in by_class.values())

    train: list[int] = []
    val: list[int] = []
    test: list[int] = []
    if stratified:
        labels = sorted(by_class)
        counts = [len(by_class[label]) for label in labels]
        train_counts = _allocate([SPLIT_RATIOS[0] * c for c in counts], counts, n_train)
        val_caps = [c - t for c, t in zip(counts, train_counts)]
        val_counts = _allocate([SPLIT_RATIOS[1] * c for c in counts], val_caps, n_val)
        for label, t_count, v_count in zip(labels, train_counts, val_counts):
            indices = list(by_class[label])
            rng.shuffle(indices)
            train.extend(indices[:t_count])
            val.extend(indices[t_count : t_count + v_count])
            test.extend(indices[t_count + v_count :])
    else:
        logger.info("split: falling back to global random split (a class has <5 members)")
        indices = list(range(n))
        rng.shuffle(indices)
        train = indices[:n_train]
        val = indices[n_train : n_train + n_val]
        test = indices[n_train + n_val :]

    return SplitAssignment(
        train_idx=tuple(sorted(train)),
        val_idx=tuple(sorted(val)),
        test_idx=tuple(sorted(test)),
        ratios=SPLIT_RATIOS,
        seed=seed,
        stratified=stratified,
    )


# --- synthesis -------------------------------------------------------------

_PROFILES_CACHE: dict | None = None


def synth_profiles() -> dict:
    """The versioned per-class generator parameter table."""
    global _PROFILES_CACHE
    if _PROFILES_CACHE is None:
        text = resources.files("edgeshield.data").joinpath("synth_profiles.json").read_text()
        _PROFILES_CACHE = json.loads(text)
    return _PROFILES_CACHE


def _pool_ip(label: int, index: int) -> str:
    return f"198.{label}.{index // 250}.{index % 250 + 1}"


def _synth_flow(label: int, profile: Mapping, rng: random.Random) -> FlowRecord:
    band_lo, band_hi = profile["ip_bytes_band"]
    ip_bytes = rng.randint(band_lo, band_hi)
    pkt_size = rng.uniform(*profile["pkt_bytes"])
    orig_pkts = max(1, round(ip_bytes / pkt_size))
    orig_bytes = max(0, ip_bytes - orig_pkts * rng.randint(28, 40))
    resp_ip = int(ip_bytes * rng.uniform(*profile["resp_ratio"]))
    resp_pkts = round(resp_ip / pkt_size) if resp_ip else 0
    resp_bytes = max(0, resp_ip - resp_pkts * rng.randint(28, 40))
    missed = rng.randint(40, 400) if rng.random() < profile["missed_rate"] else 0
    if "dst_ports" in profile:
        dst_port = rng.choice(profile["dst_ports"])
    else:
        dst_port = rng.randint(*profile["dst_port_range"])
    duration = rng.uniform(*profile["duration"])
    return FlowRecord(
        src_port=rng.randint(*profile["src_port_range"]),
        dst_port=dst_port,
        protocol=rng.choice(profile["protocols"]),
        duration=f"{duration:.6f}",
        service=rng.choice(profile["services"]),
        orig_bytes=orig_bytes,
        resp_bytes=resp_bytes,
        missed_bytes=missed,
        orig_ip_bytes=ip_bytes,
        resp_ip_bytes=resp_ip,
        orig_pkts=orig_pkts,
        resp_pkts=resp_pkts,
        conn_state=rng.choice(profile["conn_states"]),
        src_ip=_pool_ip(label, rng.randrange(profile["src_pool"])),
        dst_ip=f"10.10.{label}.{rng.randint(1, profile['dst_pool'])}",
    )


def synthesize(
    spec: Mapping[int, float], n: int, seed: int, taxonomy: Taxonomy | None = None
) -> LabeledDataset:
    """Generate ``n`` labeled flows with class-conditioned features.

    ``spec`` maps label ids to proportions summing to 1; per-label counts
    are ``floor(n * p)`` with the remainder assigned deterministically by
    largest fractional part.  Identical ``(spec, n, seed)`` always produce
    identical datasets.  Raises :class:`BadProportions`.
    """
    if n < 1:
        raise BadProportions(f"n must be >= 1, got {n}")
    taxonomy = taxonomy or load_taxonomy()
    if not spec:
        raise BadProportions("empty proportion map")
    for label, p in spec.items():
        if label not in taxonomy.label_ids:
            raise BadProportions(f"label {label} is not in the taxonomy")
        if p < 0:
            raise BadProportions(f"negative proportion for label {label}")
    total = sum(spec.values())
    if abs(total - 1.0) > 1e-9:
        raise BadProportions(f"proportions sum to {total!r}, expected 1.0")

    labels = sorted(spec)
    counts = _allocate([n * spec[label] for label in labels], [n] * len(labels), n)
    sequence: list[int] = []
    for label, count in zip(labels, counts):
        sequence.extend([label] * count)
    rng = random.Random(seed)
    rng.shuffle(sequence)

    profiles = synth_profiles()["classes"]
    records = tuple(
        (_synth_flow(label, profiles[str(label)], rng), label) for label in sequence
    )
    return LabeledDataset(records=records, provenance=Provenance.SYNTHETIC, seed=seed)
