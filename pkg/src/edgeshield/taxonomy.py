"""Merged 21-class threat taxonomy for the IoT-23 and TON_IoT corpora.

The two corpora publish per-class label tables that share the DDoS (10) and
benign (3) ids but otherwise cover disjoint id ranges.  As published, the
IoT-23 table assigns id 5 to both C&C-HeartBeat and C&C-FileDownload and
leaves id 6 unused, which is unusable for a 21-way classifier.  The default
("canonical") taxonomy repairs this by moving C&C-FileDownload to 6 so the
ids cover exactly 1..21; ``strict_printed=True`` keeps the collision as
published.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, TextIO

from .errors import UnknownClass


class Origin(str, Enum):
    """Which label table a taxonomy entry comes from."""

    IOT23 = "IoT23"
    TON_IOT = "TonIoT"
    BOTH = "Both"


BENIGN_LABEL = 3
DDOS_LABEL = 10
NUM_CLASSES = 21

# (class_name, label_id, description, proportion_percent) as published.
_TON_IOT_TABLE = (
    ("Scanning", 20, "Network scanning activity.", 31.963),
    ("DDoS", 10, "Distributed Denial-of-Service attack.", 27.597),
    ("DoS", 11, "Denial-of-Service attack.", 15.110),
    ("XSS", 21, "Cross-site scripting attack.", 9.441),
    ("Password", 18, "Password-based attack attempts.", 7.692),
    ("Normal", 3, "Normal traffic.", 3.565),
    ("Backdoor", 2, "Backdoor-based malicious activity.", 2.275),
    ("Injection", 13, "Code injection attack.", 2.026),
    ("Ransomware", 19, "Ransomware attack.", 0.326),
    ("MITM", 14, "Man-in-the-middle attack.", 0.005),
)

_IOT23_TABLE = (
    ("PartOfAHorizontalPortScan", 17, "Horizontal port scanning activity.", 56.048),
    ("Okiru", 15, "Okiru botnet activity.", 21.715),
    ("Benign", 3, "Normal traffic.", 11.392),
    ("DDoS", 10, "Distributed Denial-of-Service attack.", 10.560),
    ("C&C", 4, "Command and control communication.", 0.253),
    ("C&C-HeartBeat", 5, "Periodic heartbeat signal to C&C.", 0.022),
    ("Attack", 1, "General attack activity.", 0.009),
    ("C&C-FileDownload", 5, "File download from C&C server.", 0.001),
    ("C&C-Torii", 9, "Torii botnet C&C communication.", 0.0005),
    ("FileDownload", 12, "File download activity.", 0.0002),
    ("C&C-HeartBeat-FileDownload", 7, "Combination of heartbeat and file download.", 0.0001),
    ("Okiru-Attack", 16, "Okiru botnet attack.", 0.00005),
    ("C&C-Mirai", 8, "Mirai botnet C&C communication.", 0.00002),
)

# Canonical display name for each merged label id.  Id 3 merges IoT-23
# "Benign" and TON_IoT "Normal" into one class.
CANONICAL_NAMES = {
    1: "Attack",
    2: "Backdoor",
    3: "Benign",
    4: "C&C",
    5: "C&C-HeartBeat",
    6: "C&C-FileDownload",
    7: "C&C-HeartBeat-FileDownload",
    8: "C&C-Mirai",
    9: "C&C-Torii",
    10: "DDoS",
    11: "DoS",
    12: "FileDownload",
    13: "Injection",
    14: "MITM",
    15: "Okiru",
    16: "Okiru-Attack",
    17: "PartOfAHorizontalPortScan",
    18: "Password",
    19: "Ransomware",
    20: "Scanning",
    21: "XSS",
}


@dataclass(frozen=True, slots=True)
class TaxonomyEntry:
    class_name: str
    label_id: int
    description: str
    proportion_percent: float
    dataset: Origin


class Taxonomy:
    """Lookup structure over the merged label tables.

    Name lookups are authoritative; id lookups resolve through the merged
    id -> name map (in strict mode a colliding id resolves to the first
    published row).
    """

    def __init__(self, entries: Iterable[TaxonomyEntry], strict_printed: bool = False):
        self.entries: tuple[TaxonomyEntry, ...] = tuple(entries)
        self.strict_printed = strict_printed
        self._by_name: dict[tuple[str, Origin], TaxonomyEntry] = {}
        self._name_to_id: dict[str, int] = {}
        self._id_to_entries: dict[int, list[TaxonomyEntry]] = {}
        for entry in self.entries:
            self._by_name[(entry.class_name, entry.dataset)] = entry
            self._name_to_id.setdefault(entry.class_name, entry.label_id)
            self._id_to_entries.setdefault(entry.label_id, []).append(entry)

    @property
    def label_ids(self) -> frozenset[int]:
        return frozenset(self._id_to_entries)

    def lookup(self, key: str | int, dataset: Origin | None = None) -> TaxonomyEntry:
        """Resolve a class name or label id to its taxonomy entry."""
        if isinstance(key, bool) or not isinstance(key, (str, int)):
            raise UnknownClass(key)
        if isinstance(key, int):
            entries = self._id_to_entries.get(key)
            if not entries:
                raise UnknownClass(key)
            if dataset is None:
                return entries[0]
            for entry in entries:
                if entry.dataset == dataset:
                    return entry
            raise UnknownClass(key)
        if dataset is not None:
            entry = self._by_name.get((key, dataset))
            if entry is None:
                raise UnknownClass(key)
            return entry
        for origin in (Origin.TON_IOT, Origin.IOT23):
            entry = self._by_name.get((key, origin))
            if entry is not None:
                return entry
        raise UnknownClass(key)

    def label_for_name(self, name: str) -> int:
        """Map a class name from either corpus to its merged label id."""
        try:
            return self._name_to_id[name]
        except KeyError:
            raise UnknownClass(name) from None

    def canonical_name(self, label_id: int) -> str:
        if label_id not in self._id_to_entries:
            raise UnknownClass(label_id)
        if label_id in CANONICAL_NAMES and not (self.strict_printed and label_id == 5):
            return CANONICAL_NAMES[label_id]
        return self._id_to_entries[label_id][0].class_name

    def proportions(self, dataset: Origin, normalize: bool = False) -> dict[int, float]:
        """Published per-class percentages for one corpus, keyed by label id.

        With ``normalize=True`` the values are rescaled to fractions summing
        to exactly 1.0, suitable as synthesis targets (the published IoT-23
        column carries a small rounding surplus).
        """
        props = {
            e.label_id: e.proportion_percent
            for e in self.entries
            if e.dataset == dataset
        }
        if not normalize:
            return props
        total = sum(props.values())
        return {label: value / total for label, value in props.items()}

    def export_delimited(self, sink: TextIO, delimiter: str = ",") -> None:
        """Write the taxonomy as delimited text with a header row."""
        writer = csv.writer(sink, delimiter=delimiter)
        writer.writerow(
            ["dataset", "class_name", "label_id", "description", "proportion_percent"]
        )
        for entry in self.entries:
            writer.writerow(
                [
                    entry.dataset.value,
                    entry.class_name,
                    entry.label_id,
                    entry.description,
                    repr(entry.proportion_percent),
                ]
            )


def import_delimited(source: TextIO, delimiter: str = ",", strict_printed: bool = False) -> Taxonomy:
    """Read a taxonomy previously written by :meth:`Taxonomy.export_delimited`."""
    reader = csv.reader(source, delimiter=delimiter)
    header = next(reader, None)
    expected = ["dataset", "class_name", "label_id", "description", "proportion_percent"]
    if header != expected:
        raise UnknownClass(header)
    entries = [
        TaxonomyEntry(
            class_name=row[1],
            label_id=int(row[2]),
            description=row[3],
            proportion_percent=float(row[4]),
            dataset=Origin(row[0]),
        )
        for row in reader
    ]
    return Taxonomy(entries, strict_printed=strict_printed)


def load_taxonomy(strict_printed: bool = False) -> Taxonomy:
    """Build the merged taxonomy.

    ``strict_printed=False`` (default) repairs the published id-5 collision
    by assigning C&C-FileDownload to the unused id 6, so the label space is
    exactly 1..21.  ``strict_printed=True`` keeps the tables as published.
    """
    entries = [
        TaxonomyEntry(name, label, desc, prop, Origin.TON_IOT)
        for name, label, desc, prop in _TON_IOT_TABLE
    ]
    for name, label, desc, prop in _IOT23_TABLE:
        if not strict_printed and name == "C&C-FileDownload":
            label = 6
        entries.append(TaxonomyEntry(name, label, desc, prop, Origin.IOT23))
    return Taxonomy(entries, strict_printed=strict_printed)
