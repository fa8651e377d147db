"""Classifier backends and the evaluation loop.

Every backend consumes one rendered prompt line and returns one logit per
class, so the prompt text is the only interface a model ever sees.  The
bundled baseline is a deterministic decision tree over the numeric flow
features, giving the pipeline a model-free reference point; ``RemoteBackend``
speaks a newline-delimited protocol (one prompt line out, one line of 21
space-separated logits back) to an external model server over a stream
socket or a child-process pipe.
"""

from __future__ import annotations

import logging
import math
import socket
import subprocess
import time
from typing import IO, Iterable, Sequence

import numpy as np

from .dataset import LabeledDataset
from .errors import (
    BackendMalformedOutput,
    BackendUnavailable,
    EdgeShieldError,
    EmptyStream,
)
from .flows import FlowRecord
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    Prediction,
    cross_entropy_from_logits,
    report_from_confusion,
)
from .promptcodec import parse_prompt, render_prompt
from .taxonomy import NUM_CLASSES

logger = logging.getLogger(__name__)

_SMOOTHING = 1.0


class ClassifierBackend:
    """Interface contract: deterministic logits for a prompt line."""

    name: str = "backend"
    version: str = "0"

    @property
    def descriptor(self) -> str:
        return f"{self.name}/{self.version}"

    def logits(self, prompt: str) -> Sequence[float]:
        raise NotImplementedError


def _feature_vector(flow: FlowRecord, vocab: dict[str, dict[str, int]]) -> list[float]:
    return [
        float(flow.src_port),
        float(flow.dst_port),
        flow.duration_seconds(),
        float(flow.orig_bytes),
        float(flow.resp_bytes),
        float(flow.missed_bytes),
        float(flow.orig_ip_bytes),
        float(flow.resp_ip_bytes),
        float(flow.orig_pkts),
        float(flow.resp_pkts),
        float(vocab["protocol"].get(flow.protocol, -1)),
        float(vocab["service"].get(flow.service, -1)),
        float(vocab["conn_state"].get(flow.conn_state, -1)),
    ]


class BaselineBackend(ClassifierBackend):
    """Decision-tree reference classifier with calibrated logits.

    Logits are the log of Laplace-smoothed class frequencies at the leaf
    the flow lands in, so ``softmax(logits)`` recovers those frequencies.
    """

    name = "baseline-tree"
    version = "1"

    def __init__(self, tree, vocab: dict[str, dict[str, int]], leaf_logits: dict[int, tuple[float, ...]],
                 constant: tuple[float, ...] | None = None):
        self._tree = tree
        self._vocab = vocab
        self._leaf_logits = leaf_logits
        self._constant = constant

    def logits(self, prompt: str) -> tuple[float, ...]:
        if self._constant is not None:
            return self._constant
        flow = parse_prompt(prompt)
        x = np.asarray([_feature_vector(flow, self._vocab)], dtype=np.float64)
        leaf = int(self._tree.apply(x)[0])
        return self._leaf_logits[leaf]


def _smoothed_log_freqs(counts: Sequence[float]) -> tuple[float, ...]:
    total = float(sum(counts)) + _SMOOTHING * NUM_CLASSES
    return tuple(math.log((c + _SMOOTHING) / total) for c in counts)


def fit_baseline_backend(training: LabeledDataset, seed: int = 0) -> BaselineBackend:
    """Fit the reference tree classifier.

    Refitting with the same dataset and seed yields an identical model.  A
    single-class training set degenerates to a constant classifier (logged
    as a warning rather than raised).
    """
    if len(training) == 0:
        raise EmptyStream("cannot fit a backend on an empty dataset")
    labels = training.labels()
    present = sorted(set(labels))
    if len(present) == 1:
        logger.warning(
            "degenerate training set: single class %d, fitting a constant classifier", present[0]
        )
        counts = [0.0] * NUM_CLASSES
        counts[present[0] - 1] = float(len(labels))
        return BaselineBackend(None, {}, {}, constant=_smoothed_log_freqs(counts))

    vocab: dict[str, dict[str, int]] = {}
    for field in ("protocol", "service", "conn_state"):
        tokens = sorted({getattr(flow, field) for flow, _ in training.records})
        vocab[field] = {token: i for i, token in enumerate(tokens)}

    x = np.asarray(
        [_feature_vector(flow, vocab) for flow, _ in training.records], dtype=np.float64
    )
    y = np.asarray(labels, dtype=np.int64)

    from sklearn.tree import DecisionTreeClassifier

    tree = DecisionTreeClassifier(criterion="gini", random_state=seed)
    tree.fit(x, y)

    # Per-leaf class counts expanded to the full label space, smoothed, logged.
    leaves = tree.apply(x)
    leaf_counts: dict[int, list[float]] = {}
    for leaf, label in zip(leaves, y):
        counts = leaf_counts.setdefault(int(leaf), [0.0] * NUM_CLASSES)
        counts[int(label) - 1] += 1.0
    leaf_logits = {leaf: _smoothed_log_freqs(counts) for leaf, counts in leaf_counts.items()}
    return BaselineBackend(tree, vocab, leaf_logits)


class RemoteBackend(ClassifierBackend):
    """Client for the newline-delimited remote model protocol."""

    name = "remote"
    version = "1"

    def __init__(self, address: str, timeout: float = 5.0, retries: int = 2):
        self.address = address
        self.timeout = timeout
        self.retries = retries
        self._sock: socket.socket | None = None
        self._reader: IO[str] | None = None

    @property
    def descriptor(self) -> str:
        return f"{self.name}({self.address})/{self.version}"

    def _connect(self) -> None:
        host, _, port_text = self.address.rpartition(":")
        if not host or not port_text.isdigit():
            raise BackendUnavailable(f"bad remote address {self.address!r}, expected host:port")
        try:
            self._sock = socket.create_connection((host, int(port_text)), timeout=self.timeout)
            self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
        except OSError as exc:
            self._close()
            raise BackendUnavailable(f"cannot connect to {self.address}: {exc}") from exc

    def _close(self) -> None:
        if self._reader is not None:
            try:
                self._reader.close()
            except OSError:
                pass
            self._reader = None
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None

    def _round_trip(self, prompt: str) -> str:
        if self._sock is None:
            self._connect()
        assert self._sock is not None and self._reader is not None
        self._sock.sendall(prompt.encode("utf-8") + b"\n")
        line = self._reader.readline()
        if not line:
            raise OSError("server closed the connection")
        return line

    def logits(self, prompt: str) -> tuple[float, ...]:
        if "\n" in prompt:
            raise BackendMalformedOutput("prompt must be a single line")
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                line = self._round_trip(prompt)
                return _parse_logit_line(line)
            except (OSError, socket.timeout) as exc:
                last_error = exc
                self._close()
                logger.warning("remote backend attempt %d failed: %s", attempt + 1, exc)
        raise BackendUnavailable(
            f"remote backend {self.address} unreachable after {self.retries + 1} attempts: {last_error}"
        )

    def close(self) -> None:
        self._close()


class ProcessBackend(ClassifierBackend):
    """Remote protocol spoken to a child process over stdin/stdout."""

    name = "process"
    version = "1"

    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendUnavailable(f"cannot start {command!r}: {exc}") from exc

    def logits(self, prompt: str) -> tuple[float, ...]:
        if self._proc.poll() is not None:
            raise BackendUnavailable(f"model process exited with {self._proc.returncode}")
        try:
            assert self._proc.stdin is not None and self._proc.stdout is not None
            self._proc.stdin.write(prompt + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except OSError as exc:
            raise BackendUnavailable(f"model process pipe failed: {exc}") from exc
        if not line:
            raise BackendUnavailable("model process closed its output")
        return _parse_logit_line(line)

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


def _parse_logit_line(line: str) -> tuple[float, ...]:
    parts = line.split()
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise BackendMalformedOutput(f"unparseable logit line: {line!r}") from None
    if len(values) != NUM_CLASSES:
        raise BackendMalformedOutput(
            f"expected {NUM_CLASSES} logits, got {len(values)}"
        )
    return values


def classify(
    flow: FlowRecord, backend: ClassifierBackend, clock=time.perf_counter
) -> tuple[Prediction, float]:
    """Render, query the backend, decode; returns (prediction, latency seconds)."""
    prompt = render_prompt(flow)
    started = clock()
    raw = backend.logits(prompt)
    latency = clock() - started
    if len(raw) != NUM_CLASSES:
        raise BackendMalformedOutput(f"expected {NUM_CLASSES} logits, got {len(raw)}")
    if not all(math.isfinite(v) for v in raw):
        raise BackendMalformedOutput("backend produced non-finite logits")
    return Prediction.from_logits(raw), latency


def evaluate(
    test: LabeledDataset,
    backend: ClassifierBackend,
    *,
    energy_samples: Iterable[float] | None = None,
    clock=time.perf_counter,
) -> tuple[ConfusionMatrix, MetricsReport]:
    """Classify every record of ``test`` and aggregate the metrics.

    Throughput is records per elapsed wall-clock second; energy per request
    is attached only when an ``energy_samples`` stream is supplied.  Backend
    errors propagate with the failing record index attached.
    """
    if len(test) == 0:
        raise EmptyStream("cannot evaluate an empty test set")
    cm = ConfusionMatrix(NUM_CLASSES)
    loss_total = 0.0
    started = clock()
    for index, (flow, label) in enumerate(test.records):
        try:
            prediction, _ = classify(flow, backend, clock=clock)
        except EdgeShieldError as exc:
            exc.record_index = index
            raise
        cm.add(label, prediction.predicted)
        loss_total += cross_entropy_from_logits(prediction.logits, label)
    elapsed = max(clock() - started, 1e-9)
    n = len(test)
    energy = None
    if energy_samples is not None:
        energy = sum(energy_samples) / n
    report = report_from_confusion(
        cm,
        mean_cross_entropy=loss_total / n,
        throughput_req_per_sec=n / elapsed,
        energy_j_per_req=energy,
        train_loss=getattr(backend, "train_loss", None),
        validation_loss=getattr(backend, "validation_loss", None),
    )
    return cm, report
