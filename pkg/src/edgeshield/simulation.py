"""Edge-cloud simulation harness: traffic replay, edge loops, telemetry.

Simulated time drives everything (windows, expiries, latencies), so a
scenario is a pure function of its configuration: same config and seed,
byte-identical event streams.  Each edge node runs admit -> classify ->
window close (characterize -> decide or playbook -> apply) and emits
telemetry events; the aggregator folds the merged event stream into a
monitoring snapshot.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .backends import ClassifierBackend, RemoteBackend, classify, fit_baseline_backend
from .dataset import ingest, synth_profiles, synthesize, _synth_flow
from .errors import ConfigInvalid, EdgeShieldError, OutOfOrderEvents
from .metrics import ConfusionMatrix, accuracy_precision_recall, micro_f1
from .prevention import (
    DEFAULT_PLAYBOOK,
    Action,
    EdgeState,
    EnforcementPolicy,
    PreventionThresholds,
    Verdict,
    admit,
    apply,
    characterize,
    decide,
    playbook,
    solve_challenge,
)
from .taxonomy import BENIGN_LABEL, DDOS_LABEL, NUM_CLASSES, Taxonomy, load_taxonomy


@dataclass(frozen=True, slots=True)
class DeviceProfile:
    """Service characteristics of one simulated device class."""

    service_time_ms: float
    service_jitter_ms: float
    load_capacity_fps: float  # flows/second the device handles at load 1.0
    energy_j_per_req: float | None = None


DEVICE_PROFILES: dict[str, DeviceProfile] = {
    "smart_camera": DeviceProfile(2.0, 0.5, 1000.0),
    "industrial_sensor": DeviceProfile(5.0, 1.0, 400.0),
    "smart_meter": DeviceProfile(3.0, 0.8, 600.0),
}


class EventKind(str, Enum):
    DETECTION = "Detection"
    ACTION = "Action"
    ADMISSION = "Admission"
    METRICS_SAMPLE = "MetricsSample"


@dataclass(frozen=True, slots=True)
class TelemetryEvent:
    kind: EventKind
    node_id: str
    window_id: int
    timestamp: float
    payload: Mapping[str, object]

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind.value,
            "node": self.node_id,
            "window": self.window_id,
            "ts": self.timestamp,
            "payload": dict(self.payload),
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "TelemetryEvent":
        return cls(
            kind=EventKind(obj["kind"]),
            node_id=obj["node"],
            window_id=int(obj["window"]),
            timestamp=float(obj["ts"]),
            payload=dict(obj["payload"]),
        )


def events_to_jsonl(events: Iterable[TelemetryEvent], sink: IO[str]) -> None:
    """Serialize events as newline-delimited JSON (the telemetry wire format)."""
    for event in events:
        sink.write(json.dumps(event.to_json_obj(), sort_keys=True, separators=(",", ":")) + "\n")


def events_from_jsonl(source: IO[str]) -> list[TelemetryEvent]:
    events = []
    for line in source:
        line = line.strip()
        if line:
            events.append(TelemetryEvent.from_json_obj(json.loads(line)))
    return events


# --- scenario configuration --------------------------------------------------


@dataclass(frozen=True, slots=True)
class NodeConfig:
    node_id: str
    profile: str = "smart_camera"
    benign_rate: float = 20.0  # flows/second
    benign_pool: int = 8
    energy_j_per_req: float | None = None


@dataclass(frozen=True, slots=True)
class AttackPhase:
    class_name: str
    rate: float  # flows/second
    start: float
    stop: float
    source_pool: int
    node_id: str | None = None  # defaults to the first node


@dataclass(frozen=True, slots=True)
class BackendConfig:
    kind: str = "baseline"
    address: str = ""
    train_n: int = 4200
    train_seed: int = 11
    train_proportions: Mapping[int, float] | None = None
    timeout: float = 5.0
    retries: int = 2


@dataclass(frozen=True, slots=True)
class ReplayConfig:
    path: str
    format: str = "delimited"
    rate: float = 100.0  # flows/second across all nodes


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    seed: int
    horizon_seconds: float
    nodes: tuple[NodeConfig, ...]
    attacks: tuple[AttackPhase, ...] = ()
    window_seconds: float = 1.0
    thresholds: PreventionThresholds = field(default_factory=PreventionThresholds)
    policy: EnforcementPolicy = field(default_factory=EnforcementPolicy)
    backend: BackendConfig = field(default_factory=BackendConfig)
    captcha_solve_fraction: float = 0.5
    replay: ReplayConfig | None = None
    strict_printed_taxonomy: bool = False
    playbook: Mapping[str, frozenset[Action]] | None = None

    _KNOWN_KEYS = frozenset(
        {
            "seed",
            "horizon_seconds",
            "nodes",
            "attacks",
            "window_seconds",
            "thresholds",
            "enforcement",
            "backend",
            "captcha_solve_fraction",
            "replay",
            "strict_printed_taxonomy",
            "playbook",
        }
    )

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ScenarioConfig":
        unknown = set(doc) - cls._KNOWN_KEYS
        if unknown:
            raise ConfigInvalid(f"unknown scenario keys: {sorted(unknown)}")
        try:
            nodes = tuple(NodeConfig(**n) for n in doc.get("nodes", []))
            attacks = tuple(AttackPhase(**a) for a in doc.get("attacks", []))
            backend = BackendConfig(**doc.get("backend", {}))
            thresholds = PreventionThresholds(**doc.get("thresholds", {}))
            policy = EnforcementPolicy(**doc.get("enforcement", {}))
            replay = ReplayConfig(**doc["replay"]) if "replay" in doc else None
            playbook_table = None
            if "playbook" in doc:
                overrides = {
                    name: frozenset(Action(value) for value in values)
                    for name, values in doc["playbook"].items()
                }
                playbook_table = {**DEFAULT_PLAYBOOK, **overrides}
            cfg = cls(
                seed=doc["seed"],
                horizon_seconds=doc["horizon_seconds"],
                nodes=nodes,
                attacks=attacks,
                window_seconds=doc.get("window_seconds", 1.0),
                thresholds=thresholds,
                policy=policy,
                backend=backend,
                captcha_solve_fraction=doc.get("captcha_solve_fraction", 0.5),
                replay=replay,
                strict_printed_taxonomy=doc.get("strict_printed_taxonomy", False),
                playbook=playbook_table,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad scenario config: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.seed, int):
            raise ConfigInvalid("seed must be an integer")
        if self.horizon_seconds <= 0 or self.window_seconds <= 0:
            raise ConfigInvalid("horizon and window must be positive")
        if not self.nodes:
            raise ConfigInvalid("at least one edge node is required")
        ids = [n.node_id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigInvalid("node ids must be unique")
        for node in self.nodes:
            if node.profile not in DEVICE_PROFILES:
                raise ConfigInvalid(
                    f"unknown device profile {node.profile!r}; "
                    f"known: {sorted(DEVICE_PROFILES)}"
                )
            if node.benign_rate <= 0 or node.benign_pool < 1:
                raise ConfigInvalid(f"node {node.node_id}: rates and pools must be positive")
        taxonomy = load_taxonomy(self.strict_printed_taxonomy)
        for attack in self.attacks:
            try:
                taxonomy.label_for_name(attack.class_name)
            except EdgeShieldError as exc:
                raise ConfigInvalid(f"attack class: {exc}") from exc
            if attack.rate <= 0 or attack.source_pool < 1:
                raise ConfigInvalid("attack rate and source_pool must be positive")
            if not (0 <= attack.start < attack.stop <= self.horizon_seconds):
                raise ConfigInvalid(
                    f"attack window [{attack.start}, {attack.stop}] outside horizon"
                )
            if attack.node_id is not None and attack.node_id not in ids:
                raise ConfigInvalid(f"attack targets unknown node {attack.node_id!r}")
        if self.backend.kind not in ("baseline", "remote"):
            raise ConfigInvalid(f"unknown backend kind {self.backend.kind!r}")
        if self.backend.kind == "remote" and not self.backend.address:
            raise ConfigInvalid("remote backend requires an address")
        if not 0.0 <= self.captcha_solve_fraction <= 1.0:
            raise ConfigInvalid("captcha_solve_fraction must be in [0, 1]")
        if self.replay is not None and self.replay.rate <= 0:
            raise ConfigInvalid("replay rate must be positive")


def load_scenario(source: str | Path | IO[str]) -> ScenarioConfig:
    if isinstance(source, (str, Path)):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigInvalid(f"cannot read scenario {source}: {exc}") from exc
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"scenario is not valid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(doc)


# --- snapshot ----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class AdmissionTally:
    allowed: int = 0
    denied: int = 0
    challenged: int = 0
    rate_limited: int = 0
    redirected: int = 0

    @property
    def total(self) -> int:
        return self.allowed + self.denied + self.challenged + self.rate_limited + self.redirected

    def to_dict(self) -> dict:
        return {
            "allowed": self.allowed,
            "denied": self.denied,
            "challenged": self.challenged,
            "rate_limited": self.rate_limited,
            "redirected": self.redirected,
        }


_VERDICT_FIELD = {
    Verdict.ALLOW.value: "allowed",
    Verdict.DENY.value: "denied",
    Verdict.CHALLENGE.value: "challenged",
    Verdict.RATE_LIMITED.value: "rate_limited",
    Verdict.REDIRECT_HONEYPOT.value: "redirected",
}


@dataclass(frozen=True, slots=True)
class NodeSnapshot:
    node_id: str
    flows: int
    benign: AdmissionTally
    attack: AdmissionTally
    detections: int
    correct: int
    accuracy: float
    latency_mean: float
    latency_p95: float
    throughput_req_per_sec: float
    mean_load: float
    blocklist_size: int

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "flows": self.flows,
            "benign": self.benign.to_dict(),
            "attack": self.attack.to_dict(),
            "detections": self.detections,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "latency_mean": self.latency_mean,
            "latency_p95": self.latency_p95,
            "throughput_req_per_sec": self.throughput_req_per_sec,
            "mean_load": self.mean_load,
            "blocklist_size": self.blocklist_size,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "NodeSnapshot":
        return cls(
            node_id=obj["node_id"],
            flows=obj["flows"],
            benign=AdmissionTally(**obj["benign"]),
            attack=AdmissionTally(**obj["attack"]),
            detections=obj["detections"],
            correct=obj["correct"],
            accuracy=obj["accuracy"],
            latency_mean=obj["latency_mean"],
            latency_p95=obj["latency_p95"],
            throughput_req_per_sec=obj["throughput_req_per_sec"],
            mean_load=obj["mean_load"],
            blocklist_size=obj["blocklist_size"],
        )


@dataclass(frozen=True, slots=True)
class MonitoringSnapshot:
    """Aggregated view the cloud side reports at horizon end."""

    nodes: tuple[NodeSnapshot, ...]
    flows: int
    benign: AdmissionTally
    attack: AdmissionTally
    detections: int
    correct: int
    accuracy: float
    latency_mean: float
    latency_p95: float
    throughput_req_per_sec: float
    detection_to_mitigation_seconds: float | None
    energy_j_per_req: float | None
    blocklist_total: int
    confusion: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {
            "nodes": [node.to_dict() for node in self.nodes],
            "flows": self.flows,
            "benign": self.benign.to_dict(),
            "attack": self.attack.to_dict(),
            "detections": self.detections,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "latency_mean": self.latency_mean,
            "latency_p95": self.latency_p95,
            "throughput_req_per_sec": self.throughput_req_per_sec,
            "detection_to_mitigation_seconds": self.detection_to_mitigation_seconds,
            "energy_j_per_req": self.energy_j_per_req,
            "blocklist_total": self.blocklist_total,
            "confusion": [list(row) for row in self.confusion],
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "MonitoringSnapshot":
        return cls(
            nodes=tuple(NodeSnapshot.from_dict(n) for n in obj["nodes"]),
            flows=obj["flows"],
            benign=AdmissionTally(**obj["benign"]),
            attack=AdmissionTally(**obj["attack"]),
            detections=obj["detections"],
            correct=obj["correct"],
            accuracy=obj["accuracy"],
            latency_mean=obj["latency_mean"],
            latency_p95=obj["latency_p95"],
            throughput_req_per_sec=obj["throughput_req_per_sec"],
            detection_to_mitigation_seconds=obj["detection_to_mitigation_seconds"],
            energy_j_per_req=obj["energy_j_per_req"],
            blocklist_total=obj["blocklist_total"],
            confusion=tuple(tuple(row) for row in obj["confusion"]),
        )


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _p95(values: Sequence[float]) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    return ordered[min(len(ordered) - 1, max(0, math.ceil(0.95 * len(ordered)) - 1))]


def _throughput(timestamps: Sequence[float]) -> float:
    if len(timestamps) < 2:
        return 0.0
    span = timestamps[-1] - timestamps[0]
    return len(timestamps) / span if span > 0 else 0.0


class _NodeAccumulator:
    def __init__(self, node_id: str):
        self.node_id = node_id
        self.tallies = {"benign": AdmissionTally().to_dict(), "attack": AdmissionTally().to_dict()}
        self.detections = 0
        self.correct = 0
        self.latencies: list[float] = []
        self.detection_ts: list[float] = []
        self.loads: list[float] = []
        self.blocklist_size = 0
        self.last_ts = -math.inf

    def snapshot(self) -> NodeSnapshot:
        detections = self.detections
        return NodeSnapshot(
            node_id=self.node_id,
            flows=sum(self.tallies["benign"].values()) + sum(self.tallies["attack"].values()),
            benign=AdmissionTally(**self.tallies["benign"]),
            attack=AdmissionTally(**self.tallies["attack"]),
            detections=detections,
            correct=self.correct,
            accuracy=self.correct / detections if detections else 0.0,
            latency_mean=_mean(self.latencies),
            latency_p95=_p95(self.latencies),
            throughput_req_per_sec=_throughput(self.detection_ts),
            mean_load=_mean(self.loads),
            blocklist_size=self.blocklist_size,
        )


def aggregate(events: Iterable[TelemetryEvent]) -> MonitoringSnapshot:
    """Fold a merged, per-node-ordered event stream into a snapshot.

    Raises :class:`OutOfOrderEvents` if any node's timestamps go backwards.
    """
    nodes: dict[str, _NodeAccumulator] = {}
    cm = ConfusionMatrix(NUM_CLASSES)
    all_latencies: list[float] = []
    all_detection_ts: list[float] = []
    first_action_ts: float | None = None
    first_attack_ts: float | None = None
    energy_total = 0.0
    energy_seen = False

    for index, event in enumerate(events):
        acc = nodes.get(event.node_id)
        if acc is None:
            acc = nodes[event.node_id] = _NodeAccumulator(event.node_id)
        if event.timestamp < acc.last_ts:
            raise OutOfOrderEvents(event.node_id, index)
        acc.last_ts = event.timestamp
        payload = event.payload
        if event.kind is EventKind.ADMISSION:
            truth = int(payload["truth"])
            side = "benign" if truth == BENIGN_LABEL else "attack"
            acc.tallies[side][_VERDICT_FIELD[str(payload["verdict"])]] += 1
            if truth != BENIGN_LABEL and first_attack_ts is None:
                first_attack_ts = event.timestamp
        elif event.kind is EventKind.DETECTION:
            predicted = int(payload["predicted"])
            truth = int(payload["truth"])
            latency = float(payload["latency"])
            acc.detections += 1
            acc.correct += predicted == truth
            acc.latencies.append(latency)
            acc.detection_ts.append(event.timestamp)
            all_latencies.append(latency)
            all_detection_ts.append(event.timestamp)
            cm.add(truth, predicted)
        elif event.kind is EventKind.ACTION:
            if first_action_ts is None and payload.get("actions"):
                first_action_ts = event.timestamp
            acc.blocklist_size = int(payload.get("blocklist_size", acc.blocklist_size))
        elif event.kind is EventKind.METRICS_SAMPLE:
            acc.loads.append(float(payload["load"]))
            acc.blocklist_size = int(payload.get("blocklist_size", acc.blocklist_size))
            if "energy_j" in payload:
                energy_total += float(payload["energy_j"])
                energy_seen = True

    node_snapshots = tuple(nodes[node_id].snapshot() for node_id in sorted(nodes))
    benign = AdmissionTally(
        **{
            key: sum(getattr(n.benign, key) for n in node_snapshots)
            for key in AdmissionTally().to_dict()
        }
    )
    attack = AdmissionTally(
        **{
            key: sum(getattr(n.attack, key) for n in node_snapshots)
            for key in AdmissionTally().to_dict()
        }
    )
    detections = sum(n.detections for n in node_snapshots)
    correct = sum(n.correct for n in node_snapshots)
    d2m = None
    if first_action_ts is not None and first_attack_ts is not None:
        d2m = first_action_ts - first_attack_ts
    return MonitoringSnapshot(
        nodes=node_snapshots,
        flows=benign.total + attack.total,
        benign=benign,
        attack=attack,
        detections=detections,
        correct=correct,
        accuracy=correct / detections if detections else 0.0,
        latency_mean=_mean(all_latencies),
        latency_p95=_p95(all_latencies),
        throughput_req_per_sec=_throughput(all_detection_ts),
        detection_to_mitigation_seconds=d2m,
        energy_j_per_req=(energy_total / detections) if energy_seen and detections else None,
        blocklist_total=sum(n.blocklist_size for n in node_snapshots),
        confusion=tuple(tuple(row) for row in cm.rows()),
    )


# --- the simulation loop -----------------------------------------------------


def _attacker_ip(index: int) -> str:
    return f"203.{index // 250}.113.{index % 250 + 1}"


def _benign_ip(node_index: int, index: int) -> str:
    return f"10.{node_index}.0.{index % 250 + 1}"


def _build_backend(cfg: ScenarioConfig) -> ClassifierBackend:
    if cfg.backend.kind == "remote":
        return RemoteBackend(
            cfg.backend.address, timeout=cfg.backend.timeout, retries=cfg.backend.retries
        )
    proportions = cfg.backend.train_proportions
    if proportions is None:
        proportions = {label: 1.0 / NUM_CLASSES for label in range(1, NUM_CLASSES + 1)}
    else:
        proportions = {int(k): float(v) for k, v in proportions.items()}
    training = synthesize(proportions, cfg.backend.train_n, cfg.backend.train_seed)
    return fit_baseline_backend(training, seed=cfg.backend.train_seed)


def _generated_traffic(
    cfg: ScenarioConfig, taxonomy: Taxonomy
) -> dict[str, list[tuple[float, object, int]]]:
    """Per-node arrival schedule: (timestamp, flow, truth_label)."""
    profiles = synth_profiles()["classes"]
    schedule: dict[str, list[tuple[float, object, int]]] = {n.node_id: [] for n in cfg.nodes}
    for node_index, node in enumerate(cfg.nodes):
        rng = random.Random(f"{cfg.seed}:traffic:{node.node_id}")
        count = int(math.floor(cfg.horizon_seconds * node.benign_rate))
        for k in range(count):
            ts = k / node.benign_rate
            flow = _synth_flow(BENIGN_LABEL, profiles[str(BENIGN_LABEL)], rng)
            flow = replace(
                flow, src_ip=_benign_ip(node_index, rng.randrange(node.benign_pool)), timestamp=ts
            )
            schedule[node.node_id].append((ts, flow, BENIGN_LABEL))
    for attack_index, attack in enumerate(cfg.attacks):
        node_id = attack.node_id or cfg.nodes[0].node_id
        label = taxonomy.label_for_name(attack.class_name)
        rng = random.Random(f"{cfg.seed}:attack:{attack_index}")
        k = 0
        while True:
            ts = attack.start + k / attack.rate
            if ts >= min(attack.stop, cfg.horizon_seconds):
                break
            flow = _synth_flow(label, profiles[str(label)], rng)
            flow = replace(flow, src_ip=_attacker_ip(k % attack.source_pool), timestamp=ts)
            schedule[node_id].append((ts, flow, label))
            k += 1
    for node_flows in schedule.values():
        node_flows.sort(key=lambda item: item[0])
    return schedule


def _replayed_traffic(
    cfg: ScenarioConfig, taxonomy: Taxonomy
) -> dict[str, list[tuple[float, object, int]]]:
    replay = cfg.replay
    assert replay is not None
    dataset, _ = ingest(replay.path, format=replay.format, taxonomy=taxonomy)
    schedule: dict[str, list[tuple[float, object, int]]] = {n.node_id: [] for n in cfg.nodes}
    node_ids = [n.node_id for n in cfg.nodes]
    for index, (flow, label) in enumerate(dataset.records):
        if flow.src_ip is None:
            raise ConfigInvalid(f"replay record {index} has no src_ip; prevention requires one")
        ts = index / replay.rate
        if ts >= cfg.horizon_seconds:
            break
        schedule[node_ids[index % len(node_ids)]].append((ts, replace(flow, timestamp=ts), label))
    return schedule


def run_scenario(
    cfg: ScenarioConfig, backend: ClassifierBackend | None = None
) -> tuple[list[TelemetryEvent], MonitoringSnapshot]:
    """Run one deterministic scenario; returns (events, snapshot).

    A backend may be injected (e.g. an already-fitted baseline); otherwise
    one is built from the config.  Raises :class:`ConfigInvalid` or backend
    errors.
    """
    cfg.validate()
    taxonomy = load_taxonomy(cfg.strict_printed_taxonomy)
    backend = backend or _build_backend(cfg)
    traffic = (
        _replayed_traffic(cfg, taxonomy) if cfg.replay is not None else _generated_traffic(cfg, taxonomy)
    )

    per_node_events: dict[str, list[TelemetryEvent]] = {}
    for node in cfg.nodes:
        per_node_events[node.node_id] = _run_edge_node(
            cfg, node, traffic[node.node_id], backend, taxonomy
        )

    merged: list[TelemetryEvent] = []
    order = {n.node_id: i for i, n in enumerate(cfg.nodes)}
    sequenced = []
    for node_id, node_events in per_node_events.items():
        for seq, event in enumerate(node_events):
            sequenced.append((event.timestamp, order[node_id], seq, event))
    sequenced.sort(key=lambda item: item[:3])
    merged = [item[3] for item in sequenced]
    return merged, aggregate(merged)


def _run_edge_node(
    cfg: ScenarioConfig,
    node: NodeConfig,
    arrivals: Sequence[tuple[float, object, int]],
    backend: ClassifierBackend,
    taxonomy: Taxonomy,
) -> list[TelemetryEvent]:
    profile = DEVICE_PROFILES[node.profile]
    energy_per_req = (
        node.energy_j_per_req if node.energy_j_per_req is not None else profile.energy_j_per_req
    )
    rng = random.Random(f"{cfg.seed}:node:{node.node_id}")
    state = EdgeState()
    events: list[TelemetryEvent] = []
    window = cfg.window_seconds
    window_id = 0
    window_start = 0.0
    buffer: list = []  # (flow, prediction) admitted this window
    buffer_ts: list[float] = []
    window_flows = 0
    episode_start: float | None = None

    def close_window(window_end: float) -> None:
        nonlocal buffer, window_flows, episode_start
        load = min(1.0, window_flows / (profile.load_capacity_fps * window))
        malicious = [
            ts for (_, prediction), ts in zip(buffer, buffer_ts) if prediction.predicted != BENIGN_LABEL
        ]
        if malicious:
            if episode_start is None:
                episode_start = malicious[0]
            ctx = characterize(
                buffer,
                window,
                load,
                episode_start,
                now=window_end,
                thresholds=cfg.thresholds,
                window_id=window_id,
            )
            if ctx.attack_type == DDOS_LABEL:
                actions = decide(ctx, cfg.thresholds)
            else:
                actions = playbook(ctx.attack_type, table=cfg.playbook, taxonomy=taxonomy)
            apply(actions, ctx, state, window_end, cfg.policy)
            active_blocks = sum(1 for expiry in state.blocklist.values() if expiry > window_end)
            events.append(
                TelemetryEvent(
                    EventKind.ACTION,
                    node.node_id,
                    window_id,
                    window_end,
                    {
                        "actions": sorted(action.value for action in actions),
                        "attack_type": ctx.attack_type,
                        "intensity": ctx.intensity.value,
                        "source_count": len(ctx.source_ips),
                        "blocklist_size": active_blocks,
                    },
                )
            )
        else:
            episode_start = None
        sample: dict[str, object] = {
            "load": load,
            "flows": window_flows,
            "blocklist_size": sum(1 for expiry in state.blocklist.values() if expiry > window_end),
        }
        if energy_per_req is not None:
            sample["energy_j"] = energy_per_req * len(buffer)
        events.append(
            TelemetryEvent(EventKind.METRICS_SAMPLE, node.node_id, window_id, window_end, sample)
        )
        buffer = []
        buffer_ts.clear()
        window_flows = 0

    for ts, flow, truth in arrivals:
        while ts >= window_start + window:
            close_window(window_start + window)
            window_start += window
            window_id += 1
        window_flows += 1
        verdict = admit(flow, state, ts)
        events.append(
            TelemetryEvent(
                EventKind.ADMISSION,
                node.node_id,
                window_id,
                ts,
                {"verdict": verdict.value, "truth": truth, "src": flow.src_ip},
            )
        )
        if verdict is Verdict.ALLOW:
            prediction, _ = classify(flow, backend)
            latency = (
                profile.service_time_ms
                + rng.uniform(-profile.service_jitter_ms, profile.service_jitter_ms)
            ) / 1000.0
            events.append(
                TelemetryEvent(
                    EventKind.DETECTION,
                    node.node_id,
                    window_id,
                    ts,
                    {"predicted": prediction.predicted, "truth": truth, "latency": latency},
                )
            )
            buffer.append((flow, prediction))
            buffer_ts.append(ts)
        elif verdict is Verdict.CHALLENGE:
            if truth == BENIGN_LABEL and rng.random() < cfg.captcha_solve_fraction:
                solve_challenge(state, flow.src_ip)

    # drain the remaining windows up to the horizon
    while window_start < cfg.horizon_seconds:
        close_window(min(window_start + window, cfg.horizon_seconds))
        window_start += window
        window_id += 1
    return events


# --- reports -----------------------------------------------------------------


def emit_report(snapshot: MonitoringSnapshot, format: str = "json", model: str = "") -> str:
    """Serialize a snapshot: machine-readable JSON or a text dashboard."""
    if format == "json":
        return json.dumps(snapshot.to_dict(), sort_keys=True, indent=2) + "\n"
    if format != "text":
        raise ValueError(f"unknown report format: {format!r}")
    return _text_report(snapshot, model)


def parse_report(text: str) -> MonitoringSnapshot:
    return MonitoringSnapshot.from_dict(json.loads(text))


def _metric_row(snapshot: MonitoringSnapshot, model: str) -> str:
    accuracy = precision = recall = f1 = 0.0
    if snapshot.confusion:
        cm = ConfusionMatrix.from_rows([list(row) for row in snapshot.confusion])
        if cm.total():
            accuracy, precision, recall = accuracy_precision_recall(cm)
            f1 = micro_f1(cm)
    energy = f"{snapshot.energy_j_per_req:.4f}" if snapshot.energy_j_per_req is not None else "-"
    return (
        f"{model or 'n/a':<18} {accuracy:<9.4f} {f1:<9.4f} {precision:<10.4f} "
        f"{recall:<9.4f} {energy:<15} {snapshot.throughput_req_per_sec:.2f}"
    )


def _text_report(snapshot: MonitoringSnapshot, model: str) -> str:
    lines = []
    lines.append("edge-cloud monitoring snapshot")
    lines.append("=" * 30)
    lines.append(
        f"flows: {snapshot.flows}  detections: {snapshot.detections}  "
        f"blocklist: {snapshot.blocklist_total}"
    )
    d2m = (
        f"{snapshot.detection_to_mitigation_seconds:.3f}s"
        if snapshot.detection_to_mitigation_seconds is not None
        else "-"
    )
    lines.append(
        f"latency mean/p95: {snapshot.latency_mean * 1000:.3f}ms / "
        f"{snapshot.latency_p95 * 1000:.3f}ms  detection-to-mitigation: {d2m}"
    )
    lines.append("")
    lines.append("admissions (benign / attack)")
    for key in ("allowed", "denied", "challenged", "rate_limited", "redirected"):
        lines.append(
            f"  {key:<13} {getattr(snapshot.benign, key):>8} / {getattr(snapshot.attack, key):<8}"
        )
    lines.append("")
    lines.append(
        "Model              Accuracy  F1-Score  Precision  Recall    "
        "Energy (J/Req)  Inference (Req/Sec)"
    )
    lines.append(_metric_row(snapshot, model))
    lines.append("")
    present = [
        i
        for i in range(len(snapshot.confusion))
        if any(snapshot.confusion[i]) or any(row[i] for row in snapshot.confusion)
    ]
    if present:
        lines.append("confusion matrix (true rows x predicted columns)")
        header = "      " + " ".join(f"{i + 1:>7}" for i in present)
        lines.append(header)
        for i in present:
            row = " ".join(f"{snapshot.confusion[i][j]:>7}" for j in present)
            lines.append(f"{i + 1:>5} {row}")
    lines.append("")
    lines.append("per-node")
    for node in snapshot.nodes:
        lines.append(
            f"  {node.node_id}: flows={node.flows} accuracy={node.accuracy:.4f} "
            f"load={node.mean_load:.3f} blocklist={node.blocklist_size}"
        )
    return "\n".join(lines) + "\n"
