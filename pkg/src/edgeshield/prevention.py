"""Edge-side attack prevention: decision procedure and stateful enforcement.

DDoS windows are characterized by intensity, source cardinality, system load
and duration, then mapped to mitigation actions by four independent branch
groups; every other attack class routes through a configurable playbook.
Enforcement state (blocklist, per-source rate limits, CAPTCHA challenges,
honeypot redirects, device isolation) is owned by a single edge node and
applied against admitted traffic.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Mapping, Sequence

from .errors import ConfigInvalid, EmptyWindow, MissingSourceIp
from .flows import FlowRecord
from .metrics import Prediction
from .taxonomy import BENIGN_LABEL, DDOS_LABEL, Taxonomy, load_taxonomy


class Intensity(str, Enum):
    LOW = "Low"
    MODERATE = "Moderate"
    EXTREME = "Extreme"


class Action(str, Enum):
    RATE_LIMITING = "rate_limiting"
    BLOCK_IPS = "block_ips"
    REDIRECT_TRAFFIC = "redirect_traffic"
    IP_FILTERING = "ip_filtering"
    CAPTCHA_DEPLOYMENT = "captcha_deployment"
    AGGRESSIVE_BLOCKING = "aggressive_blocking"
    HONEYPOT_REDIRECTION = "honeypot_redirection"
    MONITOR = "monitor"
    ISOLATE = "isolate"
    ALERT = "alert"


class Verdict(str, Enum):
    ALLOW = "Allow"
    DENY = "Deny"
    CHALLENGE = "Challenge"
    REDIRECT_HONEYPOT = "RedirectHoneypot"
    RATE_LIMITED = "RateLimited"


@dataclass(frozen=True, slots=True)
class PreventionThresholds:
    """Decision boundaries for the DDoS branches.

    ``theta_moderate``/``theta_extreme`` quantize malicious flows/second,
    ``n_botnet`` separates "few sources" from "many sources", and
    ``load_max``/``duration_max`` trigger the escalation branches.
    """

    theta_moderate: float = 50.0
    theta_extreme: float = 500.0
    n_botnet: int = 10
    load_max: float = 0.8
    duration_max: float = 60.0

    def __post_init__(self):
        if not 0 < self.theta_moderate < self.theta_extreme:
            raise ConfigInvalid("need 0 < theta_moderate < theta_extreme")
        if self.n_botnet < 2:
            raise ConfigInvalid("n_botnet must be at least 2")
        if not 0 < self.load_max <= 1:
            raise ConfigInvalid("load_max must be in (0, 1]")
        if self.duration_max <= 0:
            raise ConfigInvalid("duration_max must be positive")

    def quantize(self, flows_per_second: float) -> Intensity:
        if flows_per_second >= self.theta_extreme:
            return Intensity.EXTREME
        if flows_per_second >= self.theta_moderate:
            return Intensity.MODERATE
        return Intensity.LOW


@dataclass(frozen=True, slots=True)
class EnforcementPolicy:
    """Lifetimes and budgets used when actions are applied."""

    standard_block_seconds: float = 300.0
    aggressive_block_seconds: float = 3600.0
    rate_limit_budget: float = 5.0  # tokens/second per source


DEFAULT_THRESHOLDS = PreventionThresholds()
DEFAULT_POLICY = EnforcementPolicy()


@dataclass(frozen=True, slots=True)
class AttackContext:
    """One detection window summarized for the decision procedure."""

    attack_type: int
    intensity: Intensity
    intensity_raw: float
    source_ips: frozenset[str]
    system_load: float
    duration_seconds: float
    window_id: int = 0


@dataclass(frozen=True, slots=True)
class ActionLogEntry:
    window_id: int
    actions: frozenset[Action]
    source_count: int
    timestamp: float


@dataclass(slots=True)
class EdgeState:
    """Enforcement state of one edge node (single-owner mutable)."""

    blocklist: dict[str, float] = field(default_factory=dict)  # ip -> expiry time
    rate_limits: dict[str, float] = field(default_factory=dict)  # ip -> tokens/sec
    captcha_pending: set[str] = field(default_factory=set)
    honeypot_redirects: set[str] = field(default_factory=set)
    isolated_devices: set[str] = field(default_factory=set)
    action_log: list[ActionLogEntry] = field(default_factory=list)
    device_map: dict[str, str] = field(default_factory=dict)  # ip -> device id
    bucket_state: dict[str, tuple[float, float]] = field(default_factory=dict)

    def blocked(self, ip: str, now: float) -> bool:
        expiry = self.blocklist.get(ip)
        return expiry is not None and now < expiry


def characterize(
    window: Sequence[tuple[FlowRecord, Prediction]],
    window_seconds: float,
    load: float,
    attack_start: float,
    now: float,
    thresholds: PreventionThresholds = DEFAULT_THRESHOLDS,
    window_id: int = 0,
) -> AttackContext:
    """Summarize one detection window into an :class:`AttackContext`.

    The attack type is the majority label among flows predicted malicious
    (ties resolve to the lowest label id); a window with no malicious
    predictions characterizes as benign with no sources.  Raises
    :class:`EmptyWindow` and :class:`MissingSourceIp`.
    """
    if not window:
        raise EmptyWindow("cannot characterize an empty window")
    if window_seconds <= 0:
        raise EmptyWindow("window_seconds must be positive")
    votes: Counter[int] = Counter()
    sources: set[str] = set()
    malicious = 0
    for index, (flow, prediction) in enumerate(window):
        if prediction.predicted == BENIGN_LABEL:
            continue
        if flow.src_ip is None:
            raise MissingSourceIp(index)
        votes[prediction.predicted] += 1
        sources.add(flow.src_ip)
        malicious += 1
    if malicious == 0:
        attack_type = BENIGN_LABEL
    else:
        top = max(votes.values())
        attack_type = min(label for label, count in votes.items() if count == top)
    rate = malicious / window_seconds
    return AttackContext(
        attack_type=attack_type,
        intensity=thresholds.quantize(rate),
        intensity_raw=rate,
        source_ips=frozenset(sources),
        system_load=load,
        duration_seconds=max(0.0, now - attack_start),
        window_id=window_id,
    )


def decide(
    ctx: AttackContext, thresholds: PreventionThresholds = DEFAULT_THRESHOLDS
) -> frozenset[Action]:
    """Mitigation decision for one DDoS window.

    Non-DDoS contexts produce no actions here (they belong to the
    playbook).  The four branch groups are independent:

    * intensity: Moderate adds rate limiting, Extreme adds blocking plus
      traffic redirection, Low adds nothing;
    * source cardinality: at most ``n_botnet`` distinct sources adds IP
      filtering, more adds CAPTCHA deployment;
    * system load above ``load_max`` adds aggressive blocking;
    * duration above ``duration_max`` adds honeypot redirection.
    """
    if ctx.attack_type != DDOS_LABEL:
        return frozenset()
    actions: set[Action] = set()
    if ctx.intensity is Intensity.MODERATE:
        actions.add(Action.RATE_LIMITING)
    elif ctx.intensity is Intensity.EXTREME:
        actions.add(Action.BLOCK_IPS)
        actions.add(Action.REDIRECT_TRAFFIC)
    if len(ctx.source_ips) <= thresholds.n_botnet:
        actions.add(Action.IP_FILTERING)
    else:
        actions.add(Action.CAPTCHA_DEPLOYMENT)
    if ctx.system_load > thresholds.load_max:
        actions.add(Action.AGGRESSIVE_BLOCKING)
    if ctx.duration_seconds > thresholds.duration_max:
        actions.add(Action.HONEYPOT_REDIRECTION)
    return frozenset(actions)


# Shipped playbook for non-DDoS classes, keyed by canonical class name.
DEFAULT_PLAYBOOK: dict[str, frozenset[Action]] = {
    "Attack": frozenset({Action.ALERT}),
    "Backdoor": frozenset({Action.ISOLATE, Action.ALERT}),
    "Benign": frozenset(),
    "C&C": frozenset({Action.ISOLATE, Action.ALERT}),
    "C&C-HeartBeat": frozenset({Action.ISOLATE, Action.ALERT}),
    "C&C-FileDownload": frozenset({Action.ISOLATE, Action.ALERT}),
    "C&C-HeartBeat-FileDownload": frozenset({Action.ISOLATE, Action.ALERT}),
    "C&C-Mirai": frozenset({Action.ISOLATE, Action.ALERT}),
    "C&C-Torii": frozenset({Action.ISOLATE, Action.ALERT}),
    "DDoS": frozenset(),  # handled by decide()
    "DoS": frozenset({Action.RATE_LIMITING, Action.ALERT}),
    "FileDownload": frozenset({Action.ALERT}),
    "Injection": frozenset({Action.ALERT}),
    "MITM": frozenset({Action.ALERT}),
    "Okiru": frozenset({Action.ISOLATE, Action.ALERT}),
    "Okiru-Attack": frozenset({Action.ISOLATE, Action.ALERT}),
    "PartOfAHorizontalPortScan": frozenset({Action.MONITOR}),
    "Password": frozenset({Action.ALERT}),
    "Ransomware": frozenset({Action.ISOLATE, Action.ALERT}),
    "Scanning": frozenset({Action.MONITOR}),
    "XSS": frozenset({Action.ALERT}),
}


def playbook(
    attack_type: int,
    table: Mapping[str, frozenset[Action]] | None = None,
    taxonomy: Taxonomy | None = None,
) -> frozenset[Action]:
    """Configured action set for a non-DDoS attack class.

    Raises :class:`UnknownClass` for labels outside the taxonomy.
    """
    taxonomy = taxonomy or load_taxonomy()
    name = taxonomy.canonical_name(attack_type)
    table = table if table is not None else DEFAULT_PLAYBOOK
    return frozenset(table.get(name, frozenset()))


def apply(
    actions: frozenset[Action],
    ctx: AttackContext,
    state: EdgeState,
    now: float,
    policy: EnforcementPolicy = DEFAULT_POLICY,
) -> EdgeState:
    """Apply an action set against the edge state.

    Re-applying the same action set for the same window is a no-op, so the
    per-window decision loop is idempotent.  Blocking always supersedes a
    pending CAPTCHA challenge for the same source.
    """
    actions = frozenset(actions)
    if state.action_log:
        last = state.action_log[-1]
        if last.window_id == ctx.window_id and last.actions == actions:
            return state
        if ctx.window_id < last.window_id:
            raise ValueError(
                f"window_id went backwards: {ctx.window_id} after {last.window_id}"
            )

    sources = sorted(ctx.source_ips)

    def block(ips, seconds):
        expiry = now + seconds
        for ip in ips:
            current = state.blocklist.get(ip)
            state.blocklist[ip] = expiry if current is None else max(current, expiry)
            state.captcha_pending.discard(ip)

    if Action.RATE_LIMITING in actions:
        for ip in sources:
            state.rate_limits[ip] = policy.rate_limit_budget
            state.bucket_state[ip] = (policy.rate_limit_budget, now)
    if Action.IP_FILTERING in actions:
        block(sources, policy.standard_block_seconds)
    if Action.BLOCK_IPS in actions:
        block(sources, policy.standard_block_seconds)
    if Action.AGGRESSIVE_BLOCKING in actions:
        block(sources, policy.aggressive_block_seconds)
        for ip in sources:
            state.rate_limits.pop(ip, None)
            state.bucket_state.pop(ip, None)
    if Action.REDIRECT_TRAFFIC in actions or Action.HONEYPOT_REDIRECTION in actions:
        state.honeypot_redirects.update(sources)
    if Action.CAPTCHA_DEPLOYMENT in actions:
        for ip in sources:
            if not state.blocked(ip, now):
                state.captcha_pending.add(ip)
    if Action.ISOLATE in actions:
        for ip in sources:
            state.isolated_devices.add(state.device_map.get(ip, ip))

    state.action_log.append(
        ActionLogEntry(
            window_id=ctx.window_id,
            actions=actions,
            source_count=len(ctx.source_ips),
            timestamp=now,
        )
    )
    return state


def admit(flow: FlowRecord, state: EdgeState, now: float) -> Verdict:
    """Enforcement verdict for one incoming flow.

    Precedence: Deny (unexpired block) > RedirectHoneypot > Challenge >
    RateLimited > Allow.  Expired blocklist entries are evicted lazily.
    Raises :class:`MissingSourceIp`.
    """
    ip = flow.src_ip
    if ip is None:
        raise MissingSourceIp()
    expiry = state.blocklist.get(ip)
    if expiry is not None:
        if now < expiry:
            return Verdict.DENY
        del state.blocklist[ip]
    if ip in state.honeypot_redirects:
        return Verdict.REDIRECT_HONEYPOT
    if ip in state.captcha_pending:
        return Verdict.CHALLENGE
    budget = state.rate_limits.get(ip)
    if budget is not None:
        tokens, last = state.bucket_state.get(ip, (budget, now))
        tokens = min(budget, tokens + (now - last) * budget)
        if tokens >= 1.0:
            state.bucket_state[ip] = (tokens - 1.0, now)
        else:
            state.bucket_state[ip] = (tokens, now)
            return Verdict.RATE_LIMITED
    return Verdict.ALLOW


def solve_challenge(state: EdgeState, ip: str) -> None:
    """Mark a challenged source as having passed its CAPTCHA."""
    state.captcha_pending.discard(ip)


def export_action_log(state: EdgeState, sink: IO[str]) -> None:
    """Write the action log as JSON-lines events."""
    for entry in state.action_log:
        sink.write(
            json.dumps(
                {
                    "window_id": entry.window_id,
                    "actions": sorted(action.value for action in entry.actions),
                    "source_count": entry.source_count,
                    "timestamp": entry.timestamp,
                },
                sort_keys=True,
            )
            + "\n"
        )


def load_prevention_config(
    source: str | Path | IO[str],
) -> tuple[PreventionThresholds, dict[str, frozenset[Action]], EnforcementPolicy]:
    """Read thresholds, playbook table and enforcement policy from JSON.

    All sections are optional; missing values fall back to the shipped
    defaults.  Raises :class:`ConfigInvalid`.
    """
    if isinstance(source, (str, Path)):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigInvalid(f"cannot read {source}: {exc}") from exc
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigInvalid("config root must be an object")

    try:
        thresholds = PreventionThresholds(**doc.get("thresholds", {}))
        policy = EnforcementPolicy(**doc.get("enforcement", {}))
    except TypeError as exc:
        raise ConfigInvalid(f"unknown config key: {exc}") from exc

    table = dict(DEFAULT_PLAYBOOK)
    for name, action_names in doc.get("playbook", {}).items():
        try:
            table[name] = frozenset(Action(value) for value in action_names)
        except ValueError as exc:
            raise ConfigInvalid(f"playbook entry {name!r}: {exc}") from exc
    return thresholds, table, policy
