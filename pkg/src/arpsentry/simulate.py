"""Deterministic labeled ARP traffic generator.

Benign behavior: each device issues ARP requests as a Poisson process
toward uniformly chosen peer IPs; the true owner answers after a small
uniform latency with the correct binding. Attack behavior: per episode,
the attacker emits gratuitous broadcast replies binding the victim's IP
to the attacker's MAC at a fixed burst rate.

Identical seeds produce byte-identical traces.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional

from .trace import (
    ArpEvent,
    BROADCAST,
    LABEL_BENIGN,
    LABEL_SPOOF,
    OP_REPLY,
    OP_REQUEST,
    Trace,
    build_trace,
)

DEFAULT_BENIGN_RATE = 0.05  # requests/sec per device
DEFAULT_REPLY_LATENCY = (0.001, 0.020)  # uniform range, seconds
DEFAULT_ATTACK_RATE = 2.0  # spoofed replies/sec
DEFAULT_ATTACK_DURATION = 30.0  # seconds per episode

_ZERO_MAC = "00:00:00:00:00:00"
_BCAST_MAC = "ff:ff:ff:ff:ff:ff"


class SimulationError(Exception):
    pass


@dataclass(frozen=True)
class AttackEpisode:
    attacker: str
    victim_ip: str
    start: float
    duration: float
    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise SimulationError("episode rate must be > 0")
        if self.start < 0 or self.duration <= 0:
            raise SimulationError("episode timing must be positive")


@dataclass(frozen=True)
class SimConfig:
    devices: int
    duration: float
    seed: int
    benign_rate: float = DEFAULT_BENIGN_RATE
    reply_latency: tuple[float, float] = DEFAULT_REPLY_LATENCY
    attacks: int = 0
    attack_rate: float = DEFAULT_ATTACK_RATE
    attack_duration: float = DEFAULT_ATTACK_DURATION
    episodes: Optional[tuple[AttackEpisode, ...]] = None  # overrides attacks

    def __post_init__(self):
        if self.devices < 2:
            raise SimulationError("need at least 2 devices")
        if self.duration <= 0:
            raise SimulationError("duration must be > 0")
        if self.attacks < 0:
            raise SimulationError("attack count must be >= 0")
        if self.benign_rate <= 0:
            raise SimulationError("benign rate must be > 0")


def device_id(k: int) -> str:
    return f"n{k + 1}"


def device_ip(k: int) -> str:
    return f"10.0.{(k + 1) // 256}.{(k + 1) % 256}"


def device_mac(k: int) -> str:
    return f"aa:00:00:00:{(k + 1) // 256:02x}:{(k + 1) % 256:02x}"


def ownership_table(devices: int) -> dict[str, dict[str, str]]:
    """Ground-truth node -> {ip, mac} ownership for oracle checks."""
    return {
        device_id(k): {"ip": device_ip(k), "mac": device_mac(k)}
        for k in range(devices)
    }


@dataclass
class SimResult:
    trace: Trace
    ownership: dict[str, dict[str, str]]
    episodes: list[AttackEpisode] = field(default_factory=list)


def _draw_episodes(config: SimConfig, rng: random.Random) -> list[AttackEpisode]:
    if config.episodes is not None:
        episodes = list(config.episodes)
        for ep in episodes:
            if ep.start + ep.duration > config.duration:
                raise SimulationError(
                    f"episode at {ep.start} exceeds simulation duration"
                )
        return episodes
    if config.attacks == 0:
        return []
    ep_duration = min(config.attack_duration, config.duration)
    if config.attacks >= config.devices:
        raise SimulationError("more attack episodes than candidate victims")
    # victims drawn without replacement so episodes target distinct IPs
    victims = rng.sample(range(config.devices), config.attacks)
    episodes = []
    for victim in victims:
        attacker = rng.randrange(config.devices - 1)
        if attacker >= victim:
            attacker += 1  # never the victim's own node
        start = rng.uniform(0.0, config.duration - ep_duration)
        episodes.append(
            AttackEpisode(
                attacker=device_id(attacker),
                victim_ip=device_ip(victim),
                start=start,
                duration=ep_duration,
                rate=config.attack_rate,
            )
        )
    return episodes


def simulate(config: SimConfig) -> SimResult:
    """Generate a fully labeled trace for the configured workload."""
    rng = random.Random(config.seed)
    ownership = ownership_table(config.devices)
    ip_owner = {entry["ip"]: node for node, entry in ownership.items()}

    events: list[tuple[float, int, ArpEvent]] = []
    seq = 0

    lat_lo, lat_hi = config.reply_latency
    for k in range(config.devices):
        requester = device_id(k)
        t = rng.expovariate(config.benign_rate)
        while t < config.duration:
            peer = rng.randrange(config.devices - 1)
            if peer >= k:
                peer += 1
            request = ArpEvent(
                ts=round(t, 6),
                src_node=requester,
                dst_node=BROADCAST,
                op=OP_REQUEST,
                sender_ip=device_ip(k),
                sender_mac=device_mac(k),
                target_ip=device_ip(peer),
                target_mac=_ZERO_MAC,
                label=LABEL_BENIGN,
            )
            events.append((request.ts, seq, request))
            seq += 1
            reply_ts = t + rng.uniform(lat_lo, lat_hi)
            if reply_ts <= config.duration:
                reply = ArpEvent(
                    ts=round(reply_ts, 6),
                    src_node=device_id(peer),
                    dst_node=requester,
                    op=OP_REPLY,
                    sender_ip=device_ip(peer),
                    sender_mac=device_mac(peer),
                    target_ip=device_ip(k),
                    target_mac=device_mac(k),
                    label=LABEL_BENIGN,
                )
                events.append((reply.ts, seq, reply))
                seq += 1
            t += rng.expovariate(config.benign_rate)

    episodes = _draw_episodes(config, rng)
    for ep in episodes:
        owner = ip_owner.get(ep.victim_ip)
        if owner == ep.attacker:
            raise SimulationError(
                f"attacker {ep.attacker} cannot spoof its own IP {ep.victim_ip}"
            )
        attacker_mac = ownership[ep.attacker]["mac"]
        count = max(1, int(ep.rate * ep.duration))
        for j in range(count):
            ts = ep.start + j / ep.rate
            if ts > config.duration:
                break
            spoof = ArpEvent(
                ts=round(ts, 6),
                src_node=ep.attacker,
                dst_node=BROADCAST,
                op=OP_REPLY,
                sender_ip=ep.victim_ip,
                sender_mac=attacker_mac,
                target_ip=ep.victim_ip,
                target_mac=_BCAST_MAC,
                label=LABEL_SPOOF,
            )
            events.append((spoof.ts, seq, spoof))
            seq += 1

    events.sort(key=lambda item: (item[0], item[1]))
    trace = build_trace(
        (ev for _, _, ev in events),
        duration=config.duration,
        nodes=ownership.keys(),
    )
    return SimResult(trace=trace, ownership=ownership, episodes=episodes)


# ---------------------------------------------------------------------------
# Train/test splitting


def infer_episodes(trace: Trace, gap: float = 2.0) -> list[AttackEpisode]:
    """Recover attack episodes from labels: spoofed events grouped by
    (attacker, victim IP), split where the gap exceeds the burst scale."""
    groups: dict[tuple[str, str], list[ArpEvent]] = {}
    for ev in trace.events:
        if ev.label == LABEL_SPOOF:
            groups.setdefault((ev.src_node, ev.sender_ip), []).append(ev)
    episodes = []
    for (attacker, victim_ip), evs in sorted(groups.items()):
        run_start = evs[0].ts
        prev = evs[0].ts
        count = 1
        for ev in evs[1:]:
            if ev.ts - prev > gap:
                episodes.append(
                    _episode_from_run(attacker, victim_ip, run_start, prev, count)
                )
                run_start = ev.ts
                count = 0
            prev = ev.ts
            count += 1
        episodes.append(_episode_from_run(attacker, victim_ip, run_start, prev, count))
    return episodes


def _episode_from_run(
    attacker: str, victim_ip: str, start: float, end: float, count: int
) -> AttackEpisode:
    duration = max(end - start, 1e-6)
    return AttackEpisode(
        attacker=attacker,
        victim_ip=victim_ip,
        start=start,
        duration=duration,
        rate=max(count / duration, 1e-6),
    )


def split_trace(
    trace: Trace,
    fraction: float,
    seed: int,
    episodes: Optional[list[AttackEpisode]] = None,
    block: float = 60.0,
) -> tuple[Trace, Trace]:
    """Episode-aware train/test split.

    Whole attack episodes land on one side; benign requests are assigned
    by fixed time blocks and each unicast reply follows the request it
    answers, so neither side contains orphaned replies. ``fraction`` is
    the share assigned to the first (train) side. Raises when either
    side misses a class.
    """
    if not 0.0 < fraction < 1.0:
        raise SimulationError("split fraction must be in (0, 1)")
    if episodes is None:
        episodes = infer_episodes(trace)
    rng = random.Random(seed)

    order = list(range(len(episodes)))
    rng.shuffle(order)
    n_train = round(fraction * len(episodes))
    train_eps = {order[i] for i in range(n_train)}

    def episode_of(ev: ArpEvent) -> Optional[int]:
        for i, ep in enumerate(episodes):
            if (
                ev.src_node == ep.attacker
                and ev.sender_ip == ep.victim_ip
                # timestamps are rounded to microseconds on emission
                and ep.start - 1e-3 <= ev.ts <= ep.start + ep.duration + 1e-3
            ):
                return i
        return None

    n_blocks = int(trace.duration // block) + 1
    block_train = [rng.random() < fraction for _ in range(n_blocks)]

    train_events, test_events = [], []
    request_side: dict[tuple[str, str], deque] = defaultdict(deque)
    for ev in trace.events:
        if ev.label == LABEL_SPOOF:
            idx = episode_of(ev)
            side = train_events if (idx is None or idx in train_eps) else test_events
        elif ev.op == OP_REPLY and ev.dst_node != BROADCAST:
            queue = request_side.get((ev.dst_node, ev.sender_ip))
            if queue:
                side = queue.popleft()
            else:
                side = train_events if block_train[int(ev.ts // block)] else test_events
        else:
            side = train_events if block_train[int(ev.ts // block)] else test_events
            if ev.op == OP_REQUEST:
                request_side[(ev.src_node, ev.target_ip)].append(side)
        side.append(ev)

    for name, side in (("train", train_events), ("test", test_events)):
        labels = {ev.label for ev in side}
        if labels != {LABEL_BENIGN, LABEL_SPOOF}:
            raise SimulationError(
                f"split leaves the {name} side without both classes"
            )
    return (
        build_trace(train_events, duration=trace.duration, nodes=trace.nodes),
        build_trace(test_events, duration=trace.duration, nodes=trace.nodes),
    )


def write_ownership(ownership: dict[str, dict[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ownership, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_episodes(episodes: list[AttackEpisode], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(
                json.dumps(
                    {
                        "attacker": ep.attacker,
                        "victim_ip": ep.victim_ip,
                        "start": ep.start,
                        "duration": ep.duration,
                        "rate": ep.rate,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_episodes(path) -> list[AttackEpisode]:
    episodes = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            episodes.append(
                AttackEpisode(
                    attacker=obj["attacker"],
                    victim_ip=obj["victim_ip"],
                    start=obj["start"],
                    duration=obj["duration"],
                    rate=obj["rate"],
                )
            )
    return episodes
