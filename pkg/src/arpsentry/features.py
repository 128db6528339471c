"""Per-packet behavioral features for ARP spoofing detection.

Five features per packet:

* ``r``  — inconsistency ratio of the packet's sender IP: fraction of
  claims for that IP not attributable to its dominant MAC.
* ``v``  — volatility of the sender IP: rate of repeated claims with
  inter-arrival gap below a small threshold.
* ``c``  — binding churn of the source node: distinct (MAC, IP) pairs it
  has emitted divided by its packet count.
* ``dt`` — gap to the previous packet claiming the same sender IP
  (window duration for the first occurrence).
* ``h``  — unsolicited-reply heuristic flag.

Batch mode computes r/v/c over the whole window; streaming mode uses
running statistics over the prefix seen so far (current packet included).
"""

from __future__ import annotations

import csv
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .trace import ArpEvent, OP_REPLY, OP_REQUEST, Trace

FEATURE_NAMES = ("r", "v", "c", "dt", "h")
DEFAULT_DELTA = 0.1


class FeatureError(Exception):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    delta: float = DEFAULT_DELTA  # volatility gap threshold, seconds
    streaming: bool = False

    def __post_init__(self):
        if self.delta <= 0:
            raise FeatureError("delta must be > 0")


@dataclass(frozen=True)
class FeatureVector:
    r: float
    v: float
    c: float
    dt: float
    h: int

    def as_list(self) -> list[float]:
        return [self.r, self.v, self.c, self.dt, float(self.h)]


# ---------------------------------------------------------------------------
# Whole-window statistics


def pair_frequency(trace: Trace, ip: str, mac: str) -> float:
    """Observed rate (events/sec) of packets claiming the (ip, mac) binding."""
    if trace.duration <= 0:
        raise FeatureError("undefined frequency: zero-duration trace")
    count = sum(
        1 for ev in trace.events if ev.sender_ip == ip and ev.sender_mac == mac
    )
    return count / trace.duration


def inconsistency_ratio(trace: Trace, ip: str) -> float:
    """1 - (dominant MAC's claim share) for the given sender IP.

    An IP never claimed has no inconsistency and scores 0.
    """
    counts: dict[str, int] = defaultdict(int)
    for ev in trace.events:
        if ev.sender_ip == ip:
            counts[ev.sender_mac] += 1
    total = sum(counts.values())
    if total == 0:
        return 0.0
    return 1.0 - max(counts.values()) / total


def volatility(trace: Trace, ip: str, config: FeatureConfig) -> float:
    """Rate of sub-delta repeated claims of the given sender IP.

    The first claim of an IP has no predecessor gap and never counts.
    """
    if trace.duration <= 0:
        raise FeatureError("undefined volatility: zero-duration trace")
    prev_ts = None
    rapid = 0
    for ev in trace.events:
        if ev.sender_ip != ip:
            continue
        if prev_ts is not None and ev.ts - prev_ts < config.delta:
            rapid += 1
        prev_ts = ev.ts
    return rapid / trace.duration


def consistency_score(trace: Trace, node: str) -> float:
    """Distinct (sender MAC, sender IP) bindings emitted by the node over
    its total packet count. Larger values indicate more binding churn."""
    bindings = set()
    total = 0
    for ev in trace.events:
        if ev.src_node == node:
            bindings.add((ev.sender_mac, ev.sender_ip))
            total += 1
    if total == 0:
        raise FeatureError(f"unknown node: {node!r}")
    return len(bindings) / total


# ---------------------------------------------------------------------------
# Unsolicited-reply bookkeeping


class PendingRequests:
    """FIFO bookkeeping of outstanding ARP requests.

    Keyed by (requester node, requested IP); each request justifies at
    most one reply as solicited.
    """

    def __init__(self):
        self._pending: dict[tuple[str, str], deque[float]] = defaultdict(deque)

    def observe_request(self, event: ArpEvent) -> None:
        self._pending[(event.src_node, event.target_ip)].append(event.ts)

    def consume_match(self, reply: ArpEvent) -> bool:
        """Consume a matching request for this reply; True iff solicited."""
        key = (reply.dst_node, reply.sender_ip)
        queue = self._pending.get(key)
        if queue:
            queue.popleft()
            return True
        return False


def unsolicited_reply_heuristic(event: ArpEvent, pending: PendingRequests) -> int:
    """1 iff the event is a reply with no matching outstanding request.

    Gratuitous (broadcast) replies always score 1. Requests score 0 and
    are recorded as pending.
    """
    if event.op == OP_REQUEST:
        pending.observe_request(event)
        return 0
    if event.is_broadcast:
        return 1
    return 0 if pending.consume_match(event) else 1


# ---------------------------------------------------------------------------
# Streaming state


class FeatureStream:
    """Incremental per-packet featurizer.

    Maintains running claim counts per (IP, MAC), per-IP last-claim
    timestamps and rapid-claim counters, per-node binding sets, and the
    pending-request table. ``update`` returns the feature vector of the
    event with all statistics including the event itself.
    """

    def __init__(self, duration: float, config: FeatureConfig):
        if duration <= 0:
            raise FeatureError("undefined features: zero-duration window")
        self.duration = duration
        self.config = config
        self._ip_mac_counts: dict[str, dict[str, int]] = defaultdict(
            lambda: defaultdict(int)
        )
        self._ip_last_ts: dict[str, float] = {}
        self._ip_rapid: dict[str, int] = defaultdict(int)
        self._node_bindings: dict[str, set] = defaultdict(set)
        self._node_totals: dict[str, int] = defaultdict(int)
        self._pending = PendingRequests()

    def update(self, event: ArpEvent) -> FeatureVector:
        ip = event.sender_ip
        counts = self._ip_mac_counts[ip]
        counts[event.sender_mac] += 1

        prev_ts = self._ip_last_ts.get(ip)
        dt = self.duration if prev_ts is None else event.ts - prev_ts
        if prev_ts is not None and event.ts - prev_ts < self.config.delta:
            self._ip_rapid[ip] += 1
        self._ip_last_ts[ip] = event.ts

        self._node_bindings[event.src_node].add((event.sender_mac, ip))
        self._node_totals[event.src_node] += 1

        h = unsolicited_reply_heuristic(event, self._pending)

        total_claims = sum(counts.values())
        r = 1.0 - max(counts.values()) / total_claims
        v = self._ip_rapid[ip] / self.duration
        c = len(self._node_bindings[event.src_node]) / self._node_totals[event.src_node]
        return FeatureVector(r=r, v=v, c=c, dt=dt, h=h)


# ---------------------------------------------------------------------------
# Whole-trace featurization


def featurize(
    trace: Trace, config: FeatureConfig
) -> list[tuple[ArpEvent, FeatureVector]]:
    """One feature vector per event, in trace order.

    Streaming mode uses prefix statistics; batch mode replaces r/v/c with
    whole-window statistics (dt and h are inherently sequential in both).
    """
    stream = FeatureStream(trace.duration, config)
    rows = [(ev, stream.update(ev)) for ev in trace.events]
    if config.streaming:
        return rows

    r_cache: dict[str, float] = {}
    v_cache: dict[str, float] = {}
    c_cache: dict[str, float] = {}
    out = []
    for ev, fv in rows:
        ip, node = ev.sender_ip, ev.src_node
        if ip not in r_cache:
            r_cache[ip] = inconsistency_ratio(trace, ip)
            v_cache[ip] = volatility(trace, ip, config)
        if node not in c_cache:
            c_cache[node] = consistency_score(trace, node)
        out.append(
            (ev, FeatureVector(r=r_cache[ip], v=v_cache[ip], c=c_cache[node],
                               dt=fv.dt, h=fv.h))
        )
    return out


# ---------------------------------------------------------------------------
# Feature CSV interchange

FEATURE_CSV_HEADER = ["ts", "src_node", "r", "v", "c", "dt", "h", "label"]


def write_feature_csv(rows: Iterable[tuple[ArpEvent, FeatureVector]], path) -> None:
    """Dump featurized events as CSV; unknown labels written as -1."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_CSV_HEADER)
        for ev, fv in rows:
            label = ev.label if ev.label is not None else -1
            writer.writerow(
                [repr(ev.ts), ev.src_node, repr(fv.r), repr(fv.v), repr(fv.c),
                 repr(fv.dt), fv.h, label]
            )


def read_feature_csv(path) -> tuple[list[list[float]], list[Optional[int]]]:
    """Read a feature CSV back into (vectors, labels); -1 labels map to None."""
    vectors: list[list[float]] = []
    labels: list[Optional[int]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FEATURE_CSV_HEADER:
            raise FeatureError(f"unexpected feature CSV header: {header}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(FEATURE_CSV_HEADER):
                raise FeatureError(f"line {line_no}: wrong column count")
            try:
                vec = [float(row[i]) for i in range(2, 7)]
                label = int(row[7])
            except ValueError as exc:
                raise FeatureError(f"line {line_no}: {exc}") from exc
            vectors.append(vec)
            labels.append(None if label < 0 else label)
    return vectors, labels
