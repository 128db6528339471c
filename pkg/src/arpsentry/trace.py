"""ARP trace model: event records, address handling, and the native
JSON-lines trace format.

A trace file is UTF-8 JSON-lines, one event per line, optionally preceded
by a header object ``{"header":true,"duration":<sec>,"nodes":[...]}``.
Event lines look like::

    {"ts":0.0,"src":"n1","dst":"*","op":"request","sip":"10.0.0.1",
     "smac":"aa:00:00:00:00:01","tip":"10.0.0.2","tmac":"00:00:00:00:00:00"}

with an optional ``"label"`` field (0 benign, 1 spoof). The destination
marker ``"*"`` denotes broadcast.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

BROADCAST = "*"

OP_REQUEST = "request"
OP_REPLY = "reply"
VALID_OPS = (OP_REQUEST, OP_REPLY)

LABEL_BENIGN = 0
LABEL_SPOOF = 1

_MAC_RE = re.compile(r"^([0-9a-f]{2}:){5}[0-9a-f]{2}$")
_EVENT_KEYS = ("ts", "src", "dst", "op", "sip", "smac", "tip", "tmac")


class TraceError(Exception):
    """Raised for malformed trace files or events."""


class TraceParseError(TraceError):
    """Parse failure; carries the offending line number when known."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


# ---------------------------------------------------------------------------
# Address handling


def normalize_mac(text: str) -> str:
    """Canonical lowercase colon-separated MAC, or raise ValueError."""
    mac = text.strip().lower().replace("-", ":")
    if not _MAC_RE.match(mac):
        raise ValueError(f"invalid MAC address: {text!r}")
    return mac


def mac_to_bytes(mac: str) -> bytes:
    return bytes(int(part, 16) for part in normalize_mac(mac).split(":"))


def mac_from_bytes(raw: bytes) -> str:
    if len(raw) != 6:
        raise ValueError(f"MAC must be 6 octets, got {len(raw)}")
    return ":".join(f"{b:02x}" for b in raw)


def normalize_ip4(text: str) -> str:
    """Canonical dotted-quad IPv4, or raise ValueError."""
    parts = text.strip().split(".")
    if len(parts) != 4:
        raise ValueError(f"invalid IPv4 address: {text!r}")
    octets = []
    for part in parts:
        if not part.isdigit():
            raise ValueError(f"invalid IPv4 octet: {part!r}")
        value = int(part)
        if value > 255:
            raise ValueError(f"invalid IPv4 octet: {part!r}")
        octets.append(value)
    return ".".join(str(o) for o in octets)


def ip4_to_bytes(ip: str) -> bytes:
    return bytes(int(part) for part in normalize_ip4(ip).split("."))


def ip4_from_bytes(raw: bytes) -> str:
    if len(raw) != 4:
        raise ValueError(f"IPv4 must be 4 octets, got {len(raw)}")
    return ".".join(str(b) for b in raw)


# ---------------------------------------------------------------------------
# Events and traces


@dataclass(frozen=True)
class ArpEvent:
    """One observed ARP packet."""

    ts: float
    src_node: str
    dst_node: str  # BROADCAST for broadcast destination
    op: str  # OP_REQUEST or OP_REPLY
    sender_ip: str
    sender_mac: str
    target_ip: str
    target_mac: str
    label: Optional[int] = None

    @property
    def is_broadcast(self) -> bool:
        return self.dst_node == BROADCAST


@dataclass(frozen=True)
class Trace:
    """Ordered ARP event sequence over a window of known duration."""

    events: tuple[ArpEvent, ...]
    duration: float
    nodes: frozenset[str] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.events)


def _parse_field(obj: dict, key: str, line_no: Optional[int]) -> object:
    if key not in obj:
        raise TraceParseError(f"missing field {key!r}", line_no)
    return obj[key]


def parse_trace_line(line: str, line_no: Optional[int] = None) -> ArpEvent:
    """Parse one native-format event line into an ArpEvent."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"invalid JSON: {exc}", line_no) from exc
    if not isinstance(obj, dict):
        raise TraceParseError("event line is not a JSON object", line_no)

    ts = _parse_field(obj, "ts", line_no)
    if not isinstance(ts, (int, float)) or ts < 0:
        raise TraceParseError(f"invalid ts: {ts!r}", line_no)

    src = _parse_field(obj, "src", line_no)
    if not isinstance(src, str) or not src or src == BROADCAST:
        raise TraceParseError(f"invalid src node: {src!r}", line_no)
    dst = _parse_field(obj, "dst", line_no)
    if not isinstance(dst, str) or not dst:
        raise TraceParseError(f"invalid dst node: {dst!r}", line_no)

    op = _parse_field(obj, "op", line_no)
    if op not in VALID_OPS:
        raise TraceParseError(f"invalid op: {op!r}", line_no)

    addresses = {}
    for key, normalizer in (
        ("sip", normalize_ip4),
        ("smac", normalize_mac),
        ("tip", normalize_ip4),
        ("tmac", normalize_mac),
    ):
        raw = _parse_field(obj, key, line_no)
        if not isinstance(raw, str):
            raise TraceParseError(f"invalid {key}: {raw!r}", line_no)
        try:
            addresses[key] = normalizer(raw)
        except ValueError as exc:
            raise TraceParseError(str(exc), line_no) from exc

    label = obj.get("label")
    if label is not None and label not in (LABEL_BENIGN, LABEL_SPOOF):
        raise TraceParseError(f"invalid label: {label!r}", line_no)

    return ArpEvent(
        ts=float(ts),
        src_node=src,
        dst_node=dst,
        op=op,
        sender_ip=addresses["sip"],
        sender_mac=addresses["smac"],
        target_ip=addresses["tip"],
        target_mac=addresses["tmac"],
        label=label,
    )


def event_to_line(event: ArpEvent) -> str:
    """Canonical single-line JSON form of an event (inverse of parse)."""
    obj = {
        "ts": event.ts,
        "src": event.src_node,
        "dst": event.dst_node,
        "op": event.op,
        "sip": event.sender_ip,
        "smac": event.sender_mac,
        "tip": event.target_ip,
        "tmac": event.target_mac,
    }
    if event.label is not None:
        obj["label"] = event.label
    return json.dumps(obj, separators=(",", ":"))


def build_trace(
    events: Iterable[ArpEvent],
    duration: Optional[float] = None,
    nodes: Optional[Iterable[str]] = None,
) -> Trace:
    """Assemble a Trace, inferring duration and node set when absent."""
    ordered = tuple(events)
    if not ordered:
        raise TraceError("empty trace")
    last_ts = 0.0
    for i, ev in enumerate(ordered):
        if ev.ts < last_ts:
            raise TraceError(f"timestamp regression at event {i + 1}")
        last_ts = ev.ts
    if duration is None:
        duration = ordered[-1].ts
    elif ordered[-1].ts > duration:
        raise TraceError(
            f"event ts {ordered[-1].ts} exceeds duration {duration}"
        )
    inferred = set(nodes) if nodes is not None else set()
    for ev in ordered:
        inferred.add(ev.src_node)
        if ev.dst_node != BROADCAST:
            inferred.add(ev.dst_node)
    return Trace(events=ordered, duration=float(duration), nodes=frozenset(inferred))


def read_trace(path) -> Trace:
    """Read a native JSON-lines trace file."""
    duration = None
    header_nodes = None
    events = []
    last_ts = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line_no == 1:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise TraceParseError(f"invalid JSON: {exc}", line_no) from exc
                if isinstance(obj, dict) and obj.get("header"):
                    duration = obj.get("duration")
                    if duration is not None and (
                        not isinstance(duration, (int, float)) or duration <= 0
                    ):
                        raise TraceParseError(
                            f"invalid header duration: {duration!r}", line_no
                        )
                    header_nodes = obj.get("nodes")
                    continue
            event = parse_trace_line(line, line_no)
            if last_ts is not None and event.ts < last_ts:
                raise TraceParseError(
                    f"timestamp regression at line {line_no}", line_no
                )
            last_ts = event.ts
            events.append(event)
    if not events:
        raise TraceError("empty trace")
    return build_trace(events, duration=duration, nodes=header_nodes)


def write_trace(trace: Trace, path, header: bool = True) -> None:
    """Write a trace in canonical native format."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(
                json.dumps(
                    {
                        "header": True,
                        "duration": trace.duration,
                        "nodes": sorted(trace.nodes),
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
        for event in trace.events:
            fh.write(event_to_line(event) + "\n")
