"""Classic pcap import: extracts ARP-over-Ethernet frames into a Trace.

Supports both pcap magic byte orders, Ethernet link type only. Node
identities are synthesized from MAC addresses ("mac:<addr>") since pcap
carries no notion of a node.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .trace import (
    ArpEvent,
    BROADCAST,
    OP_REPLY,
    OP_REQUEST,
    Trace,
    TraceError,
    build_trace,
    ip4_from_bytes,
    mac_from_bytes,
)

PCAP_MAGIC_BE = 0xA1B2C3D4
PCAP_MAGIC_LE = 0xD4C3B2A1
LINKTYPE_ETHERNET = 1
ETHERTYPE_ARP = 0x0806

_BCAST_MAC = "ff:ff:ff:ff:ff:ff"
_ZERO_MAC = "00:00:00:00:00:00"


class PcapError(TraceError):
    """Raised for unreadable pcap files."""


@dataclass
class PcapImportStats:
    frames: int = 0
    arp_events: int = 0
    skipped_non_arp: int = 0
    skipped_truncated: int = 0


def _node_for_mac(mac: str) -> str:
    return f"mac:{mac}"


def _parse_arp_payload(ts: float, frame: bytes) -> ArpEvent | None:
    # Ethernet header is 14 bytes; ARP for IPv4-over-Ethernet is 28 bytes.
    if len(frame) < 14 + 28:
        return None
    arp = frame[14:42]
    htype, ptype, hlen, plen, oper = struct.unpack(">HHBBH", arp[:8])
    if htype != 1 or ptype != 0x0800 or hlen != 6 or plen != 4:
        return None
    if oper not in (1, 2):
        return None
    sender_mac = mac_from_bytes(arp[8:14])
    sender_ip = ip4_from_bytes(arp[14:18])
    target_mac = mac_from_bytes(arp[18:24])
    target_ip = ip4_from_bytes(arp[24:28])
    eth_dst = mac_from_bytes(frame[0:6])
    broadcast = eth_dst == _BCAST_MAC
    if broadcast or target_mac in (_ZERO_MAC, _BCAST_MAC):
        dst_node = BROADCAST
    else:
        dst_node = _node_for_mac(target_mac)
    return ArpEvent(
        ts=ts,
        src_node=_node_for_mac(sender_mac),
        dst_node=dst_node,
        op=OP_REQUEST if oper == 1 else OP_REPLY,
        sender_ip=sender_ip,
        sender_mac=sender_mac,
        target_ip=target_ip,
        target_mac=target_mac,
    )


def import_pcap(path) -> tuple[Trace, PcapImportStats]:
    """Read a classic pcap file, keeping only ARP frames.

    Timestamps are rebased so the first frame is at t=0. Raises PcapError
    on bad magic, wrong link type, or when no ARP events are present.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 24:
        raise PcapError("truncated pcap global header")
    magic = struct.unpack(">I", data[:4])[0]
    if magic == PCAP_MAGIC_BE:
        endian = ">"
    elif magic == PCAP_MAGIC_LE:
        endian = "<"
    else:
        raise PcapError(f"bad pcap magic: 0x{magic:08x}")
    linktype = struct.unpack(endian + "I", data[20:24])[0]
    if linktype != LINKTYPE_ETHERNET:
        raise PcapError(f"unsupported link type {linktype} (Ethernet only)")

    stats = PcapImportStats()
    events = []
    offset = 24
    base_ts = None
    while offset < len(data):
        if offset + 16 > len(data):
            stats.skipped_truncated += 1
            break
        ts_sec, ts_usec, incl_len, orig_len = struct.unpack(
            endian + "IIII", data[offset : offset + 16]
        )
        offset += 16
        if offset + incl_len > len(data):
            stats.skipped_truncated += 1
            break
        frame = data[offset : offset + incl_len]
        offset += incl_len
        stats.frames += 1
        ts = ts_sec + ts_usec * 1e-6
        if base_ts is None:
            base_ts = ts
        if len(frame) < 14:
            stats.skipped_truncated += 1
            continue
        ethertype = struct.unpack(">H", frame[12:14])[0]
        if ethertype != ETHERTYPE_ARP:
            stats.skipped_non_arp += 1
            continue
        event = _parse_arp_payload(round(ts - base_ts, 6), frame)
        if event is None:
            stats.skipped_truncated += 1
            continue
        events.append(event)
        stats.arp_events += 1

    if not events:
        raise PcapError("no ARP events")
    return build_trace(events), stats
