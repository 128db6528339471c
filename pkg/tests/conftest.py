import struct

import pytest

from arpsentry.trace import ArpEvent, BROADCAST, OP_REPLY, OP_REQUEST, build_trace


def make_event(
    ts=0.0,
    src="n1",
    dst=BROADCAST,
    op=OP_REQUEST,
    sip="10.0.0.1",
    smac="aa:00:00:00:00:01",
    tip="10.0.0.2",
    tmac="00:00:00:00:00:00",
    label=None,
):
    return ArpEvent(
        ts=ts, src_node=src, dst_node=dst, op=op, sender_ip=sip,
        sender_mac=smac, target_ip=tip, target_mac=tmac, label=label,
    )


def make_trace(events, duration=None):
    return build_trace(events, duration=duration)


def reply(ts, src, dst, sip, smac, tip, tmac, label=None):
    return make_event(ts=ts, src=src, dst=dst, op=OP_REPLY, sip=sip,
                      smac=smac, tip=tip, tmac=tmac, label=label)


# ---------------------------------------------------------------------------
# pcap fixture generation (byte-level, independent of the importer)


def build_arp_frame(oper, smac, sip, tmac, tip, eth_dst=b"\xff" * 6):
    eth = eth_dst + smac + struct.pack(">H", 0x0806)
    arp = struct.pack(">HHBBH", 1, 0x0800, 6, 4, oper) + smac + sip + tmac + tip
    return eth + arp


def build_tcp_frame():
    # minimal non-ARP Ethernet frame (EtherType IPv4)
    return b"\x00" * 6 + b"\x01" * 6 + struct.pack(">H", 0x0800) + b"\x00" * 40


def build_pcap(frames, big_endian=True, linktype=1):
    endian = ">" if big_endian else "<"
    header = struct.pack(endian + "IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, linktype)
    body = b""
    for i, frame in enumerate(frames):
        body += struct.pack(endian + "IIII", 1000 + i, i * 1000, len(frame), len(frame))
        body += frame
    return header + body


@pytest.fixture
def tmp_pcap(tmp_path):
    def _write(frames, big_endian=True, linktype=1, name="capture.pcap"):
        path = tmp_path / name
        path.write_bytes(build_pcap(frames, big_endian=big_endian, linktype=linktype))
        return path

    return _write
