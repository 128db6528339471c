"""Cluster-level threat fusion and mitigation decisions.

Edge logs are reduced into a per-node threat index (total spoof
detections attributed to the node as packet source) and a max-normalized
threat score in [0, 1]. Nodes whose score strictly exceeds tau receive a
mitigation directive; the default policy issues drop rules up to 0.8 and
isolation above that. Directives are advisory output, not enforcement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .detector import EdgeLog

DEFAULT_TAU = 0.6
DEFAULT_ISOLATE_ABOVE = 0.8

ACTION_DROP_RULES = "drop_rules"
ACTION_ISOLATE = "isolate"
_SEVERITY = {ACTION_DROP_RULES: 1, ACTION_ISOLATE: 2}


class AggregatorError(Exception):
    pass


@dataclass(frozen=True)
class AggregatorConfig:
    tau: float = DEFAULT_TAU
    isolate_above: float = DEFAULT_ISOLATE_ABOVE

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise AggregatorError("tau must be in [0, 1]")
        if not self.tau <= self.isolate_above <= 1.0:
            raise AggregatorError("isolate boundary must be in [tau, 1]")


@dataclass(frozen=True)
class ThreatEntry:
    phi: int  # detection count
    psi: float  # max-normalized score


@dataclass(frozen=True)
class MitigationDirective:
    node: str
    action: str
    psi: float
    round_index: int = 0


ThreatTable = dict[str, ThreatEntry]


def _normalize(phi: dict[str, int]) -> ThreatTable:
    peak = max(phi.values(), default=0)
    if peak == 0:
        return {node: ThreatEntry(phi=count, psi=0.0) for node, count in phi.items()}
    return {
        node: ThreatEntry(phi=count, psi=count / peak) for node, count in phi.items()
    }


def aggregate(edge_logs: Iterable[EdgeLog]) -> ThreatTable:
    """Fuse edge logs into the per-node threat table."""
    phi: dict[str, int] = {}
    for log in edge_logs:
        for node, count in log.counters.items():
            phi[node] = phi.get(node, 0) + count
    return _normalize(phi)


def decide_mitigation(
    table: ThreatTable, config: AggregatorConfig, round_index: int = 0
) -> list[MitigationDirective]:
    """Directives for every node with psi strictly above tau, sorted by
    descending psi then node id."""
    directives = []
    for node, entry in table.items():
        if entry.psi > config.tau:
            action = (
                ACTION_ISOLATE if entry.psi > config.isolate_above
                else ACTION_DROP_RULES
            )
            directives.append(
                MitigationDirective(node=node, action=action, psi=entry.psi,
                                    round_index=round_index)
            )
    directives.sort(key=lambda d: (-d.psi, d.node))
    return directives


@dataclass
class AggregatorState:
    """Cumulative threat state across periodic aggregation rounds."""

    config: AggregatorConfig
    phi: dict[str, int] = field(default_factory=dict)
    issued: dict[str, str] = field(default_factory=dict)  # node -> last action
    last_round: Optional[int] = None

    def ingest(
        self, round_index: int, edge_logs: Iterable[EdgeLog]
    ) -> tuple[ThreatTable, list[MitigationDirective]]:
        if self.last_round is not None and round_index <= self.last_round:
            raise AggregatorError(
                f"round regression: {round_index} after {self.last_round}"
            )
        self.last_round = round_index
        for log in edge_logs:
            for node, count in log.counters.items():
                self.phi[node] = self.phi.get(node, 0) + count
        table = _normalize(self.phi)
        fresh = []
        for directive in decide_mitigation(table, self.config, round_index):
            prev = self.issued.get(directive.node)
            if prev is not None and _SEVERITY[prev] >= _SEVERITY[directive.action]:
                continue  # already mitigated at this level or stronger
            self.issued[directive.node] = directive.action
            fresh.append(directive)
        return table, fresh


def run_rounds(
    batches: Iterable[tuple[int, list[EdgeLog]]], config: AggregatorConfig
) -> list[tuple[int, ThreatTable, list[MitigationDirective]]]:
    """Replay round-stamped edge-log batches through cumulative aggregation."""
    state = AggregatorState(config=config)
    out = []
    for round_index, logs in batches:
        table, directives = state.ingest(round_index, logs)
        out.append((round_index, table, directives))
    return out


# ---------------------------------------------------------------------------
# Serialization

THREAT_CSV_HEADER = "node,phi,psi,action"


def write_threat_csv(
    table: ThreatTable, directives: list[MitigationDirective], path
) -> None:
    actions = {d.node: d.action for d in directives}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(THREAT_CSV_HEADER + "\n")
        for node in sorted(table, key=lambda n: (-table[n].psi, n)):
            entry = table[node]
            fh.write(f"{node},{entry.phi},{entry.psi!r},{actions.get(node, '')}\n")


def write_directive_log(directives: list[MitigationDirective], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in directives:
            fh.write(
                json.dumps(
                    {"node": d.node, "action": d.action, "psi": d.psi,
                     "round": d.round_index},
                    separators=(",", ":"),
                )
                + "\n"
            )
