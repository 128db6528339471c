import pytest

from arpsentry.aggregator import (
    ACTION_DROP_RULES,
    ACTION_ISOLATE,
    AggregatorConfig,
    AggregatorError,
    aggregate,
    decide_mitigation,
    run_rounds,
    write_directive_log,
    write_threat_csv,
)
from arpsentry.detector import EdgeLog


def log_with(counters, edge_id="edge0"):
    log = EdgeLog(edge_id=edge_id)
    log.counters = dict(counters)
    return log


class TestAggregate:
    def test_normalization(self):
        table = aggregate([log_with({"a": 4, "b": 2, "c": 0})])
        assert table["a"].psi == 1.0
        assert table["b"].psi == 0.5
        assert table["c"].psi == 0.0

    def test_all_zero_guard(self):
        table = aggregate([log_with({"a": 0, "b": 0})])
        assert all(entry.psi == 0.0 for entry in table.values())

    def test_single_node_self_normalizes(self):
        table = aggregate([log_with({"a": 7})])
        assert table["a"].psi == 1.0

    def test_empty_logs_empty_table(self):
        assert aggregate([]) == {}

    def test_partition_invariance(self):
        merged = aggregate([log_with({"a": 3, "b": 5, "c": 1})])
        split = aggregate(
            [log_with({"a": 3, "b": 2}, "edge0"), log_with({"b": 3, "c": 1}, "edge1")]
        )
        assert merged == split

    def test_psi_order_matches_phi_order(self):
        table = aggregate([log_with({"a": 9, "b": 4, "c": 6, "d": 0})])
        phi_order = sorted(table, key=lambda n: table[n].phi)
        psi_order = sorted(table, key=lambda n: table[n].psi)
        assert phi_order == psi_order

    def test_psi_bounds(self):
        table = aggregate([log_with({"a": 13, "b": 1})])
        assert all(0.0 <= e.psi <= 1.0 for e in table.values())
        assert max(e.psi for e in table.values()) == 1.0


class TestDecideMitigation:
    CFG = AggregatorConfig(tau=0.6)

    def test_only_above_tau(self):
        table = aggregate([log_with({"a": 4, "b": 2})])
        directives = decide_mitigation(table, self.CFG)
        assert [d.node for d in directives] == ["a"]

    def test_exactly_tau_is_not_mitigated(self):
        table = aggregate([log_with({"a": 5, "b": 3})])
        directives = decide_mitigation(table, AggregatorConfig(tau=0.6))
        assert [d.node for d in directives] == ["a"]
        assert all(d.node != "b" for d in directives)  # psi=0.6 == tau

    def test_empty_table(self):
        assert decide_mitigation({}, self.CFG) == []

    def test_two_tier_actions(self):
        table = aggregate([log_with({"a": 10, "b": 7, "c": 1})])
        directives = decide_mitigation(table, AggregatorConfig(tau=0.6))
        actions = {d.node: d.action for d in directives}
        assert actions == {"a": ACTION_ISOLATE, "b": ACTION_DROP_RULES}

    def test_sorted_by_descending_psi_then_node(self):
        table = aggregate([log_with({"b": 10, "a": 10, "c": 9})])
        directives = decide_mitigation(table, AggregatorConfig(tau=0.5))
        assert [d.node for d in directives] == ["a", "b", "c"]

    def test_monotone_in_tau(self):
        table = aggregate([log_with({"a": 10, "b": 8, "c": 5, "d": 2})])
        counts = [
            len(decide_mitigation(table, AggregatorConfig(tau=t / 10,
                                                          isolate_above=0.8)))
            for t in range(0, 9)
        ]
        assert all(b <= a for a, b in zip(counts, counts[1:]))


class TestRunRounds:
    CFG = AggregatorConfig(tau=0.6)

    def test_cumulative_phi(self):
        rounds = run_rounds(
            [(1, [log_with({"a": 3})]), (2, [log_with({"b": 6})])], self.CFG
        )
        _, table2, _ = rounds[1]
        assert table2["a"].phi == 3
        assert table2["a"].psi == 0.5
        assert table2["b"].psi == 1.0

    def test_no_duplicate_isolate(self):
        rounds = run_rounds(
            [(1, [log_with({"a": 10, "b": 1})]), (2, [log_with({"a": 5})])],
            self.CFG,
        )
        assert [d.node for d in rounds[0][2]] == ["a"]
        assert rounds[0][2][0].action == ACTION_ISOLATE
        assert rounds[1][2] == []  # still threatening, already isolated

    def test_zero_detection_round_changes_nothing(self):
        rounds = run_rounds(
            [(1, [log_with({"a": 4})]), (2, [log_with({})])], self.CFG
        )
        assert rounds[0][1] == rounds[1][1]

    def test_round_regression(self):
        with pytest.raises(AggregatorError, match="round regression"):
            run_rounds([(2, []), (1, [])], self.CFG)

    def test_phi_monotone_across_rounds(self):
        rounds = run_rounds(
            [(1, [log_with({"a": 2, "b": 1})]),
             (2, [log_with({"a": 1})]),
             (3, [log_with({"b": 4})])],
            self.CFG,
        )
        for node in ("a", "b"):
            values = [table[node].phi for _, table, _ in rounds]
            assert values == sorted(values)


class TestSerialization:
    def test_threat_csv(self, tmp_path):
        table = aggregate([log_with({"a": 4, "b": 2})])
        directives = decide_mitigation(table, AggregatorConfig(tau=0.6))
        path = tmp_path / "threat.csv"
        write_threat_csv(table, directives, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "node,phi,psi,action"
        assert lines[1].startswith("a,4,1.0,")

    def test_directive_log(self, tmp_path):
        table = aggregate([log_with({"a": 4, "b": 1})])
        directives = decide_mitigation(table, AggregatorConfig(tau=0.5))
        path = tmp_path / "directives.jsonl"
        write_directive_log(directives, path)
        assert len(path.read_text().strip().splitlines()) == len(directives)


def test_invalid_tau():
    with pytest.raises(AggregatorError):
        AggregatorConfig(tau=1.5)
