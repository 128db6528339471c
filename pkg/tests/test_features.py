import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arpsentry.features import (
    FeatureConfig,
    FeatureError,
    FeatureStream,
    PendingRequests,
    consistency_score,
    featurize,
    inconsistency_ratio,
    pair_frequency,
    read_feature_csv,
    unsolicited_reply_heuristic,
    volatility,
    write_feature_csv,
)
from arpsentry.trace import BROADCAST, OP_REPLY

from conftest import make_event, make_trace, reply
from oracles import brute_force_features, random_trace

MAC1 = "aa:00:00:00:00:01"
MAC2 = "aa:00:00:00:00:02"
IP1 = "10.0.0.1"


def claims(ip, macs_with_ts, duration):
    """Trace of request events claiming ip with the given (ts, mac) list."""
    events = [
        make_event(ts=ts, src=f"n{i + 1}", sip=ip, smac=mac)
        for i, (ts, mac) in enumerate(macs_with_ts)
    ]
    events.sort(key=lambda ev: ev.ts)
    return make_trace(events, duration=duration)


class TestPairFrequency:
    def test_hand_counted_rate(self):
        trace = claims(IP1, [(i * 1.0, MAC1) for i in range(5)], duration=10.0)
        assert pair_frequency(trace, IP1, MAC1) == 0.5

    def test_unseen_pair_is_zero(self):
        trace = claims(IP1, [(0.0, MAC1)], duration=10.0)
        assert pair_frequency(trace, IP1, MAC2) == 0.0

    def test_rate_one(self):
        trace = claims(IP1, [(i * 1.0, MAC1) for i in range(60)], duration=60.0)
        assert pair_frequency(trace, IP1, MAC1) == 1.0

    def test_zero_duration_error(self):
        trace = make_trace([make_event(ts=0.0)], duration=0.0)
        with pytest.raises(FeatureError, match="undefined frequency"):
            pair_frequency(trace, IP1, MAC1)


class TestInconsistencyRatio:
    def test_single_claimant(self):
        trace = claims(IP1, [(0.0, MAC1), (1.0, MAC1)], duration=10.0)
        assert inconsistency_ratio(trace, IP1) == 0.0

    def test_equal_split(self):
        trace = claims(IP1, [(0.0, MAC1), (1.0, MAC2), (2.0, MAC1), (3.0, MAC2)],
                       duration=10.0)
        assert inconsistency_ratio(trace, IP1) == 0.5

    def test_three_one_split(self):
        trace = claims(IP1, [(0.0, MAC1), (1.0, MAC1), (2.0, MAC1), (3.0, MAC2)],
                       duration=10.0)
        assert inconsistency_ratio(trace, IP1) == 0.25

    def test_unseen_ip_is_zero(self):
        trace = claims(IP1, [(0.0, MAC1)], duration=10.0)
        assert inconsistency_ratio(trace, "10.0.0.99") == 0.0

    @given(st.integers(min_value=1, max_value=20), st.integers(min_value=2, max_value=8))
    @settings(max_examples=30, deadline=None)
    def test_scale_invariance(self, k, reps):
        base = [(float(i), MAC1) for i in range(3)] + [(10.0 + i, MAC2) for i in range(2)]
        scaled = []
        t = 0.0
        for _ in range(k):
            for offset, mac in base:
                scaled.append((t + offset, mac))
            t += 100.0
        r_base = inconsistency_ratio(claims(IP1, base, duration=1000.0), IP1)
        r_scaled = inconsistency_ratio(claims(IP1, scaled, duration=1000.0 * k), IP1)
        assert abs(r_base - r_scaled) < 1e-12


class TestVolatility:
    CFG = FeatureConfig(delta=0.1)

    def test_single_packet(self):
        trace = claims(IP1, [(0.0, MAC1)], duration=10.0)
        assert volatility(trace, IP1, self.CFG) == 0.0

    def test_hand_enumerated_gaps(self):
        # gaps: 0.05, 5.0, 0.02 -> two sub-delta gaps over 10 s
        trace = claims(
            IP1, [(0.0, MAC1), (0.05, MAC1), (5.05, MAC1), (5.07, MAC1)],
            duration=10.0,
        )
        assert volatility(trace, IP1, self.CFG) == pytest.approx(0.2)

    def test_all_gaps_above_delta(self):
        trace = claims(IP1, [(i * 1.0, MAC1) for i in range(5)], duration=10.0)
        assert volatility(trace, IP1, self.CFG) == 0.0

    def test_bounded_by_claim_count(self):
        rng = random.Random(5)
        trace = random_trace(rng, 200)
        for ip in {ev.sender_ip for ev in trace.events}:
            n_claims = sum(1 for ev in trace.events if ev.sender_ip == ip)
            assert volatility(trace, ip, self.CFG) <= (n_claims - 1) / trace.duration


class TestConsistencyScore:
    def test_single_binding(self):
        events = [make_event(ts=float(i), src="n1", sip=IP1, smac=MAC1)
                  for i in range(10)]
        trace = make_trace(events, duration=10.0)
        assert consistency_score(trace, "n1") == pytest.approx(0.1)

    def test_every_packet_fresh_binding(self):
        events = [
            make_event(ts=float(i), src="n1", sip=f"10.0.0.{i + 1}",
                       smac=f"aa:00:00:00:00:{i + 1:02x}")
            for i in range(4)
        ]
        trace = make_trace(events, duration=10.0)
        assert consistency_score(trace, "n1") == 1.0

    def test_two_bindings_over_four_packets(self):
        events = [
            make_event(ts=0.0, src="n1", sip=IP1, smac=MAC1),
            make_event(ts=1.0, src="n1", sip=IP1, smac=MAC1),
            make_event(ts=2.0, src="n1", sip="10.0.0.2", smac=MAC1),
            make_event(ts=3.0, src="n1", sip="10.0.0.2", smac=MAC1),
        ]
        trace = make_trace(events, duration=10.0)
        assert consistency_score(trace, "n1") == 0.5

    def test_unknown_node(self):
        trace = make_trace([make_event(ts=0.0)], duration=1.0)
        with pytest.raises(FeatureError, match="unknown node"):
            consistency_score(trace, "n99")


class TestUnsolicitedReplyHeuristic:
    def test_solicited_reply(self):
        pending = PendingRequests()
        request = make_event(ts=0.0, src="n1", tip="10.0.0.2")
        assert unsolicited_reply_heuristic(request, pending) == 0
        answer = reply(0.01, "n2", "n1", "10.0.0.2", MAC2, IP1, MAC1)
        assert unsolicited_reply_heuristic(answer, pending) == 0

    def test_unsolicited_reply(self):
        pending = PendingRequests()
        answer = reply(0.01, "n2", "n1", "10.0.0.2", MAC2, IP1, MAC1)
        assert unsolicited_reply_heuristic(answer, pending) == 1

    def test_gratuitous_broadcast_reply(self):
        pending = PendingRequests()
        gratuitous = reply(0.01, "n2", BROADCAST, "10.0.0.2", MAC2, "10.0.0.2",
                           "ff:ff:ff:ff:ff:ff")
        assert unsolicited_reply_heuristic(gratuitous, pending) == 1

    def test_each_request_justifies_one_reply(self):
        pending = PendingRequests()
        request = make_event(ts=0.0, src="n1", tip="10.0.0.2")
        unsolicited_reply_heuristic(request, pending)
        answer = reply(0.01, "n2", "n1", "10.0.0.2", MAC2, IP1, MAC1)
        assert unsolicited_reply_heuristic(answer, pending) == 0
        again = reply(0.02, "n2", "n1", "10.0.0.2", MAC2, IP1, MAC1)
        assert unsolicited_reply_heuristic(again, pending) == 1


class TestFeaturize:
    def test_single_event_trace(self):
        trace = make_trace([make_event(ts=1.0)], duration=10.0)
        [(_, fv)] = featurize(trace, FeatureConfig())
        assert (fv.r, fv.v, fv.c, fv.dt, fv.h) == (0.0, 0.0, 1.0, 10.0, 0)

    def test_two_macs_final_r(self):
        events = [
            make_event(ts=0.0, src="n1", sip=IP1, smac=MAC1),
            make_event(ts=1.0, src="n2", sip=IP1, smac=MAC2),
        ]
        trace = make_trace(events, duration=10.0)
        rows = featurize(trace, FeatureConfig(streaming=True))
        assert rows[-1][1].r == 0.5

    def test_batch_final_event_matches_streaming(self):
        rng = random.Random(11)
        trace = random_trace(rng, 120)
        cfg_s = FeatureConfig(streaming=True)
        cfg_b = FeatureConfig(streaming=False)
        last_s = featurize(trace, cfg_s)[-1][1]
        last_b = featurize(trace, cfg_b)[-1][1]
        # whole-window statistics for the last event's IP coincide with the
        # inclusive prefix at end of window
        assert last_s.r == pytest.approx(last_b.r, abs=1e-12)
        assert last_s.v == pytest.approx(last_b.v, abs=1e-12)
        assert (last_s.dt, last_s.h) == (last_b.dt, last_b.h)

    @pytest.mark.parametrize("seed", range(5))
    def test_streaming_matches_brute_force(self, seed):
        rng = random.Random(seed)
        trace = random_trace(rng, rng.randint(20, 200))
        rows = featurize(trace, FeatureConfig(streaming=True))
        expected = brute_force_features(trace, FeatureConfig(streaming=True))
        for (_, fv), (r, v, c, dt, h) in zip(rows, expected):
            assert abs(fv.r - r) < 1e-12
            assert abs(fv.v - v) < 1e-12
            assert abs(fv.c - c) < 1e-12
            assert abs(fv.dt - dt) < 1e-12
            assert fv.h == h

    def test_r_bounds_and_zero_iff_single_claimant(self):
        rng = random.Random(3)
        trace = random_trace(rng, 150)
        for ip in {ev.sender_ip for ev in trace.events}:
            r = inconsistency_ratio(trace, ip)
            macs = {ev.sender_mac for ev in trace.events if ev.sender_ip == ip}
            assert 0.0 <= r <= 1.0
            if len(macs) == 1:
                assert r == 0.0
            else:
                assert r > 0.0


class TestFeatureCsv:
    def test_roundtrip(self, tmp_path):
        events = [
            make_event(ts=0.0, label=0),
            make_event(ts=1.0, src="n2", sip="10.0.0.2", smac=MAC2),
        ]
        trace = make_trace(events, duration=5.0)
        rows = featurize(trace, FeatureConfig())
        path = tmp_path / "features.csv"
        write_feature_csv(rows, path)
        vectors, labels = read_feature_csv(path)
        assert len(vectors) == 2
        assert labels == [0, None]
        assert vectors[0] == [fv for fv in rows[0][1].as_list()]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(FeatureError, match="header"):
            read_feature_csv(path)


def test_stream_rejects_zero_duration():
    with pytest.raises(FeatureError):
        FeatureStream(0.0, FeatureConfig())
