import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmtrack.comms import CommsConfig, RecordHistory, exchange, hop_counts
from swarmtrack.radar import MeasurementRecord


def make_record(sender, k):
    return MeasurementRecord(
        sender_id=sender,
        sender_position=np.array([float(sender), 0.0, 0.0]),
        sender_velocity=np.zeros(3),
        time_index=k,
        los=True,
        range_obs=float(k),
        range_var=1.0,
    )


def fill_histories(n_agents, k_max, h_max):
    histories = [RecordHistory(h_max) for _ in range(n_agents)]
    for k in range(1, k_max + 1):
        for i in range(n_agents):
            histories[i].push(make_record(i, k))
    return histories


class TestHopCounts:
    def test_line_of_three(self):
        pos = np.array([[0.0, 0, 0], [400.0, 0, 0], [800.0, 0, 0]])
        hops = hop_counts(pos, 505.0)
        assert hops[0, 2] == 2
        assert hops[0, 1] == 1
        assert hops[0, 0] == 0

    def test_fully_connected_square(self):
        # all pairwise distances below the radius give single-hop links
        pos = np.array(
            [[-50.0, -50, 100], [-50, 500, 100], [500, -50, 100], [500, 500, 100]]
        )
        hops = hop_counts(pos, 900.0)
        off_diag = hops[~np.eye(4, dtype=bool)]
        assert np.all(off_diag == 1)

    def test_isolated_node(self):
        pos = np.array([[0.0, 0, 0], [10.0, 0, 0], [1e6, 0, 0]])
        hops = hop_counts(pos, 50.0)
        assert math.isinf(hops[0, 2])
        assert math.isinf(hops[2, 1])

    @given(
        st.lists(
            st.tuples(st.floats(-2000, 2000), st.floats(-2000, 2000)),
            min_size=2,
            max_size=8,
        ),
        st.floats(10, 3000),
    )
    @settings(max_examples=200, deadline=None)
    def test_symmetric_and_triangle_inequality(self, points, r_max):
        pos = np.array([[x, y, 0.0] for x, y in points])
        hops = hop_counts(pos, r_max)
        assert np.array_equal(hops, hops.T)
        n = len(points)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if math.isfinite(hops[i, j]) and math.isfinite(hops[j, k]):
                        assert hops[i, k] <= hops[i, j] + hops[j, k]


class TestExchange:
    def test_two_hop_record_is_aged_by_one(self):
        pos = np.array([[0.0, 0, 0], [400.0, 0, 0], [800.0, 0, 0]])
        hops = hop_counts(pos, 505.0)
        histories = fill_histories(3, 30, h_max=3)
        bundles = exchange(histories, hops, 30, h_max=3)
        by_sender = {rec.sender_id: rec for rec in bundles[0]}
        assert by_sender[0].time_index == 30  # own record, current
        assert by_sender[1].time_index == 30  # single hop, no aging
        assert by_sender[2].time_index == 29  # two hops: emitted at k - 1

    def test_single_hop_no_aging(self):
        hops = hop_counts(np.zeros((2, 3)), 1.0)
        histories = fill_histories(2, 5, h_max=1)
        bundles = exchange(histories, hops, 5, h_max=1)
        assert all(rec.time_index == 5 for rec in bundles[0])

    def test_hop_limit_cuts_chain_ends(self):
        pos = np.array([[0.0, 0, 0], [400.0, 0, 0], [800.0, 0, 0]])
        hops = hop_counts(pos, 505.0)
        histories = fill_histories(3, 10, h_max=1)
        bundles = exchange(histories, hops, 10, h_max=1)
        assert sorted(r.sender_id for r in bundles[1]) == [0, 1, 2]  # middle sees both
        assert sorted(r.sender_id for r in bundles[0]) == [0, 1]  # end sees middle only
        assert sorted(r.sender_id for r in bundles[2]) == [1, 2]

    def test_startup_records_before_first_step_omitted(self):
        pos = np.array([[0.0, 0, 0], [400.0, 0, 0], [800.0, 0, 0]])
        hops = hop_counts(pos, 505.0)
        histories = fill_histories(3, 1, h_max=3)
        bundles = exchange(histories, hops, 1, h_max=3)
        # two-hop neighbor would need a record from step 0: not available
        assert sorted(r.sender_id for r in bundles[0]) == [0, 1]

    def test_causality_no_lookahead(self):
        pos = np.array([[0.0, 0, 0], [400.0, 0, 0], [800.0, 0, 0]])
        hops = hop_counts(pos, 505.0)
        histories = fill_histories(3, 20, h_max=3)
        for k in range(1, 21):
            for i, bundle in enumerate(exchange(histories, hops, k, 3)):
                for rec in bundle:
                    expected = k if rec.sender_id == i else k - int(hops[i, rec.sender_id]) + 1
                    assert rec.time_index == expected
                    assert rec.time_index <= k

    def test_infinite_radius_reduces_to_instant_sharing(self):
        rng = np.random.default_rng(5)
        pos = rng.uniform(-5000, 5000, size=(6, 3))
        hops = hop_counts(pos, math.inf)
        histories = fill_histories(6, 12, h_max=4)
        bundles = exchange(histories, hops, 12, h_max=4)
        for bundle in bundles:
            assert len(bundle) == 6
            assert all(rec.time_index == 12 for rec in bundle)


class TestRecordHistory:
    def test_ring_buffer_depth_matches_relay_need(self):
        history = RecordHistory(h_max=3)
        for k in range(1, 11):
            history.push(make_record(0, k))
        assert history.at_time(10).time_index == 10
        assert history.at_time(8).time_index == 8
        assert history.at_time(7) is None  # older than any relay can request

    def test_missing_time_returns_none(self):
        history = RecordHistory(h_max=2)
        assert history.at_time(1) is None


def test_comms_config_validation():
    with pytest.raises(ValueError):
        CommsConfig(r_max_m=-1.0, h_max=1).validate()
    with pytest.raises(ValueError):
        CommsConfig(r_max_m=100.0, h_max=0).validate()
