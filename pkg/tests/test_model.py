"""Structural invariants of the network genome and its serialization."""

from __future__ import annotations

import json
import math
from dataclasses import replace
from random import Random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build_net, client, fail_edge, server
from evonet.model import (
    FORMAT_NAME,
    FORMAT_VERSION,
    Edge,
    EdgeKind,
    GridPosition,
    GridTooDenseError,
    LinkState,
    Network,
    Node,
    NodeKind,
    adjacency_matrix,
    dumps_network,
    loads_network,
    make_edge,
    network_digest,
    network_from_doc,
    network_to_doc,
    place_initial,
    position_node_id,
)


class TestGridPosition:
    def test_three_four_five_triangle(self):
        assert GridPosition(0, 0).distance_to(GridPosition(3, 4)) == 5.0

    def test_unit_diagonal(self):
        d = GridPosition(0, 0).distance_to(GridPosition(1, 1))
        assert d == pytest.approx(math.sqrt(2))

    def test_negative_coordinates_rejected(self):
        with pytest.raises(ValueError):
            GridPosition(-1, 0)


class TestNode:
    def test_traffic_must_be_nonnegative(self):
        with pytest.raises(ValueError):
            client(0, 0, 0, traffic=-1.0)

    def test_failure_rate_must_be_probability(self):
        with pytest.raises(ValueError):
            Node(id=0, kind=NodeKind.CLIENT, pos=GridPosition(0, 0), traffic=1.0, failure_rate=1.5)

    def test_working_state_requires_zero_counter(self):
        with pytest.raises(ValueError):
            Node(
                id=0,
                kind=NodeKind.CLIENT,
                pos=GridPosition(0, 0),
                traffic=1.0,
                steps_since_failure=2,
            )


class TestMakeEdge:
    def test_client_server_oriented_client_to_server(self):
        s, c = server(1, 0, 0), client(2, 3, 4)
        edge = make_edge(s, c)
        assert edge.endpoints == (2, 1)
        assert edge.kind is EdgeKind.CLIENT_SERVER

    def test_client_client_ordered_by_id(self):
        edge = make_edge(client(7, 0, 0), client(3, 3, 4))
        assert edge.endpoints == (3, 7)
        assert edge.kind is EdgeKind.CLIENT_CLIENT

    def test_weight_defaults_to_euclidean_distance(self):
        edge = make_edge(client(0, 0, 0), client(1, 3, 4))
        assert edge.weight == 5.0

    def test_server_server_rejected(self):
        with pytest.raises(ValueError):
            make_edge(server(0, 0, 0), server(1, 5, 5))

    def test_self_loop_rejected(self):
        c = client(0, 0, 0)
        with pytest.raises(ValueError):
            make_edge(c, c)

    def test_coincident_endpoints_have_no_positive_weight(self):
        with pytest.raises(ValueError):
            make_edge(client(0, 2, 7), client(1, 2, 7))

    def test_failed_edge_counter_consistency(self):
        edge = make_edge(client(0, 0, 0), client(1, 3, 4))
        with pytest.raises(ValueError):
            replace(edge, state=LinkState.FAILED, steps_since_failure=0)


class TestNetwork:
    def test_edges_must_reference_known_nodes(self):
        a, b = client(0, 0, 0), client(1, 3, 4)
        edge = make_edge(a, b)
        with pytest.raises(ValueError):
            Network(nodes=(a,), edges=(edge,))

    def test_duplicate_edge_pairs_rejected(self):
        a, b = client(0, 0, 0), client(1, 3, 4)
        e1 = make_edge(a, b)
        e2 = make_edge(a, b, weight=2.0)
        with pytest.raises(ValueError):
            Network(nodes=(a, b), edges=(e1, e2))

    def test_duplicate_node_ids_rejected(self):
        with pytest.raises(ValueError):
            Network(nodes=(client(0, 0, 0), server(0, 5, 5)), edges=())

    def test_storage_is_sorted_canonically(self):
        a, b, s = client(5, 0, 0), client(2, 3, 4), server(9, 10, 0)
        net = Network(nodes=(s, a, b), edges=(make_edge(s, a), make_edge(b, a)))
        assert [n.id for n in net.nodes] == [2, 5, 9]
        assert [e.pair for e in net.edges] == [(2, 5), (5, 9)]

    def test_with_edges_replaces_edges_only(self):
        net = build_net([client(0, 0, 0), client(1, 3, 4)], [(0, 1)])
        bare = net.with_edges(())
        assert len(bare.edges) == 0
        assert bare.nodes == net.nodes

    def test_has_edge_is_order_insensitive(self):
        net = build_net([client(0, 0, 0), client(1, 3, 4)], [(0, 1)])
        assert net.has_edge(0, 1) and net.has_edge(1, 0)
        assert not net.has_edge(0, 2)


class TestAdjacencyMatrix:
    def test_no_edges(self):
        net = build_net([client(0, 0, 0), client(1, 3, 4)])
        expected = np.array([[0.0, math.inf], [math.inf, 0.0]])
        assert np.array_equal(adjacency_matrix(net), expected)

    def test_single_working_edge(self):
        net = build_net([client(0, 0, 0), client(1, 3, 4)], [(0, 1)], weight=5.0)
        expected = np.array([[0.0, 5.0], [5.0, 0.0]])
        assert np.array_equal(adjacency_matrix(net), expected)

    def test_failed_edge_is_unreachable_when_respecting_failures(self):
        nodes = [client(0, 0, 0), client(1, 3, 4)]
        edge = fail_edge(make_edge(nodes[0], nodes[1], weight=5.0))
        net = Network(nodes=tuple(nodes), edges=(edge,))
        assert math.isinf(adjacency_matrix(net)[0, 1])
        assert adjacency_matrix(net, respect_failures=False)[0, 1] == 5.0

    def test_symmetric_zero_diagonal_on_random_networks(self):
        rng = Random(4)
        for _ in range(10):
            net = random_network(rng)
            a = adjacency_matrix(net)
            assert np.array_equal(a, a.T)
            assert np.all(np.diag(a) == 0.0)

    def test_empty_network_gives_empty_matrix(self):
        assert adjacency_matrix(Network(nodes=(), edges=())).shape == (0, 0)


class TestPlaceInitial:
    def test_reference_placement(self):
        rng = Random(1)
        net = place_initial(20, 3, (100, 100), 5, rng)
        assert len(net.nodes) == 23
        assert len(net.edges) == 0
        assert len(net.clients) == 20 and len(net.servers) == 3
        for c in net.clients:
            assert 0 < c.traffic < 10
        for s in net.servers:
            assert s.traffic == 100.0

    def test_degenerate_single_server(self):
        net = place_initial(0, 1, (100, 100), 5, Random(2))
        assert len(net.nodes) == 1
        assert net.nodes[0].kind is NodeKind.SERVER

    def test_grid_too_dense(self):
        with pytest.raises(GridTooDenseError):
            place_initial(50, 5, (10, 10), 5, Random(3))

    def test_min_spacing_respected(self):
        for seed in range(5):
            net = place_initial(15, 2, (60, 60), 5, Random(seed))
            nodes = net.nodes
            for i in range(len(nodes)):
                for j in range(i + 1, len(nodes)):
                    assert nodes[i].pos.distance_to(nodes[j].pos) >= 5

    def test_same_seed_same_network(self):
        a = place_initial(10, 2, (80, 80), 5, Random(42))
        b = place_initial(10, 2, (80, 80), 5, Random(42))
        assert a == b
        assert network_digest(a) == network_digest(b)

    def test_positions_inside_grid(self):
        net = place_initial(12, 3, (40, 30), 2, Random(9))
        for n in net.nodes:
            assert 0 <= n.pos.x < 40
            assert 0 <= n.pos.y < 30


class TestPositionNodeId:
    def test_distinct_positions_distinct_ids(self):
        grid = (100, 100)
        seen = set()
        for x in range(0, 100, 7):
            for y in range(0, 100, 7):
                nid = position_node_id(GridPosition(x, y), grid)
                assert nid not in seen
                seen.add(nid)

    def test_ids_beyond_initial_range(self):
        # grid-derived ids start above w*h, clear of small placement ids
        nid = position_node_id(GridPosition(0, 0), (100, 100))
        assert nid >= 100 * 100


def random_network(rng: Random, n_clients: int = 6, n_servers: int = 2) -> Network:
    net = place_initial(n_clients, n_servers, (60, 60), 2, rng)
    nodes = list(net.nodes)
    edges = []
    taken = set()
    for _ in range(rng.randint(0, 10)):
        a, b = rng.sample(nodes, 2)
        if a.kind is NodeKind.SERVER and b.kind is NodeKind.SERVER:
            continue
        pair = (min(a.id, b.id), max(a.id, b.id))
        if pair in taken:
            continue
        taken.add(pair)
        edge = make_edge(a, b, failure_rate=rng.random())
        if rng.random() < 0.3:
            edge = fail_edge(edge, steps=rng.randint(1, 9))
        edges.append(edge)
    return net.with_edges(tuple(edges))


class TestSerialization:
    def test_round_trip_is_lossless(self):
        rng = Random(17)
        for _ in range(25):
            net = random_network(rng)
            assert loads_network(dumps_network(net)) == net

    def test_doc_round_trip_preserves_digest(self):
        net = random_network(Random(5))
        doc = network_to_doc(net)
        again = network_from_doc(json.loads(json.dumps(doc)))
        assert network_digest(again) == network_digest(net)

    def test_format_header_present(self):
        doc = json.loads(dumps_network(build_net([client(0, 0, 0)])))
        assert doc["format"] == FORMAT_NAME
        assert doc["version"] == FORMAT_VERSION

    def test_extra_top_level_keys_survive_and_are_ignored(self):
        net = build_net([client(0, 0, 0), server(1, 5, 5)], [(0, 1)])
        text = dumps_network(net, extra={"config": {"seed": 3}})
        doc = json.loads(text)
        assert doc["config"] == {"seed": 3}
        assert loads_network(text) == net

    def test_wrong_format_rejected(self):
        with pytest.raises(ValueError):
            loads_network(json.dumps({"format": "something-else", "version": 1}))

    def test_wrong_version_rejected(self):
        net = build_net([client(0, 0, 0)])
        doc = network_to_doc(net)
        doc["version"] = 999
        with pytest.raises(ValueError):
            network_from_doc(doc)

    def test_failed_edge_fields_survive(self):
        nodes = [client(0, 0, 0), client(1, 3, 4)]
        edge = fail_edge(make_edge(nodes[0], nodes[1], failure_rate=0.25), steps=4)
        net = Network(nodes=tuple(nodes), edges=(edge,))
        back = loads_network(dumps_network(net))
        (e,) = back.edges
        assert e.state is LinkState.FAILED
        assert e.steps_since_failure == 4
        assert e.failure_rate == 0.25

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_property(self, seed):
        net = random_network(Random(seed), n_clients=4, n_servers=1)
        assert loads_network(dumps_network(net)) == net


class TestDigest:
    def test_digest_is_stable_across_construction_order(self):
        a, b, s = client(0, 0, 0), client(1, 3, 4), server(2, 10, 0)
        e1, e2 = make_edge(a, b), make_edge(a, s)
        n1 = Network(nodes=(a, b, s), edges=(e1, e2))
        n2 = Network(nodes=(s, b, a), edges=(e2, e1))
        assert network_digest(n1) == network_digest(n2)

    def test_digest_changes_with_structure(self):
        a, b = client(0, 0, 0), client(1, 3, 4)
        bare = Network(nodes=(a, b), edges=())
        linked = Network(nodes=(a, b), edges=(make_edge(a, b),))
        assert network_digest(bare) != network_digest(linked)
