"""Scalar observables of a network genome.

All scores are pure functions of the genome.  Routing-dependent quantities
(utilization, cost, reliability) read the working-links shortest-distance
matrix; the degree-based observables (redundancy, pleiotropy) count working
links directly.  Sums over node pairs run over ordered pairs with i != j,
and undirected links contribute their weight in both directions; this
convention is fixed so fitness values are comparable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .apsp import DistanceMatrix, connected_pair_count, shortest_distances
from .model import EdgeKind, LinkState, Network, adjacency_matrix


@dataclass(frozen=True)
class NetworkScores:
    utilization: float
    cost: float
    reliability: int
    fitness: float
    redundancy: float
    pleiotropy: float

    def to_doc(self) -> dict:
        return {
            "utilization": self.utilization,
            "cost": self.cost,
            "reliability": self.reliability,
            "fitness": self.fitness,
            "redundancy": self.redundancy,
            "pleiotropy": self.pleiotropy,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "NetworkScores":
        return cls(
            utilization=float(doc["utilization"]),
            cost=float(doc["cost"]),
            reliability=int(doc["reliability"]),
            fitness=float(doc["fitness"]),
            redundancy=float(doc["redundancy"]),
            pleiotropy=float(doc["pleiotropy"]),
        )


def working_distances(net: Network) -> DistanceMatrix:
    """Shortest distances over working links only."""
    a = adjacency_matrix(net, respect_failures=True)
    return shortest_distances(a, ids=tuple(n.id for n in net.nodes))


def _served_client_traffic(net: Network, dist: DistanceMatrix) -> float:
    """Total demand of clients that can reach a working server."""
    index = {nid: i for i, nid in enumerate(dist.ids)}
    server_rows = [index[s.id] for s in net.servers if s.state is LinkState.WORKING]
    if not server_rows:
        return 0.0
    total = 0.0
    for c in net.clients:
        row = dist.d[index[c.id]]
        if any(np.isfinite(row[s]) for s in server_rows):
            total += c.traffic
    return total


def server_capacity(net: Network) -> float:
    return sum(s.traffic for s in net.servers)


def utilization(net: Network, dist: DistanceMatrix | None = None) -> float:
    """Served client demand over aggregate server capacity.

    Only clients with a finite working-path distance to a working server
    count toward the numerator, so removing links lowers the value; the
    as-printed ratio over all clients is nominal_utilization.
    """
    if not net.servers:
        raise ValueError("utilization is undefined for a network with no servers")
    if dist is None:
        dist = working_distances(net)
    return _served_client_traffic(net, dist) / server_capacity(net)


def nominal_utilization(net: Network) -> float:
    """Demand-over-capacity ratio counting every client, connected or not."""
    if not net.servers:
        raise ValueError("utilization is undefined for a network with no servers")
    return sum(c.traffic for c in net.clients) / server_capacity(net)


def cost(net: Network, dist: DistanceMatrix) -> float:
    """Total working-link weight over total finite shortest-path distance.

    Both sums run over ordered pairs, so each undirected link counts twice
    in the numerator.  A network with no working links has cost 0 (both sums
    are empty).
    """
    weight_sum = 2.0 * sum(e.weight for e in net.edges if e.working)
    if weight_sum == 0.0:
        return 0.0
    finite = np.isfinite(dist.d)
    np.fill_diagonal(finite, False)
    distance_sum = float(dist.d[finite].sum())
    return weight_sum / distance_sum


def reliability(dist: DistanceMatrix) -> int:
    """Count of ordered node pairs with a finite shortest-path distance."""
    return connected_pair_count(dist)


def client_out_degree(net: Network, client_id: int) -> int:
    """Working links oriented out of a client: its client->server links plus
    every client-client link it touches (both endpoints accrue out-degree)."""
    degree = 0
    for e in net.edges:
        if not e.working:
            continue
        if e.kind is EdgeKind.CLIENT_SERVER:
            if e.endpoints[0] == client_id:
                degree += 1
        elif client_id in e.endpoints:
            degree += 1
    return degree


def server_in_degree(net: Network, server_id: int) -> int:
    """Working client->server links into a server."""
    return sum(
        1
        for e in net.edges
        if e.working and e.kind is EdgeKind.CLIENT_SERVER and e.endpoints[1] == server_id
    )


def redundancy(net: Network) -> float:
    """Mean alternative service paths per server: sum of client out-degrees
    over the server count."""
    if not net.servers:
        raise ValueError("redundancy is undefined for a network with no servers")
    total = sum(client_out_degree(net, c.id) for c in net.clients)
    return total / len(net.servers)


def pleiotropy(net: Network) -> float:
    """Mean serving spread per client: sum of server in-degrees over the
    client count."""
    if not net.clients:
        raise ValueError("pleiotropy is undefined for a network with no clients")
    total = sum(server_in_degree(net, s.id) for s in net.servers)
    return total / len(net.clients)


def score(net: Network) -> NetworkScores:
    """Compute the working-links distance matrix once and all six scores.

    Fitness is reliability/cost, with fitness 0 for networks with no working
    links: the raw ratio degenerates to 0/0 there, and rewarding link
    removal with infinite fitness is exactly what the cost denominator is
    meant to prevent.
    """
    dist = working_distances(net)
    u = utilization(net, dist)
    p = cost(net, dist)
    r = reliability(dist)
    f = r / p if p > 0.0 else 0.0
    d = redundancy(net)
    pleio = pleiotropy(net) if net.clients else 0.0
    return NetworkScores(
        utilization=u,
        cost=p,
        reliability=r,
        fitness=f,
        redundancy=d,
        pleiotropy=pleio,
    )
