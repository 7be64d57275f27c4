"""Network genome: nodes, links, placement and structural invariants.

A network is one genome of the evolutionary engine.  Values are immutable:
every operation that changes a network returns a new one, so genomes can be
shared freely between threads and across generations.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from random import Random
from typing import Iterable

import numpy as np

FORMAT_NAME = "evonet.network"
FORMAT_VERSION = 1

PLACEMENT_ATTEMPTS = 1000  # rejection-sampling cap per node

NodeId = int


class GridTooDenseError(Exception):
    """Raised when rejection sampling cannot place a node at min_spacing."""


class NodeKind(Enum):
    CLIENT = "client"
    SERVER = "server"


class EdgeKind(Enum):
    CLIENT_CLIENT = "client_client"
    CLIENT_SERVER = "client_server"


class LinkState(Enum):
    WORKING = "working"
    FAILED = "failed"


@dataclass(frozen=True)
class GridPosition:
    x: int
    y: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"grid coordinates must be non-negative, got ({self.x}, {self.y})")

    def distance_to(self, other: "GridPosition") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def euclidean_weight(a: GridPosition, b: GridPosition) -> float:
    """Link cost between two grid positions.

    Raises ValueError for coincident points: a zero-weight link would break
    the strictly-positive weight contract of the routing matrices.
    """
    if a == b:
        raise ValueError(f"coincident positions {a}; link weight must be > 0")
    return a.distance_to(b)


@dataclass(frozen=True)
class Node:
    id: NodeId
    kind: NodeKind
    pos: GridPosition
    traffic: float  # clients: requested traffic; servers: capacity
    failure_rate: float = 0.0
    state: LinkState = LinkState.WORKING
    steps_since_failure: int = 0

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"node id must be non-negative, got {self.id}")
        if self.traffic < 0:
            raise ValueError(f"node {self.id}: traffic must be >= 0")
        if self.kind is NodeKind.CLIENT and self.traffic <= 0:
            raise ValueError(f"client {self.id}: traffic must be > 0")
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ValueError(f"node {self.id}: failure_rate outside [0, 1]")
        _check_state_counter(f"node {self.id}", self.state, self.steps_since_failure)


@dataclass(frozen=True)
class Edge:
    """Undirected link, stored with a canonical endpoint order.

    Client-server links are stored (client, server); that orientation is what
    the redundancy/pleiotropy degree counts read.  Client-client links are
    stored (low id, high id).
    """

    endpoints: tuple[NodeId, NodeId]
    kind: EdgeKind
    weight: float
    failure_rate: float = 0.0
    state: LinkState = LinkState.WORKING
    steps_since_failure: int = 0

    def __post_init__(self):
        a, b = self.endpoints
        if a == b:
            raise ValueError(f"self-loop on node {a}")
        if self.weight <= 0:
            raise ValueError(f"edge {self.endpoints}: weight must be > 0")
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ValueError(f"edge {self.endpoints}: failure_rate outside [0, 1]")
        _check_state_counter(f"edge {self.endpoints}", self.state, self.steps_since_failure)

    @property
    def pair(self) -> tuple[NodeId, NodeId]:
        """Unordered identity of the link (low id, high id)."""
        a, b = self.endpoints
        return (a, b) if a <= b else (b, a)

    @property
    def working(self) -> bool:
        return self.state is LinkState.WORKING


def _check_state_counter(what: str, state: LinkState, steps: int) -> None:
    if steps < 0:
        raise ValueError(f"{what}: steps_since_failure must be >= 0")
    if (state is LinkState.WORKING) != (steps == 0):
        raise ValueError(f"{what}: state {state.value} inconsistent with steps_since_failure {steps}")


def make_edge(
    a: Node,
    b: Node,
    failure_rate: float = 0.0,
    state: LinkState = LinkState.WORKING,
    steps_since_failure: int = 0,
    weight: float | None = None,
) -> Edge:
    """Build a link between two placed nodes with canonical orientation.

    Weight defaults to the Euclidean distance between the endpoints.
    Server-server links are not part of the model and are rejected.
    """
    if a.kind is NodeKind.SERVER and b.kind is NodeKind.SERVER:
        raise ValueError(f"server-server link ({a.id}, {b.id}) is not allowed")
    if a.kind is NodeKind.SERVER:
        a, b = b, a  # orient client -> server
    if a.kind is NodeKind.CLIENT and b.kind is NodeKind.CLIENT:
        kind = EdgeKind.CLIENT_CLIENT
        if a.id > b.id:
            a, b = b, a
    else:
        kind = EdgeKind.CLIENT_SERVER
    if weight is None:
        weight = euclidean_weight(a.pos, b.pos)
    return Edge((a.id, b.id), kind, weight, failure_rate, state, steps_since_failure)


@dataclass(frozen=True)
class Network:
    """One genome: a node set plus an edge set over those nodes.

    Nodes are kept sorted by id and edges by unordered endpoint pair, so two
    structurally equal networks are representationally equal as well (this is
    what makes digests and seeded runs reproducible).
    """

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...] = ()
    generation_born: int = 0

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes, key=lambda n: n.id))
        edges = tuple(sorted(self.edges, key=lambda e: e.pair))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        self._validate()

    def _validate(self) -> None:
        by_id: dict[NodeId, Node] = {}
        for n in self.nodes:
            if n.id in by_id:
                raise ValueError(f"duplicate node id {n.id}")
            by_id[n.id] = n
        seen: set[tuple[NodeId, NodeId]] = set()
        for e in self.edges:
            a, b = e.endpoints
            if a not in by_id or b not in by_id:
                raise ValueError(f"edge {e.endpoints} references a missing node")
            if e.pair in seen:
                raise ValueError(f"duplicate link between {e.pair}")
            seen.add(e.pair)
            expected = _derive_kind(by_id[a], by_id[b])
            if e.kind is not expected:
                raise ValueError(f"edge {e.endpoints}: kind {e.kind.value} does not match endpoints")
            if e.kind is EdgeKind.CLIENT_SERVER and by_id[a].kind is not NodeKind.CLIENT:
                raise ValueError(f"edge {e.endpoints}: client-server link must be oriented client -> server")

    @cached_property
    def node_by_id(self) -> dict[NodeId, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def edge_by_pair(self) -> dict[tuple[NodeId, NodeId], Edge]:
        return {e.pair: e for e in self.edges}

    @cached_property
    def clients(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind is NodeKind.CLIENT)

    @cached_property
    def servers(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind is NodeKind.SERVER)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def has_edge(self, a: NodeId, b: NodeId) -> bool:
        key = (a, b) if a <= b else (b, a)
        return key in self.edge_by_pair

    def working_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.working)

    def with_edges(self, edges: Iterable[Edge]) -> "Network":
        return Network(self.nodes, tuple(edges), self.generation_born)

    def with_nodes_and_edges(self, nodes: Iterable[Node], edges: Iterable[Edge]) -> "Network":
        return Network(tuple(nodes), tuple(edges), self.generation_born)

    def born_at(self, generation: int) -> "Network":
        return replace(self, generation_born=generation)


def _derive_kind(a: Node, b: Node) -> EdgeKind:
    if a.kind is NodeKind.CLIENT and b.kind is NodeKind.CLIENT:
        return EdgeKind.CLIENT_CLIENT
    return EdgeKind.CLIENT_SERVER


def position_node_id(pos: GridPosition, grid: tuple[int, int]) -> NodeId:
    """Stable id for a node added at a grid position after initial placement.

    The id doubles as a grid reference, so two lineages that add a server at
    the same position agree on its identity and crossover unions stay
    well-defined.  Offset past grid_w*grid_h keeps these ids disjoint from
    the 0..n-1 ids of initially placed nodes.
    """
    w, h = grid
    return w * h + pos.y * w + pos.x


def sample_position(
    grid: tuple[int, int],
    min_spacing: float,
    taken: list[GridPosition],
    rng: Random,
    attempts: int = PLACEMENT_ATTEMPTS,
) -> GridPosition | None:
    """Draw a position at least min_spacing from every taken one, or None."""
    w, h = grid
    for _ in range(attempts):
        pos = GridPosition(rng.randrange(w), rng.randrange(h))
        if all(pos.distance_to(p) >= min_spacing for p in taken):
            return pos
    return None


def place_initial(
    n_clients: int,
    n_servers: int,
    grid: tuple[int, int],
    min_spacing: float,
    rng: Random,
    t_max: float = 10.0,
    t_s: float = 100.0,
) -> Network:
    """Place clients and servers at random positions with no links.

    Clients get ids 0..n_clients-1 and a traffic demand drawn uniformly from
    the open interval (0, t_max); servers follow with capacity t_s.  Placement
    is by rejection sampling; exhausting the attempt budget raises
    GridTooDenseError rather than silently violating the spacing constraint.
    """
    if n_clients < 0 or n_servers < 0:
        raise ValueError("node counts must be non-negative")
    if t_max <= 0 or t_s <= 0:
        raise ValueError("traffic bounds must be positive")
    taken: list[GridPosition] = []
    nodes: list[Node] = []
    for i in range(n_clients + n_servers):
        pos = sample_position(grid, min_spacing, taken, rng)
        if pos is None:
            raise GridTooDenseError(
                f"grid too dense: could not place node {i} of {n_clients + n_servers} "
                f"on {grid[0]}x{grid[1]} at spacing {min_spacing} "
                f"after {PLACEMENT_ATTEMPTS} attempts"
            )
        taken.append(pos)
        if i < n_clients:
            traffic = rng.uniform(0.0, t_max)
            while not 0.0 < traffic < t_max:
                traffic = rng.uniform(0.0, t_max)
            nodes.append(Node(i, NodeKind.CLIENT, pos, traffic))
        else:
            nodes.append(Node(i, NodeKind.SERVER, pos, t_s))
    return Network(tuple(nodes))


def adjacency_matrix(net: Network, respect_failures: bool = True) -> np.ndarray:
    """Symmetric extended-real adjacency matrix in sorted-NodeId order.

    Entry [i][j] is the link weight when a link is present (and working, if
    respect_failures), +inf otherwise; the diagonal is zero.  Row order is
    net.nodes, which is sorted by id.
    """
    n = net.n_nodes
    a = np.full((n, n), np.inf)
    np.fill_diagonal(a, 0.0)
    index = {node.id: i for i, node in enumerate(net.nodes)}
    for e in net.edges:
        if respect_failures and not e.working:
            continue
        i, j = index[e.endpoints[0]], index[e.endpoints[1]]
        a[i, j] = e.weight
        a[j, i] = e.weight
    return a


# -- serialization ------------------------------------------------------------

def node_to_doc(n: Node) -> dict:
    return {
        "id": n.id,
        "kind": n.kind.value,
        "x": n.pos.x,
        "y": n.pos.y,
        "traffic": n.traffic,
        "failure_rate": n.failure_rate,
        "state": n.state.value,
        "steps_since_failure": n.steps_since_failure,
    }


def edge_to_doc(e: Edge) -> dict:
    return {
        "endpoints": list(e.endpoints),
        "kind": e.kind.value,
        "weight": e.weight,
        "failure_rate": e.failure_rate,
        "state": e.state.value,
        "steps_since_failure": e.steps_since_failure,
    }


def network_to_doc(net: Network) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "generation_born": net.generation_born,
        "nodes": [node_to_doc(n) for n in net.nodes],
        "edges": [edge_to_doc(e) for e in net.edges],
    }


def node_from_doc(doc: dict) -> Node:
    return Node(
        id=int(doc["id"]),
        kind=NodeKind(doc["kind"]),
        pos=GridPosition(int(doc["x"]), int(doc["y"])),
        traffic=float(doc["traffic"]),
        failure_rate=float(doc["failure_rate"]),
        state=LinkState(doc["state"]),
        steps_since_failure=int(doc["steps_since_failure"]),
    )


def edge_from_doc(doc: dict) -> Edge:
    a, b = doc["endpoints"]
    return Edge(
        endpoints=(int(a), int(b)),
        kind=EdgeKind(doc["kind"]),
        weight=float(doc["weight"]),
        failure_rate=float(doc["failure_rate"]),
        state=LinkState(doc["state"]),
        steps_since_failure=int(doc["steps_since_failure"]),
    )


def network_from_doc(doc: dict) -> Network:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a network document (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network document version {doc.get('version')!r}")
    return Network(
        nodes=tuple(node_from_doc(d) for d in doc["nodes"]),
        edges=tuple(edge_from_doc(d) for d in doc["edges"]),
        generation_born=int(doc["generation_born"]),
    )


def dumps_network(net: Network, extra: dict | None = None) -> str:
    """Render a network document; extra top-level keys (e.g. the effective
    run config) are carried along and ignored on load."""
    doc = network_to_doc(net)
    if extra:
        for key, value in extra.items():
            doc.setdefault(key, value)
    return json.dumps(doc, indent=2, sort_keys=True)


def loads_network(text: str) -> Network:
    return network_from_doc(json.loads(text))


def network_digest(net: Network) -> str:
    """Content hash of the canonical serialization (identity of a genome)."""
    canon = json.dumps(network_to_doc(net), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
