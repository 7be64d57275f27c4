"""Evolutionary design of client-server networks under random link failure.

A genetic algorithm grows network topologies on a grid, scoring each one
by how much connectivity it buys per unit of link cost while links fail
and recover stochastically.  The package also ships the experiment
harness, an HTTP control service for live runs, and a CLI.
"""

from .apsp import DistanceMatrix, minplus_multiply, shortest_distances
from .engine import (
    ConfigError,
    Evolution,
    GaConfig,
    GenerationRecord,
    convergence_time,
    crossover,
    mutate,
    population_size,
    run,
)
from .metrics import NetworkScores, score
from .model import (
    Edge,
    EdgeKind,
    GridPosition,
    LinkState,
    Network,
    Node,
    NodeKind,
    dumps_network,
    loads_network,
    make_edge,
    network_digest,
    place_initial,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DistanceMatrix",
    "Edge",
    "EdgeKind",
    "Evolution",
    "GaConfig",
    "GenerationRecord",
    "GridPosition",
    "LinkState",
    "Network",
    "NetworkScores",
    "Node",
    "NodeKind",
    "convergence_time",
    "crossover",
    "dumps_network",
    "loads_network",
    "make_edge",
    "minplus_multiply",
    "mutate",
    "network_digest",
    "place_initial",
    "population_size",
    "run",
    "score",
    "shortest_distances",
    "__version__",
]
