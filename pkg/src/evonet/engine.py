"""The evolutionary loop.

One generation: score every genome, keep the top q unmodified as elites,
breed one child per unordered elite pair (edge-union crossover), then put
each child through stochastic link failure/repair and the utilization-driven
mutation.  The population size is therefore always (q^2 - q)/2 + q.

All randomness flows through a single seeded Random instance consumed in a
fixed order, so a run is a pure function of its config and initial network.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, fields, replace
from random import Random
from typing import Callable

from .apsp import DistanceMatrix
from .metrics import NetworkScores, score, utilization, working_distances
from .model import (
    Edge,
    LinkState,
    Network,
    Node,
    NodeKind,
    make_edge,
    network_digest,
    network_from_doc,
    network_to_doc,
    place_initial,
    position_node_id,
    sample_position,
)

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "evonet.checkpoint"
CHECKPOINT_VERSION = 1

# "same maximum fitness" for convergence detection: fitness is a ratio of
# sums of irrational distances, so only the identical elite genome can match
# this tightly.
CONVERGENCE_REL_TOL = 1e-9
CONVERGENCE_WINDOW = 3

MatingObserver = Callable[[Network, Network, Network], None]


class ConfigError(ValueError):
    """Invalid run parameters; .errors maps field name to the problem."""

    def __init__(self, errors: dict[str, str]):
        self.errors = errors
        super().__init__("; ".join(f"{k}: {v}" for k, v in sorted(errors.items())))


@dataclass(frozen=True)
class GaConfig:
    q: int = 5
    generations: int = 75
    link_failure_prob: float = 0.01
    link_repair_prob: float = 0.1
    u_low: float = 0.75
    u_high: float = 0.85
    links_per_low_mutation: int = 3
    crossover_keep_prob: float = 0.5
    server_link_bias: float = 0.8
    seed: int = 1
    n_clients: int = 20
    n_servers: int = 3
    grid_width: int = 100
    grid_height: int = 100
    min_spacing: float = 5.0
    t_max: float = 10.0
    t_s: float = 100.0

    def validate(self) -> dict[str, str]:
        errors: dict[str, str] = {}
        if self.q < 2:
            errors["q"] = "selection count q must be >= 2"
        if self.generations < 0:
            errors["generations"] = "generation budget must be >= 0"
        for name in ("link_failure_prob", "link_repair_prob", "crossover_keep_prob", "server_link_bias"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                errors[name] = "probability must lie in [0, 1]"
        if not 0.0 < self.u_low:
            errors["u_low"] = "utilization threshold must be > 0"
        elif not self.u_low < self.u_high:
            errors["u_high"] = "u_high must be greater than u_low"
        if self.links_per_low_mutation < 0:
            errors["links_per_low_mutation"] = "link count must be >= 0"
        if self.n_clients < 0:
            errors["n_clients"] = "client count must be >= 0"
        if self.n_servers < 1:
            errors["n_servers"] = "at least one server is required"
        if self.grid_width < 1 or self.grid_height < 1:
            errors["grid_width" if self.grid_width < 1 else "grid_height"] = "grid dimensions must be >= 1"
        if self.min_spacing < 0:
            errors["min_spacing"] = "minimum spacing must be >= 0"
        if self.t_max <= 0:
            errors["t_max"] = "client traffic bound must be > 0"
        if self.t_s <= 0:
            errors["t_s"] = "server capacity must be > 0"
        return errors

    def check(self) -> "GaConfig":
        errors = self.validate()
        if errors:
            raise ConfigError(errors)
        return self

    @property
    def grid(self) -> tuple[int, int]:
        return (self.grid_width, self.grid_height)

    def to_doc(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_doc(cls, doc: dict) -> "GaConfig":
        return cls().patched(doc)

    def patched(self, patch: dict) -> "GaConfig":
        """Apply a partial config, coercing numeric types; unknown or
        non-numeric fields raise ConfigError."""
        known = {f.name: f for f in fields(self)}
        updates = {}
        errors: dict[str, str] = {}
        for key, value in patch.items():
            if key not in known:
                errors[key] = "unknown config field"
                continue
            target = known[key].type
            try:
                if target == "int":
                    if isinstance(value, float) and not value.is_integer():
                        raise ValueError
                    updates[key] = int(value)
                else:
                    updates[key] = float(value)
            except (TypeError, ValueError):
                errors[key] = f"expected a number, got {value!r}"
        if errors:
            raise ConfigError(errors)
        return replace(self, **updates)


def population_size(q: int) -> int:
    """Elites plus one child per unordered elite pair: (q^2 - q)/2 + q."""
    return (q * q - q) // 2 + q


def derive_seed(seed: int, label: str) -> int:
    """Independent integer seed for a named substream of a run."""
    digest = hashlib.sha256(f"{label}:{seed}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def initial_network(cfg: GaConfig) -> Network:
    """The run's initial edgeless placement, derived from cfg.seed."""
    rng = Random(derive_seed(cfg.seed, "placement"))
    return place_initial(
        cfg.n_clients,
        cfg.n_servers,
        cfg.grid,
        cfg.min_spacing,
        rng,
        t_max=cfg.t_max,
        t_s=cfg.t_s,
    )


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_scores: NetworkScores
    best_network_digest: str
    population_fitness: tuple[float, ...]
    converged: bool = False

    def to_doc(self) -> dict:
        return {
            "generation": self.generation,
            "best_scores": self.best_scores.to_doc(),
            "best_network_digest": self.best_network_digest,
            "population_fitness": list(self.population_fitness),
            "converged": self.converged,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "GenerationRecord":
        return cls(
            generation=int(doc["generation"]),
            best_scores=NetworkScores.from_doc(doc["best_scores"]),
            best_network_digest=str(doc["best_network_digest"]),
            population_fitness=tuple(float(x) for x in doc["population_fitness"]),
            converged=bool(doc["converged"]),
        )


# -- genetic operators --------------------------------------------------------

def apply_failures(net: Network, cfg: GaConfig, rng: Random) -> Network:
    """One time step of stochastic link dynamics.

    Each working link fails with link_failure_prob; each failed link repairs
    with link_repair_prob, otherwise its down-counter advances.  The config
    probabilities are authoritative (they can be retuned mid-run); the
    failure_rate recorded on each edge is the value it was created under.
    """
    changed = False
    edges = []
    for e in net.edges:
        if e.working:
            if rng.random() < cfg.link_failure_prob:
                e = replace(e, state=LinkState.FAILED, steps_since_failure=1)
                changed = True
        else:
            if rng.random() < cfg.link_repair_prob:
                e = replace(e, state=LinkState.WORKING, steps_since_failure=0)
            else:
                e = replace(e, steps_since_failure=e.steps_since_failure + 1)
            changed = True
        edges.append(e)
    return net.with_edges(edges) if changed else net


def _legal_new_pairs(net: Network) -> list[tuple[int, int]]:
    """Unordered node pairs that could legally carry a new link, in id order."""
    nodes = net.nodes
    pairs = []
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if a.kind is NodeKind.SERVER and b.kind is NodeKind.SERVER:
                continue
            if not net.has_edge(a.id, b.id):
                pairs.append((a.id, b.id))
    return pairs


def _unserved_clients(net: Network, dist: DistanceMatrix) -> list[int]:
    index = {nid: i for i, nid in enumerate(dist.ids)}
    server_rows = [index[s.id] for s in net.servers if s.state is LinkState.WORKING]
    unserved = []
    for c in net.clients:
        row = dist.d[index[c.id]]
        if not any(math.isfinite(row[s]) for s in server_rows):
            unserved.append(c.id)
    return unserved


def _add_random_links(net: Network, cfg: GaConfig, rng: Random, dist: DistanceMatrix) -> Network:
    """Attach up to links_per_low_mutation new links.

    With probability server_link_bias a link joins a still-unserved client to
    a random server (uniform random additions raise utilization far too
    slowly on a sparse bipartite-ish graph); otherwise, or when every client
    is served, a uniform legal pair is drawn.  Runs out of legal pairs
    silently: a complete graph has nothing left to add.
    """
    legal = _legal_new_pairs(net)
    unserved = _unserved_clients(net, dist)
    servers = [s.id for s in net.servers]
    new_edges: list[Edge] = []
    by_id = net.node_by_id
    taken = {e.pair for e in net.edges}

    def claim(a: int, b: int) -> None:
        pair = (a, b) if a <= b else (b, a)
        taken.add(pair)
        if pair in legal:
            legal.remove(pair)
        new_edges.append(make_edge(by_id[a], by_id[b], failure_rate=cfg.link_failure_prob))

    for _ in range(cfg.links_per_low_mutation):
        if not legal:
            break
        pick: tuple[int, int] | None = None
        if unserved and servers and rng.random() < cfg.server_link_bias:
            c = unserved[rng.randrange(len(unserved))]
            s = servers[rng.randrange(len(servers))]
            pair = (c, s) if c <= s else (s, c)
            if pair not in taken:
                pick = (c, s)
                unserved.remove(c)
        if pick is None:
            pick = legal[rng.randrange(len(legal))]
        claim(*pick)
    return net.with_edges(net.edges + tuple(new_edges)) if new_edges else net


def _remove_random_working_link(net: Network, rng: Random) -> Network:
    working = net.working_edges()
    if not working:
        return net
    victim = working[rng.randrange(len(working))]
    return net.with_edges(e for e in net.edges if e is not victim)


def _add_server(net: Network, cfg: GaConfig, rng: Random) -> Network:
    taken = [n.pos for n in net.nodes]
    pos = sample_position(cfg.grid, cfg.min_spacing, taken, rng)
    if pos is None:
        logger.warning("server placement failed (grid too dense); mutation skipped")
        return net
    server = Node(position_node_id(pos, cfg.grid), NodeKind.SERVER, pos, cfg.t_s)
    return net.with_nodes_and_edges(net.nodes + (server,), net.edges)


def mutate(net: Network, cfg: GaConfig, rng: Random) -> Network:
    """Utilization-driven structural mutation.

    Below u_low, capacity is going spare: add links.  Above u_high, demand
    crowds the servers: either drop a random working link or stand up a new
    server, with equal probability.  In between the network is left alone.
    """
    if not net.servers:
        raise ValueError("mutation requires at least one server")
    dist = working_distances(net)
    u = utilization(net, dist)
    if u < cfg.u_low:
        return _add_random_links(net, cfg, rng, dist)
    if u > cfg.u_high:
        if rng.random() < 0.5:
            return _remove_random_working_link(net, rng)
        return _add_server(net, cfg, rng)
    return net


def crossover(a: Network, b: Network, cfg: GaConfig, rng: Random) -> Network:
    """Edge-union recombination.

    The child's node set is the union of the parents' (by id, O(N)); edges
    present in both parents are always kept, edges of the symmetric
    difference survive independently with crossover_keep_prob.  By
    construction the child's edges are a subset of the parents' union.
    """
    ids_a = set(a.node_by_id)
    ids_b = set(b.node_by_id)
    if ids_a and ids_b and not ids_a & ids_b:
        raise ValueError("parents share no node ids; crossover requires a common initial placement")
    nodes = dict(b.node_by_id)
    nodes.update(a.node_by_id)  # shared ids resolve to parent a's copy

    pairs_a = a.edge_by_pair
    pairs_b = b.edge_by_pair
    edges: list[Edge] = []
    for pair in sorted(pairs_a.keys() & pairs_b.keys()):
        ea, eb = pairs_a[pair], pairs_b[pair]
        if ea.working or not eb.working:
            edges.append(ea)  # a's copy, or both failed: inherit a's counter
        else:
            edges.append(eb)
    for pair in sorted(pairs_a.keys() ^ pairs_b.keys()):
        if rng.random() < cfg.crossover_keep_prob:
            edges.append(pairs_a.get(pair) or pairs_b[pair])
    born = max(a.generation_born, b.generation_born)
    return Network(tuple(nodes.values()), tuple(edges), generation_born=born)


# -- generation loop ----------------------------------------------------------

@dataclass(frozen=True)
class ScoredGenome:
    network: Network
    scores: NetworkScores
    digest: str


def score_population(population: list[Network]) -> list[ScoredGenome]:
    return [ScoredGenome(net, score(net), network_digest(net)) for net in population]


def _rank_key(sg: ScoredGenome):
    # ties broken toward lower cost, then lower digest: fully deterministic
    return (-sg.scores.fitness, sg.scores.cost, sg.digest)


def step_generation(
    population: list[Network],
    cfg: GaConfig,
    rng: Random,
    generation: int = 1,
    on_mating: MatingObserver | None = None,
) -> tuple[list[Network], GenerationRecord]:
    """Run one generation and report on the population that entered it."""
    if not population:
        raise ValueError("population must be non-empty")
    scored = score_population(population)
    ranked = sorted(scored, key=_rank_key)
    parents = ranked[: cfg.q]
    if len(parents) < cfg.q:
        logger.warning(
            "population %d smaller than q=%d; padding with clones of the best genome",
            len(population), cfg.q,
        )
        parents = parents + [ranked[0]] * (cfg.q - len(parents))

    next_population = [p.network for p in parents]
    for i in range(cfg.q):
        for j in range(i + 1, cfg.q):
            child = crossover(parents[i].network, parents[j].network, cfg, rng)
            if on_mating is not None:
                on_mating(parents[i].network, parents[j].network, child)
            child = apply_failures(child, cfg, rng)
            child = mutate(child, cfg, rng)
            next_population.append(child.born_at(generation))

    record = GenerationRecord(
        generation=generation,
        best_scores=ranked[0].scores,
        best_network_digest=ranked[0].digest,
        population_fitness=tuple(sg.scores.fitness for sg in scored),
    )
    return next_population, record


def _fitness_close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=CONVERGENCE_REL_TOL, abs_tol=0.0)


class Evolution:
    """A stateful, checkpointable run of the genetic algorithm.

    The constructor seeds a population of (q^2-q)/2 + q copies of the initial
    edgeless network, each independently mutated once.  step() advances one
    generation; convergence (three successive generations with the same
    maximum fitness) is recorded on the emitted records but never stops the
    run: the generation budget always plays out in full.
    """

    def __init__(
        self,
        cfg: GaConfig,
        initial: Network | None = None,
        on_mating: MatingObserver | None = None,
    ):
        cfg.check()
        self.cfg = cfg
        self.on_mating = on_mating
        self.rng = Random(cfg.seed)
        self.initial = initial_network(cfg) if initial is None else initial
        self.population: list[Network] = [
            mutate(self.initial, cfg, self.rng) for _ in range(population_size(cfg.q))
        ]
        self.records: list[GenerationRecord] = []
        self._elite_cache: tuple[int, ScoredGenome] | None = None

    @property
    def generation(self) -> int:
        return len(self.records)

    @property
    def finished(self) -> bool:
        return self.generation >= self.cfg.generations

    def replace_config(self, cfg: GaConfig) -> None:
        """Swap run parameters between generations; the population carries
        over untouched and the next step uses the new values."""
        cfg.check()
        self.cfg = cfg

    def step(self) -> GenerationRecord:
        if self.finished:
            raise RuntimeError(f"generation budget of {self.cfg.generations} exhausted")
        generation = self.generation + 1
        self.population, record = step_generation(
            self.population, self.cfg, self.rng,
            generation=generation, on_mating=self.on_mating,
        )
        window = [r.best_scores.fitness for r in self.records[-(CONVERGENCE_WINDOW - 1):]]
        window.append(record.best_scores.fitness)
        if len(window) == CONVERGENCE_WINDOW and all(
            _fitness_close(x, y) for x, y in zip(window, window[1:])
        ):
            record = replace(record, converged=True)
        self.records.append(record)
        return record

    def run_to_end(self) -> list[GenerationRecord]:
        while not self.finished:
            self.step()
        return self.records

    def elite(self) -> ScoredGenome:
        """Best genome of the current population (cached per generation)."""
        if self._elite_cache is None or self._elite_cache[0] != self.generation:
            best = min(score_population(self.population), key=_rank_key)
            self._elite_cache = (self.generation, best)
        return self._elite_cache[1]

    # -- checkpointing --------------------------------------------------------

    def checkpoint(self) -> dict:
        """Full engine state; resuming reproduces the identical continuation."""
        version, state, gauss = self.rng.getstate()
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": self.cfg.to_doc(),
            "generation": self.generation,
            "rng_state": [version, list(state), gauss],
            "initial": network_to_doc(self.initial),
            "population": [network_to_doc(net) for net in self.population],
            "records": [r.to_doc() for r in self.records],
        }

    @classmethod
    def from_checkpoint(cls, doc: dict, on_mating: MatingObserver | None = None) -> "Evolution":
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"not an engine checkpoint (format={doc.get('format')!r})")
        if doc.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
        engine = cls.__new__(cls)
        engine.cfg = GaConfig.from_doc(doc["config"]).check()
        engine.on_mating = on_mating
        engine.rng = Random()
        version, state, gauss = doc["rng_state"]
        engine.rng.setstate((version, tuple(state), gauss))
        engine.initial = network_from_doc(doc["initial"])
        engine.population = [network_from_doc(d) for d in doc["population"]]
        engine.records = [GenerationRecord.from_doc(d) for d in doc["records"]]
        engine._elite_cache = None
        return engine


def run(cfg: GaConfig, initial: Network | None = None) -> list[GenerationRecord]:
    """Seed, evolve for the configured budget, and return every record."""
    return Evolution(cfg, initial).run_to_end()


def convergence_time(records: list[GenerationRecord], budget: int | None = None) -> tuple[int, bool]:
    """Generation of first convergence, or the budget when never converged.

    Returns (generations, converged_flag).
    """
    for record in records:
        if record.converged:
            return record.generation, True
    if budget is None:
        budget = records[-1].generation if records else 0
    return budget, False
