"""NEAT genomes: genes, innovation bookkeeping, phenotype evaluation, variation.

Node ids are fixed by layout: inputs ``0..n-1``, the bias node ``n``, outputs
``n+1..n+m``; hidden nodes are numbered by the :class:`InnovationLedger` from
``n+m+1`` upwards. Connection genes are keyed by innovation number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Any, Callable, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from noveltest.neat.population import NeatParams
    from noveltest.vm.interpreter import Action

INPUT = "input"
BIAS = "bias"
HIDDEN = "hidden"
OUTPUT = "output"
ACTIVATIONS: dict[str, Callable[[float], float]] = {
    "tanh": math.tanh,
    "sigmoid": lambda x: 1.0 / (1.0 + math.exp(-max(-60.0, min(60.0, x)))),
}
WEIGHT_LIMIT = 8.0
# share of weight mutations that perturb rather than redraw the weight
PERTURB_SHARE = 0.9
# chance that a gene disabled in either parent comes back enabled
REENABLE_PROB = 0.25


class GenomeError(ValueError):
    pass


@dataclass(frozen=True)
class NodeGene:
    id: int
    role: str
    activation: str = "tanh"


@dataclass(frozen=True)
class ConnectionGene:
    innovation: int
    source: int
    target: int
    weight: float
    enabled: bool = True


@dataclass
class Genome:
    id: int
    n_inputs: int
    n_outputs: int
    nodes: dict[int, NodeGene]
    connections: dict[int, ConnectionGene]
    fitness: float = 0.0
    novelty: float = 0.0
    adjusted_fitness: float = 0.0

    @property
    def bias_node(self) -> int:
        return self.n_inputs

    @property
    def output_nodes(self) -> range:
        return range(self.n_inputs + 1, self.n_inputs + 1 + self.n_outputs)

    def copy(self, new_id: int | None = None) -> "Genome":
        return replace(
            self,
            id=self.id if new_id is None else new_id,
            nodes=dict(self.nodes),
            connections=dict(self.connections),
        )

    def pairs(self) -> set[tuple[int, int]]:
        return {(c.source, c.target) for c in self.connections.values()}

    def check(self) -> None:
        """Raise :class:`GenomeError` unless the structural invariants hold."""
        roles = [n.role for n in self.nodes.values()]
        if roles.count(INPUT) != self.n_inputs or roles.count(BIAS) != 1 or roles.count(OUTPUT) != self.n_outputs:
            raise GenomeError(f"genome {self.id}: wrong input/bias/output node counts")
        seen: set[tuple[int, int]] = set()
        for innov, c in self.connections.items():
            if innov != c.innovation:
                raise GenomeError(f"genome {self.id}: connection keyed under wrong innovation {innov}")
            if c.source not in self.nodes or c.target not in self.nodes:
                raise GenomeError(f"genome {self.id}: connection {innov} references a missing node")
            if self.nodes[c.target].role in (INPUT, BIAS):
                raise GenomeError(f"genome {self.id}: connection {innov} feeds an input")
            if (c.source, c.target) in seen:
                raise GenomeError(f"genome {self.id}: duplicate connection {c.source}->{c.target}")
            seen.add((c.source, c.target))


class InnovationLedger:
    """Run-wide registry so identical structural changes share numbers."""

    def __init__(self, first_hidden: int = 0):
        self._pairs: dict[tuple[int, int], int] = {}
        # split connection innovation -> [(node id, in innovation, out innovation), ...]
        self._splits: dict[int, list[tuple[int, int, int]]] = {}
        self.next_innovation = 0
        self.next_node = first_hidden

    def connection(self, source: int, target: int) -> int:
        key = (source, target)
        if key not in self._pairs:
            self._pairs[key] = self.next_innovation
            self.next_innovation += 1
        return self._pairs[key]

    def split(self, innovation: int, source: int, target: int, taken: Iterable[int] = ()) -> tuple[int, int, int]:
        """Node and connection numbers for splitting connection ``innovation``.

        A genome that already holds the node from an earlier split of the same
        connection (possible after a disabled gene was re-enabled) gets the
        next registered alternative, or a fresh one.
        """
        options = self._splits.setdefault(innovation, [])
        taken = set(taken)
        for opt in options:
            if opt[0] not in taken:
                return opt
        node = self.next_node
        self.next_node += 1
        opt = (node, self.connection(source, node), self.connection(node, target))
        options.append(opt)
        return opt

    def to_dict(self) -> dict:
        return {
            "pairs": sorted([s, t, i] for (s, t), i in self._pairs.items()),
            "splits": sorted([i, list(map(list, v))] for i, v in self._splits.items()),
            "next_innovation": self.next_innovation,
            "next_node": self.next_node,
        }


def minimal_genome(
    genome_id: int, n_inputs: int, n_outputs: int, ledger: InnovationLedger, rng: np.random.Generator
) -> Genome:
    """Inputs and bias fully connected to the outputs, weights uniform in [-1, 1]."""
    if n_inputs < 0 or n_outputs < 1:
        raise GenomeError("a genome needs at least one output")
    nodes = {i: NodeGene(i, INPUT) for i in range(n_inputs)}
    nodes[n_inputs] = NodeGene(n_inputs, BIAS)
    outs = range(n_inputs + 1, n_inputs + 1 + n_outputs)
    for o in outs:
        nodes[o] = NodeGene(o, OUTPUT)
    ledger.next_node = max(ledger.next_node, n_inputs + 1 + n_outputs)
    conns = {}
    for o in outs:
        for i in range(n_inputs + 1):
            innov = ledger.connection(i, o)
            conns[innov] = ConnectionGene(innov, i, o, float(rng.uniform(-1.0, 1.0)))
    return Genome(genome_id, n_inputs, n_outputs, nodes, conns)


# phenotype -------------------------------------------------------------------


def _evaluation_order(g: Genome) -> list[int]:
    """Non-input nodes in feed-forward order over enabled connections.

    Kahn's algorithm with lowest-id-first; when only cycles remain the lowest
    remaining id is forced, and its incoming edges from later nodes then read
    last step's activation.
    """
    pending = sorted(n for n, gene in g.nodes.items() if gene.role in (HIDDEN, OUTPUT))
    incoming: dict[int, set[int]] = {n: set() for n in pending}
    for c in g.connections.values():
        if c.enabled and c.target in incoming and c.source in incoming and c.source != c.target:
            incoming[c.target].add(c.source)
    order: list[int] = []
    done: set[int] = set()
    remaining = list(pending)
    while remaining:
        ready = next((n for n in remaining if incoming[n] <= done), remaining[0])
        order.append(ready)
        done.add(ready)
        remaining.remove(ready)
    return order


class Network:
    """Compiled phenotype. Recurrent inputs read the previous activation,
    which starts at zero and is cleared by :meth:`reset`."""

    def __init__(self, genome: Genome):
        self.n_inputs = genome.n_inputs
        self.outputs = list(genome.output_nodes)
        order = _evaluation_order(genome)
        rank = {n: i for i, n in enumerate(order)}
        plan = []
        for n in order:
            terms = []
            for c in sorted(genome.connections.values(), key=lambda c: c.innovation):
                if not c.enabled or c.target != n:
                    continue
                src_role = genome.nodes[c.source].role
                current = src_role in (INPUT, BIAS) or rank[c.source] < rank[n]
                terms.append((c.source, c.weight, current))
            plan.append((n, ACTIVATIONS[genome.nodes[n].activation], terms))
        self._plan = plan
        self._nodes = [n for n in genome.nodes]
        self.reset()

    def reset(self) -> None:
        self._prev = {n: 0.0 for n in self._nodes}

    def activate(self, inputs: Sequence[float]) -> list[float]:
        if len(inputs) != self.n_inputs:
            raise GenomeError(f"expected {self.n_inputs} inputs, got {len(inputs)}")
        prev = self._prev
        cur = dict(enumerate(float(v) for v in inputs))
        cur[self.n_inputs] = 1.0
        for n, fn, terms in self._plan:
            s = 0.0
            for src, w, current in terms:
                s += w * (cur.get(src, 0.0) if current else prev[src])
            cur[n] = fn(s)
        self._prev = {n: cur.get(n, 0.0) for n in self._nodes}
        return [cur[o] for o in self.outputs]


def activate(genome: Genome, inputs: Sequence[float]) -> list[float]:
    """One feed-forward pass from zeroed recurrent memory."""
    return Network(genome).activate(inputs)


def select_action(outputs: Sequence[float]) -> int:
    """Argmax, lowest index on ties."""
    best = 0
    for i in range(1, len(outputs)):
        if outputs[i] > outputs[best]:
            best = i
    return best


def make_policy(genome: Genome, alphabet: Sequence["Action"]) -> Callable[[Sequence[float]], "Action"]:
    """Episode policy; build a fresh one per episode so memory starts cleared."""
    if genome.n_outputs != len(alphabet):
        raise GenomeError(f"genome has {genome.n_outputs} outputs for {len(alphabet)} actions")
    net = Network(genome)
    return lambda features: alphabet[select_action(net.activate(features))]


# variation -------------------------------------------------------------------


def _clip(w: float) -> float:
    return max(-WEIGHT_LIMIT, min(WEIGHT_LIMIT, w))


def mutate(
    genome: Genome, params: "NeatParams", ledger: InnovationLedger, rng: np.random.Generator, new_id: int
) -> Genome:
    """Mutated copy of ``genome`` carrying id ``new_id``; the input is untouched."""
    g = genome.copy(new_id)
    g.fitness = g.novelty = g.adjusted_fitness = 0.0
    if rng.random() < params.weight_mutation_rate:
        for innov in sorted(g.connections):
            c = g.connections[innov]
            if rng.random() < PERTURB_SHARE:
                w = _clip(c.weight + float(rng.normal(0.0, params.weight_mutation_power)))
            else:
                w = float(rng.uniform(-1.0, 1.0))
            g.connections[innov] = replace(c, weight=w)
    if rng.random() < params.add_connection_rate:
        _add_connection(g, ledger, rng)
    if rng.random() < params.add_node_rate:
        _add_node(g, ledger, rng)
    return g


def _add_connection(g: Genome, ledger: InnovationLedger, rng: np.random.Generator) -> None:
    existing = g.pairs()
    ids = sorted(g.nodes)
    targets = [n for n in ids if g.nodes[n].role in (HIDDEN, OUTPUT)]
    candidates = [(s, t) for s in ids for t in targets if (s, t) not in existing]
    if not candidates:
        return
    s, t = candidates[int(rng.integers(len(candidates)))]
    innov = ledger.connection(s, t)
    g.connections[innov] = ConnectionGene(innov, s, t, float(rng.uniform(-1.0, 1.0)))


def _add_node(g: Genome, ledger: InnovationLedger, rng: np.random.Generator) -> None:
    enabled = [i for i in sorted(g.connections) if g.connections[i].enabled]
    if not enabled:
        return
    old = g.connections[enabled[int(rng.integers(len(enabled)))]]
    node, in_innov, out_innov = ledger.split(old.innovation, old.source, old.target, taken=g.nodes)
    g.connections[old.innovation] = replace(old, enabled=False)
    g.nodes[node] = NodeGene(node, HIDDEN)
    g.connections[in_innov] = ConnectionGene(in_innov, old.source, node, 1.0)
    g.connections[out_innov] = ConnectionGene(out_innov, node, old.target, old.weight)


def crossover(
    parent_a: Genome, parent_b: Genome, rng: np.random.Generator, new_id: int = -1, a_fitter: bool | None = None
) -> Genome:
    """Child combining both parents.

    Matching genes come from either parent with equal chance; disjoint and
    excess genes come from the fitter parent, or from both when neither is
    fitter. ``a_fitter`` overrides the comparison of ``fitness`` values (the
    search passes its rank order here).
    """
    if (parent_a.n_inputs, parent_a.n_outputs) != (parent_b.n_inputs, parent_b.n_outputs):
        raise GenomeError("parents have different input/output layouts")
    if a_fitter is None:
        if parent_a.fitness == parent_b.fitness:
            sources: tuple[Genome, ...] = (parent_a, parent_b)
        else:
            sources = (parent_a,) if parent_a.fitness > parent_b.fitness else (parent_b,)
    else:
        sources = (parent_a,) if a_fitter else (parent_b,)
    ca, cb = parent_a.connections, parent_b.connections
    conns: dict[int, ConnectionGene] = {}
    for innov in sorted(set(ca) | set(cb)):
        a, b = ca.get(innov), cb.get(innov)
        if a is not None and b is not None:
            gene = a if rng.random() < 0.5 else b
            if not (a.enabled and b.enabled):
                gene = replace(gene, enabled=bool(rng.random() < REENABLE_PROB))
            conns[innov] = gene
        else:
            gene = a if a is not None else b
            owner = parent_a if a is not None else parent_b
            if any(owner is s for s in sources):
                conns[innov] = gene
    nodes = {n: gene for n, gene in parent_a.nodes.items() if gene.role != HIDDEN}
    for c in conns.values():
        for n in (c.source, c.target):
            if n not in nodes:
                nodes[n] = parent_a.nodes.get(n) or parent_b.nodes[n]
    return Genome(new_id, parent_a.n_inputs, parent_a.n_outputs, dict(sorted(nodes.items())), conns)


def compatibility_distance(a: Genome, b: Genome, params: "NeatParams") -> float:
    """c1 * excess / N + c2 * disjoint / N + c3 * mean |weight difference|."""
    ka, kb = set(a.connections), set(b.connections)
    if not ka and not kb:
        return 0.0
    cutoff = min(max(ka, default=-1), max(kb, default=-1))
    excess = disjoint = 0
    for innov in ka ^ kb:
        if innov > cutoff:
            excess += 1
        else:
            disjoint += 1
    matching = sorted(ka & kb)
    wbar = (
        sum(abs(a.connections[i].weight - b.connections[i].weight) for i in matching) / len(matching)
        if matching
        else 0.0
    )
    n = max(len(ka), len(kb), 1)
    return params.c1 * excess / n + params.c2 * disjoint / n + params.c3 * wbar


# serialisation -----------------------------------------------------------------


def genome_to_dict(g: Genome) -> dict[str, Any]:
    return {
        "id": g.id,
        "inputs": g.n_inputs,
        "outputs": g.n_outputs,
        "nodes": [[n.id, n.role, n.activation] for n in sorted(g.nodes.values(), key=lambda n: n.id)],
        "connections": [
            [c.innovation, c.source, c.target, c.weight, c.enabled]
            for c in sorted(g.connections.values(), key=lambda c: c.innovation)
        ],
    }


def genome_from_dict(d: dict[str, Any]) -> Genome:
    try:
        nodes = {int(i): NodeGene(int(i), str(role), str(act)) for i, role, act in d["nodes"]}
        conns = {
            int(i): ConnectionGene(int(i), int(s), int(t), float(w), bool(e)) for i, s, t, w, e in d["connections"]
        }
        g = Genome(int(d["id"]), int(d["inputs"]), int(d["outputs"]), nodes, conns)
    except (KeyError, TypeError, ValueError) as exc:
        raise GenomeError(f"malformed genome: {exc}") from exc
    for n in nodes.values():
        if n.activation not in ACTIVATIONS:
            raise GenomeError(f"unknown activation {n.activation!r}")
    g.check()
    return g


__all__ = [
    "ACTIVATIONS",
    "BIAS",
    "HIDDEN",
    "INPUT",
    "OUTPUT",
    "ConnectionGene",
    "Genome",
    "GenomeError",
    "InnovationLedger",
    "Network",
    "NodeGene",
    "activate",
    "compatibility_distance",
    "crossover",
    "genome_from_dict",
    "genome_to_dict",
    "make_policy",
    "minimal_genome",
    "mutate",
    "select_action",
]
