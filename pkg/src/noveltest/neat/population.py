"""Speciation, fitness sharing and generational reproduction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from noveltest.neat.genome import (
    Genome,
    GenomeError,
    InnovationLedger,
    compatibility_distance,
    crossover,
    minimal_genome,
    mutate,
)


@dataclass(frozen=True)
class NeatParams:
    population_size: int = 150
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 0.4
    compatibility_threshold: float = 3.0
    weight_mutation_rate: float = 0.8
    weight_mutation_power: float = 0.5
    add_connection_rate: float = 0.1
    add_node_rate: float = 0.05
    crossover_rate: float = 0.75
    elitism: int = 1
    stagnation_limit: int = 15
    # share of each species (by rank) allowed to parent offspring
    survival_threshold: float = 0.2
    tournament_size: int = 2

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        for name in (
            "weight_mutation_rate",
            "add_connection_rate",
            "add_node_rate",
            "crossover_rate",
            "survival_threshold",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if min(self.c1, self.c2, self.c3, self.compatibility_threshold, self.weight_mutation_power) < 0:
            raise ValueError("compatibility coefficients, threshold and mutation power must be non-negative")
        if self.elitism < 0 or self.stagnation_limit < 0 or self.tournament_size < 1:
            raise ValueError("elitism and stagnation_limit must be >= 0, tournament_size >= 1")


@dataclass
class Species:
    id: int
    representative: Genome
    members: list[Genome]
    best_fitness: float = -math.inf
    staleness: int = 0

    def member_ids(self) -> list[int]:
        return [g.id for g in self.members]


@dataclass
class Population:
    genomes: list[Genome]
    # partition of the previous, evaluated generation (empty before the first)
    species: list[Species] = field(default_factory=list)
    generation: int = 0
    next_genome_id: int = 0
    next_species_id: int = 0

    def take_id(self) -> int:
        gid = self.next_genome_id
        self.next_genome_id += 1
        return gid


def _absorb(ledger: InnovationLedger, g: Genome) -> None:
    """Make ``ledger`` aware of numbers used by a genome from elsewhere."""
    for c in sorted(g.connections.values(), key=lambda c: c.innovation):
        ledger._pairs.setdefault((c.source, c.target), c.innovation)
        ledger.next_innovation = max(ledger.next_innovation, c.innovation + 1)
    ledger.next_node = max(ledger.next_node, max(g.nodes) + 1)


def init_population(
    params: NeatParams,
    n_inputs: int,
    n_outputs: int,
    rng: np.random.Generator,
    seeds: Sequence[Genome] | None = None,
    ledger: InnovationLedger | None = None,
    first_id: int = 0,
) -> tuple[Population, InnovationLedger]:
    """Generation 0: minimal genomes, or mutants of ``seeds`` taken in turn.

    ``n_inputs`` excludes the bias node.
    """
    if n_inputs < 0 or n_outputs < 1:
        raise GenomeError("need at least one output")
    ledger = ledger if ledger is not None else InnovationLedger()
    pop = Population([], next_genome_id=first_id)
    if seeds:
        for s in seeds:
            if (s.n_inputs, s.n_outputs) != (n_inputs, n_outputs):
                raise GenomeError(
                    f"seed genome {s.id} has {s.n_inputs} inputs/{s.n_outputs} outputs, "
                    f"expected {n_inputs}/{n_outputs}"
                )
            _absorb(ledger, s)
        for i in range(params.population_size):
            pop.genomes.append(mutate(seeds[i % len(seeds)], params, ledger, rng, pop.take_id()))
    else:
        for _ in range(params.population_size):
            pop.genomes.append(minimal_genome(pop.take_id(), n_inputs, n_outputs, ledger, rng))
    return pop, ledger


def speciate(
    genomes: Sequence[Genome], previous: Sequence[Species], params: NeatParams, next_species_id: int
) -> tuple[list[Species], int]:
    """Partition ``genomes`` by compatibility distance.

    Each surviving species is re-anchored on the genome closest to its old
    representative; every other genome joins the nearest representative within
    the threshold (lowest species id on ties) or founds a new species.
    """
    unassigned = list(genomes)
    species: list[Species] = []
    for old in sorted(previous, key=lambda s: s.id):
        if not unassigned:
            break
        d = [compatibility_distance(old.representative, g, params) for g in unassigned]
        j = int(np.argmin(d))
        rep = unassigned.pop(j)
        species.append(Species(old.id, rep, [rep], old.best_fitness, old.staleness))
    for g in unassigned:
        best, best_d = None, math.inf
        for s in species:
            d = compatibility_distance(s.representative, g, params)
            if d < params.compatibility_threshold and d < best_d:
                best, best_d = s, d
        if best is None:
            species.append(Species(next_species_id, g, [g]))
            next_species_id += 1
        else:
            best.members.append(g)
    return species, next_species_id


def _quotas(shares: Sequence[float], total: int) -> list[int]:
    """Integer split of ``total`` proportional to ``shares`` (largest remainder,
    earlier entries first on equal remainders)."""
    s = float(sum(shares))
    if s <= 0.0:
        shares = [1.0] * len(shares)
        s = float(len(shares))
    raw = [total * x / s for x in shares]
    out = [int(math.floor(r)) for r in raw]
    left = total - sum(out)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - out[i]), i))
    for i in order[:left]:
        out[i] += 1
    return out


def evolve_generation(
    population: Population,
    params: NeatParams,
    ledger: InnovationLedger,
    rank: Sequence[int],
    rng: np.random.Generator,
) -> Population:
    """Next generation from an evaluated one.

    ``rank`` lists every genome id best first; it is the only ordering used
    for elitism, survival and tournaments, so any tiebreak it encodes carries
    through. Offspring are shared out in proportion to each species' summed
    adjusted fitness.
    """
    genomes = population.genomes
    pos = {gid: i for i, gid in enumerate(rank)}
    if set(pos) != {g.id for g in genomes} or len(pos) != len(genomes):
        raise ValueError("rank must list every genome id exactly once")
    species, next_sid = speciate(genomes, population.species, params, population.next_species_id)
    best_id = rank[0]

    for s in species:
        top = max(g.fitness for g in s.members)
        if top > s.best_fitness:
            s.best_fitness = top
            s.staleness = 0
        elif s.id < population.next_species_id:
            s.staleness += 1
    stale = [s.staleness > params.stagnation_limit for s in species]
    nxt = Population(
        [],
        species=species,
        generation=population.generation + 1,
        next_genome_id=population.next_genome_id,
        next_species_id=next_sid,
    )
    best = next(g for g in genomes if g.id == best_id)

    if all(stale):
        nxt.genomes.append(best)
        while len(nxt.genomes) < params.population_size:
            nxt.genomes.append(mutate(best, params, ledger, rng, nxt.take_id()))
        nxt.species = []
        return nxt

    alive = [s for s, st in zip(species, stale) if not st or any(g.id == best_id for g in s.members)]
    for s in alive:
        n = len(s.members)
        for g in s.members:
            g.adjusted_fitness = g.fitness / n
    quotas = _quotas([sum(g.adjusted_fitness for g in s.members) for s in alive], params.population_size)

    for s, q in zip(alive, quotas):
        if q == 0:
            continue
        ranked = sorted(s.members, key=lambda g: pos[g.id])
        elites = ranked[: min(params.elitism, q)]
        nxt.genomes.extend(elites)
        pool_size = max(math.ceil(params.survival_threshold * len(ranked)), min(2, len(ranked)))
        pool = ranked[:pool_size]
        for _ in range(q - len(elites)):
            nxt.genomes.append(_offspring(pool, params, ledger, rng, nxt.take_id()))
    return nxt


def _tournament(pool: Sequence[Genome], size: int, rng: np.random.Generator) -> int:
    # pool is rank-sorted, so the lowest drawn index wins
    return int(min(rng.integers(len(pool), size=size)))


def _offspring(
    pool: Sequence[Genome], params: NeatParams, ledger: InnovationLedger, rng: np.random.Generator, gid: int
) -> Genome:
    i = _tournament(pool, params.tournament_size, rng)
    if len(pool) >= 2 and rng.random() < params.crossover_rate:
        j = _tournament(pool, params.tournament_size, rng)
        if i != j:
            a, b = pool[min(i, j)], pool[max(i, j)]
            child = crossover(a, b, rng, gid, a_fitter=True)
            return mutate(child, params, ledger, rng, gid)
    return mutate(pool[i], params, ledger, rng, gid)


__all__ = [
    "NeatParams",
    "Population",
    "Species",
    "evolve_generation",
    "init_population",
    "speciate",
]
