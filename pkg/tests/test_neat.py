import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noveltest.neat import (
    ConnectionGene,
    Genome,
    GenomeError,
    InnovationLedger,
    NeatParams,
    Network,
    NodeGene,
    activate,
    compatibility_distance,
    crossover,
    evolve_generation,
    genome_from_dict,
    genome_to_dict,
    init_population,
    minimal_genome,
    mutate,
    select_action,
    speciate,
)
from noveltest.neat.genome import BIAS, HIDDEN, INPUT, OUTPUT
from noveltest.neat.population import _quotas

from helpers import run_neat_invariants


def rng(seed=0):
    return np.random.default_rng(seed)


def test_minimal_genome_five_by_three():
    ledger = InnovationLedger()
    g = minimal_genome(0, 5, 3, ledger, rng())
    assert len(g.connections) == 18
    assert sorted(g.nodes) == list(range(9))
    assert [g.nodes[i].role for i in range(9)] == [INPUT] * 5 + [BIAS] + [OUTPUT] * 3
    assert all(-1.0 <= c.weight <= 1.0 for c in g.connections.values())
    g.check()


def test_ledger_reuses_numbers():
    ledger = InnovationLedger()
    a = ledger.connection(0, 5)
    b = ledger.connection(1, 5)
    assert (a, b) == (0, 1)
    assert ledger.connection(0, 5) == a
    split1 = ledger.split(a, 0, 5)
    assert ledger.split(a, 0, 5) == split1
    # a genome already holding that node gets a different one
    split2 = ledger.split(a, 0, 5, taken={split1[0]})
    assert split2[0] != split1[0]


def genome(connections, n_in=1, n_out=1, hidden=()):
    nodes = {0: NodeGene(0, INPUT), 1: NodeGene(1, BIAS), 2: NodeGene(2, OUTPUT)}
    for h in hidden:
        nodes[h] = NodeGene(h, HIDDEN)
    conns = {i: ConnectionGene(i, s, t, w, e) for i, s, t, w, e in connections}
    return Genome(0, n_in, n_out, nodes, conns)


def test_feed_forward_value():
    g = genome([(0, 0, 2, 0.5, True), (1, 1, 2, -0.25, True)])
    assert activate(g, [2.0]) == [math.tanh(0.5 * 2.0 - 0.25)]


def test_disabled_connections_are_ignored():
    g = genome([(0, 0, 2, 0.5, False), (1, 1, 2, 0.3, True)])
    assert activate(g, [5.0]) == [math.tanh(0.3)]


def test_hidden_chain():
    g = genome([(0, 0, 3, 2.0, True), (1, 3, 2, -1.0, True)], hidden=[3])
    assert activate(g, [0.25]) == [math.tanh(-math.tanh(0.5))]


def test_recurrent_edge_reads_previous_step():
    # 3 -> 3 self loop, 0 -> 3, 3 -> 2
    g = genome([(0, 0, 3, 1.0, True), (1, 3, 3, 1.0, True), (2, 3, 2, 1.0, True)], hidden=[3])
    net = Network(g)
    h1 = math.tanh(1.0)
    assert net.activate([1.0]) == [math.tanh(h1)]
    h2 = math.tanh(1.0 + h1)
    assert net.activate([1.0]) == [math.tanh(h2)]
    net.reset()
    assert net.activate([1.0]) == [math.tanh(h1)]


def test_input_count_checked():
    with pytest.raises(GenomeError):
        activate(genome([(0, 0, 2, 1.0, True)]), [1.0, 2.0])


def test_select_action_lowest_index_on_ties():
    assert select_action([0.1, 0.7, 0.7]) == 1
    assert select_action([0.0, 0.0]) == 0


def test_compatibility_example():
    p = NeatParams(c1=1.0, c2=1.0, c3=1.0)
    a = genome([(0, 0, 2, 0.5, True), (1, 1, 2, 0.1, True)])
    b = genome([(0, 0, 2, 0.1, True), (1, 1, 2, 0.5, True)])
    assert compatibility_distance(a, b, p) == pytest.approx(0.4)


def test_compatibility_counts_excess_and_disjoint():
    p = NeatParams(c1=1.0, c2=2.0, c3=0.0)
    a = genome([(0, 0, 2, 0.0, True), (1, 1, 2, 0.0, True), (5, 0, 2, 0.0, True)])
    b = genome([(0, 0, 2, 0.0, True), (3, 1, 2, 0.0, True)])
    # disjoint {1, 3}, excess {5}, N = 3
    assert compatibility_distance(a, b, p) == pytest.approx(1 / 3 + 2 * 2 / 3)


def test_compatibility_self_is_zero():
    g = minimal_genome(0, 3, 2, InnovationLedger(), rng())
    assert compatibility_distance(g, g, NeatParams()) == 0.0


def test_crossover_inherits_excess_from_fitter_only():
    a = genome([(0, 0, 2, 0.5, True), (1, 1, 2, 0.1, True), (4, 0, 3, 1.0, True), (5, 3, 2, 1.0, True)], hidden=[3])
    b = genome([(0, 0, 2, -0.5, True), (1, 1, 2, -0.1, True)])
    child = crossover(a, b, rng(1), new_id=9, a_fitter=False)
    assert set(child.connections) == {0, 1}
    child = crossover(a, b, rng(1), new_id=9, a_fitter=True)
    assert set(child.connections) == {0, 1, 4, 5}
    assert 3 in child.nodes
    child.check()


def test_crossover_equal_fitness_takes_all_genes():
    a = genome([(0, 0, 2, 0.5, True), (4, 0, 3, 1.0, True), (5, 3, 2, 1.0, True)], hidden=[3])
    b = genome([(0, 0, 2, -0.5, True), (1, 1, 2, -0.1, True)])
    child = crossover(a, b, rng(2))
    assert set(child.connections) == {0, 1, 4, 5}


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_crossover_gene_provenance(seed):
    r = rng(seed)
    params = NeatParams(add_connection_rate=0.5, add_node_rate=0.5)
    ledger = InnovationLedger()
    base = minimal_genome(0, 3, 2, ledger, r)
    a, b = base, base
    for i in range(6):
        a = mutate(a, params, ledger, r, i + 1)
        b = mutate(b, params, ledger, r, i + 100)
    child = crossover(a, b, r, new_id=500, a_fitter=bool(seed % 2))
    for innov, c in child.connections.items():
        ca, cb = a.connections.get(innov), b.connections.get(innov)
        assert ca is not None or cb is not None
        src = [x for x in (ca, cb) if x is not None]
        assert any((x.source, x.target, x.weight) == (c.source, c.target, c.weight) for x in src)
        if all(x.enabled for x in src) and len(src) == 2:
            assert c.enabled
    child.check()


def test_mutation_leaves_parent_untouched():
    r = rng(3)
    ledger = InnovationLedger()
    g = minimal_genome(0, 3, 2, ledger, r)
    snapshot = genome_to_dict(g)
    params = NeatParams(weight_mutation_rate=1.0, add_connection_rate=1.0, add_node_rate=1.0)
    child = mutate(g, params, ledger, r, 7)
    assert genome_to_dict(g) == snapshot
    assert child.id == 7
    assert len(child.nodes) == len(g.nodes) + 1
    assert all(abs(c.weight) <= 8.0 for c in child.connections.values())
    child.check()


def test_add_node_splits_connection():
    r = rng(4)
    ledger = InnovationLedger()
    g = minimal_genome(0, 1, 1, ledger, r)
    params = NeatParams(weight_mutation_rate=0.0, add_connection_rate=0.0, add_node_rate=1.0)
    child = mutate(g, params, ledger, r, 1)
    disabled = [c for c in child.connections.values() if not c.enabled]
    assert len(disabled) == 1
    old = disabled[0]
    hidden = [n for n, gene in child.nodes.items() if gene.role == HIDDEN]
    assert len(hidden) == 1
    h = hidden[0]
    into = next(c for c in child.connections.values() if c.target == h)
    out = next(c for c in child.connections.values() if c.source == h)
    assert (into.source, into.weight) == (old.source, 1.0)
    assert (out.target, out.weight) == (old.target, old.weight)


def test_serialisation_round_trip():
    r = rng(5)
    ledger = InnovationLedger()
    g = minimal_genome(3, 4, 2, ledger, r)
    for i in range(5):
        g = mutate(g, NeatParams(add_node_rate=0.5, add_connection_rate=0.5), ledger, r, 10 + i)
    again = genome_from_dict(genome_to_dict(g))
    assert genome_to_dict(again) == genome_to_dict(g)
    assert activate(again, [0.1, 0.2, 0.3, 0.4]) == activate(g, [0.1, 0.2, 0.3, 0.4])


def test_malformed_genome_rejected():
    with pytest.raises(GenomeError):
        genome_from_dict({"id": 0, "inputs": 1})


def test_quotas_largest_remainder():
    assert _quotas([1.0, 1.0, 1.0], 10) == [4, 3, 3]
    assert _quotas([3.0, 1.0], 8) == [6, 2]
    assert _quotas([0.0, 0.0], 5) == [3, 2]
    assert sum(_quotas([0.3, 0.2, 0.5, 0.7], 50)) == 50


def test_speciation_threshold():
    p = NeatParams(c1=1.0, c2=1.0, c3=1.0, compatibility_threshold=0.5)
    a = genome([(0, 0, 2, 0.0, True)])
    b = genome([(0, 0, 2, 0.3, True)])
    c = genome([(0, 0, 2, 2.0, True)])
    a.id, b.id, c.id = 0, 1, 2
    species, nxt = speciate([a, b, c], [], p, 0)
    assert [s.member_ids() for s in species] == [[0, 1], [2]]
    assert nxt == 2


def test_population_size_validated():
    with pytest.raises(ValueError):
        NeatParams(population_size=1)
    with pytest.raises(ValueError):
        NeatParams(crossover_rate=1.5)


def test_rank_must_cover_population():
    params = NeatParams(population_size=5)
    pop, ledger = init_population(params, 2, 2, rng())
    with pytest.raises(ValueError):
        evolve_generation(pop, params, ledger, [0, 1, 2], rng())


def test_seeded_population_mutates_seeds_in_turn():
    params = NeatParams(population_size=6, weight_mutation_rate=0.0, add_connection_rate=0.0, add_node_rate=0.0)
    ledger = InnovationLedger()
    seeds = [minimal_genome(i, 2, 2, ledger, rng(i)) for i in range(2)]
    pop, _ = init_population(params, 2, 2, rng(), seeds=seeds, ledger=ledger, first_id=10)
    assert [g.id for g in pop.genomes] == list(range(10, 16))
    for i, g in enumerate(pop.genomes):
        assert g.connections == seeds[i % 2].connections


def test_elite_is_copied_unchanged():
    params = NeatParams(population_size=10)
    r = rng(6)
    pop, ledger = init_population(params, 2, 2, r)
    for i, g in enumerate(pop.genomes):
        g.fitness = 1.0 + (i == 4)
    rank = [4] + [g.id for g in pop.genomes if g.id != 4]
    nxt = evolve_generation(pop, params, ledger, rank, r)
    elite = next(g for g in nxt.genomes if g.id == 4)
    assert elite.connections == pop.genomes[4].connections
    assert len(nxt.genomes) == 10
    assert all(g.id >= 10 for g in nxt.genomes if g.id != 4)


@pytest.mark.parametrize("seed", [0, 1])
def test_structural_invariants_over_generations(seed):
    assert run_neat_invariants(seed, 40) == 40
