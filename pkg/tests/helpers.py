"""Small games and policies shared by the tests."""

from noveltest.vm import Action, spec_from_dict


def one_sprite_game(scripts, variables=None, sprite_vars=None, **sprite):
    doc = {
        "name": "toy",
        "stage": {"backdrops": 1, "variables": variables or {}},
        "sprites": [
            {
                "name": "cat",
                "x": 0,
                "y": 0,
                "costumes": [{"width": 20, "height": 20, "colour": "#000000"}],
                "variables": sprite_vars or {},
                **sprite,
            }
        ],
        "scripts": scripts,
    }
    return spec_from_dict(doc)


def constant(action):
    return lambda features: action


def win_at_start():
    return spec_from_dict(
        {
            "name": "instant",
            "stage": {"backdrops": 1, "variables": {}},
            "sprites": [],
            "scripts": [{"owner": "stage", "trigger": {"type": "game_start"}, "body": [{"op": "declare_win"}]}],
        }
    )


NOOP_POLICY = constant(Action.noop())


def check_provenance(child, a, b):
    """Every child gene is a copy of a gene of one of the parents."""
    for innov, c in child.connections.items():
        src = [x for x in (a.connections.get(innov), b.connections.get(innov)) if x is not None]
        assert src, f"gene {innov} has no parent"
        assert any((x.source, x.target, x.weight) == (c.source, c.target, c.weight) for x in src)
    child.check()


def run_neat_invariants(seed, generations, pop_size=30, n_inputs=4, n_outputs=3):
    """Evolve with random fitness and check the structural invariants after
    every generation, including the provenance of a crossover of two random
    members. Returns the number of generations checked."""
    import numpy as np

    from noveltest.neat import NeatParams, evolve_generation, init_population
    from noveltest.neat.genome import crossover

    rng = np.random.default_rng(seed)
    params = NeatParams(population_size=pop_size, add_connection_rate=0.3, add_node_rate=0.2, stagnation_limit=5)
    pop, ledger = init_population(params, n_inputs, n_outputs, rng)
    innovation_of = {}
    for gen in range(generations):
        assert len(pop.genomes) == pop_size
        ids = [g.id for g in pop.genomes]
        assert len(set(ids)) == pop_size
        for g in pop.genomes:
            g.check()
            for c in g.connections.values():
                # one innovation per (source, target) pair for the whole run
                assert innovation_of.setdefault((c.source, c.target), c.innovation) == c.innovation
            g.fitness = float(rng.random())
        i, j = rng.choice(pop_size, size=2, replace=False)
        a, b = pop.genomes[int(i)], pop.genomes[int(j)]
        check_provenance(crossover(a, b, rng, new_id=-1), a, b)
        rank = [g.id for g in sorted(pop.genomes, key=lambda g: (-g.fitness, g.id))]
        nxt = evolve_generation(pop, params, ledger, rank, rng)
        if nxt.species:
            members = [g.id for s in nxt.species for g in s.members]
            assert sorted(members) == sorted(ids)
            assert len({s.id for s in nxt.species}) == len(nxt.species)
        pop = nxt
    return generations


# acceptance criteria outcomes, printed in the terminal summary by conftest
ACCEPTANCE = {}
