"""NeuroEvolution of Augmenting Topologies, sized for game-playing test agents."""

from noveltest.neat.genome import (
    ConnectionGene,
    Genome,
    GenomeError,
    InnovationLedger,
    Network,
    NodeGene,
    activate,
    compatibility_distance,
    crossover,
    genome_from_dict,
    genome_to_dict,
    make_policy,
    minimal_genome,
    mutate,
    select_action,
)
from noveltest.neat.population import NeatParams, Population, Species, evolve_generation, init_population, speciate

__all__ = [
    "ConnectionGene",
    "Genome",
    "GenomeError",
    "InnovationLedger",
    "NeatParams",
    "Network",
    "NodeGene",
    "Population",
    "Species",
    "activate",
    "compatibility_distance",
    "crossover",
    "evolve_generation",
    "genome_from_dict",
    "genome_to_dict",
    "init_population",
    "make_policy",
    "minimal_genome",
    "mutate",
    "select_action",
]
