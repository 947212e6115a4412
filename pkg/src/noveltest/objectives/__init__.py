"""Control dependence, branch distance and the statement objective."""

from noveltest.objectives.distance import K, branch_distance, compare_distance, rect_gap

from noveltest.objectives.cdg import ControlDependenceGraph, build_cdg, next_targets  # noqa: E402  isort: skip
from noveltest.objectives.fitness import (  # noqa: E402  isort: skip
    ObjectiveResult,
    approach_level,
    normalise,
    statement_fitness,
)
