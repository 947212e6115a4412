"""Statement fitness: approach level plus normalised branch distance."""

from __future__ import annotations

from dataclasses import dataclass

from noveltest.objectives.cdg import ControlDependenceGraph
from noveltest.objectives.distance import K
from noveltest.vm.interpreter import ROOT, EpisodeResult


def normalise(x: float) -> float:
    """Map a branch distance in [0, inf) into [0, 1)."""
    return x / (x + 1.0)


@dataclass(frozen=True)
class ObjectiveResult:
    approach_level: int
    branch_distance: float
    fitness: float
    covered: bool


def _divergence(trace: EpisodeResult, target: int, cdg: ControlDependenceGraph) -> tuple[int, float]:
    if target in trace.covered:
        return 0, 0.0
    child = target
    for level, node in enumerate(cdg.ancestors(target)):
        if trace.executed(node):
            return level, _distance_at(trace, node, child, cdg)
        child = node
    raise AssertionError("root is always executed")


def _distance_at(trace: EpisodeResult, node: int, child: int, cdg: ControlDependenceGraph) -> float:
    if node == ROOT or node < 0:
        # trigger not fired, or fired but the statement was never reached
        return K
    rec = trace.trace.get(node)
    if rec is None:
        return K
    d = rec[0] if cdg.label[child] else rec[1]
    # the needed outcome happened but the child still did not run
    return d if d > 0.0 else K


def approach_level(trace: EpisodeResult, target: int, cdg: ControlDependenceGraph) -> int:
    """Unexecuted control levels between the deepest executed ancestor of
    ``target`` and ``target`` itself; 0 when executed or when only the
    immediate guard went the wrong way."""
    return _divergence(trace, target, cdg)[0]


def statement_fitness(trace: EpisodeResult, target: int, cdg: ControlDependenceGraph) -> ObjectiveResult:
    level, dist = _divergence(trace, target, cdg)
    f = level + normalise(dist)
    return ObjectiveResult(approach_level=level, branch_distance=dist, fitness=f, covered=f == 0.0)
