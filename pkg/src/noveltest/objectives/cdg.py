"""Control dependence for the block-structured statement language.

With no jumps, a statement depends on its nearest enclosing ``if``/``repeat``/
``forever``; top-level statements depend on their script entry and entries on
a virtual root. Node ids: statements are positive, entry ``i`` is ``-(i+1)``,
the root is ``0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from noveltest.vm.interpreter import ROOT, entry_id
from noveltest.vm.spec import GameSpec, Statement


@dataclass(frozen=True)
class ControlDependenceGraph:
    parent: Mapping[int, int]
    # outcome of the parent that the child needs; True for loop bodies/entries
    label: Mapping[int, bool]
    depth: Mapping[int, int]
    kind: Mapping[int, str]
    statements: tuple[int, ...]
    entries: tuple[int, ...]
    start_entries: frozenset[int]

    def ancestors(self, node: int) -> list[int]:
        """Controlling nodes of ``node``, nearest first, ending with the root."""
        out = []
        while node != ROOT:
            node = self.parent[node]
            out.append(node)
        return out

    def children(self, node: int) -> list[int]:
        return sorted(n for n, p in self.parent.items() if p == node)

    def __contains__(self, node: int) -> bool:
        return node == ROOT or node in self.parent


def build_cdg(spec: GameSpec) -> ControlDependenceGraph:
    parent: dict[int, int] = {}
    label: dict[int, bool] = {}
    depth: dict[int, int] = {ROOT: -1}
    kind: dict[int, str] = {ROOT: "root"}
    statements: list[int] = []
    entries: list[int] = []
    start: set[int] = set()

    def visit(stmts: Iterable[Statement], ctrl: int, outcome: bool) -> None:
        for s in stmts:
            parent[s.id] = ctrl
            label[s.id] = outcome
            depth[s.id] = depth[ctrl] + 1
            kind[s.id] = s.op
            statements.append(s.id)
            if s.op == "if":
                visit(s.body, s.id, True)
                visit(s.orelse, s.id, False)
            elif s.op in ("repeat", "forever"):
                visit(s.body, s.id, True)

    for i, script in enumerate(spec.scripts):
        e = entry_id(i)
        entries.append(e)
        parent[e] = ROOT
        label[e] = True
        depth[e] = 0
        kind[e] = "entry"
        if script.trigger.kind == "game_start":
            start.add(e)
        visit(script.body, e, True)
    return ControlDependenceGraph(
        parent=parent,
        label=label,
        depth=depth,
        kind=kind,
        statements=tuple(sorted(statements)),
        entries=tuple(entries),
        start_entries=frozenset(start),
    )


def next_targets(cdg: ControlDependenceGraph, covered: Iterable[int]) -> list[int]:
    """Uncovered statements whose controlling node is covered, ascending.

    The root is always covered and so are game-start entries; other entries
    count once they are in ``covered``.
    """
    done = set(covered)
    done.add(ROOT)
    done |= cdg.start_entries
    return [s for s in cdg.statements if s not in done and cdg.parent[s] in done]
