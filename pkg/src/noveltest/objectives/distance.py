"""Branch-distance rules for the predicate language.

Every rule returns the distance towards the *opposite* of the current outcome;
the distance towards the current outcome is zero by definition. Touching
predicates use axis-aligned rectangle geometry: sprites are solid rectangles
centred on their position, so the nearest pixel of a colour is the nearest
point of any visible rectangle painted in it.
"""

from __future__ import annotations

import math

K = 1.0
# no visible target at all: the canvas diagonal, the largest possible gap
NO_TARGET_DISTANCE = 600.0


def compare_outcome(a: float, op: str, b: float) -> tuple[bool, float]:
    """``(outcome, distance to flip)`` for ``a op b``."""
    if op == "<":
        return (True, b - a) if a < b else (False, a - b + K)
    if op == "<=":
        return (True, b - a + K) if a <= b else (False, a - b)
    if op == ">":
        return (True, a - b) if a > b else (False, b - a + K)
    if op == ">=":
        return (True, a - b + K) if a >= b else (False, b - a)
    if op == "=":
        return (True, K) if a == b else (False, abs(a - b))
    raise ValueError(f"unknown comparison {op!r}")


def compare_distance(a: float, op: str, b: float, desired: bool) -> float:
    outcome, flip = compare_outcome(a, op, b)
    return 0.0 if outcome == desired else flip


def rect_gap(ax: float, ay: float, ahw: float, ahh: float, bx: float, by: float, bhw: float, bhh: float) -> float:
    """Euclidean gap between two axis-aligned rectangles given centre and half
    extents; 0 when they intersect or share an edge."""
    dx = abs(ax - bx) - ahw - bhw
    dy = abs(ay - by) - ahh - bhh
    if dx <= 0.0:
        return dy if dy > 0.0 else 0.0
    if dy <= 0.0:
        return dx
    return math.hypot(dx, dy)


def flat_distance(outcome: bool, desired: bool) -> float:
    """Guards without a meaningful metric (keys, string equality)."""
    return 0.0 if outcome == desired else K


def touching_distance(gap: float, desired: bool) -> float:
    touching = gap <= 0.0
    if touching == desired:
        return 0.0
    return gap if desired else K


def branch_distance(pred, state, desired: bool, owner: str | None = None) -> float:
    """Distance of ``pred`` in ``state`` from evaluating to ``desired``.

    ``owner`` names the sprite whose private variables are in scope (the stage
    when omitted).
    """
    from noveltest.vm.interpreter import compile_predicate

    fn = compile_predicate(pred, owner, state.instance)
    outcome, flip = fn(state)
    return 0.0 if outcome == desired else flip
