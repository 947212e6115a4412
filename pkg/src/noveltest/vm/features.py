"""Behaviour vectors: a fixed-dimension, [0, 1]-normalised view of a game state.

The same vector serves as network input and as the novelty space. Its layout
is fixed per game: every declared sprite contributes a block (masked to zero
while the sprite is hidden), followed by numeric globals and, when the game
reads the mouse, the mouse position.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Iterator, Mapping

from noveltest.objectives.distance import NO_TARGET_DISTANCE
from noveltest.vm.spec import HEADING_BOUNDS, X_BOUNDS, Y_BOUNDS, GameSpec, Predicate, Statement

if TYPE_CHECKING:
    from noveltest.vm.interpreter import Action, GameInstance, GameState

DISTANCE_BOUNDS = (-600.0, 600.0)

BehaviorVector = tuple  # tuple[float, ...], every component in [0, 1]


@dataclass(frozen=True)
class FeatureDescriptor:
    index: int
    label: str
    source: str  # sprite | variable | mouse | probe
    rule: str  # linear | costume | size | squash
    lo: float = 0.0
    hi: float = 1.0
    sprite: int = -1  # owning sprite index, -1 for globals
    attr: str = ""  # x/y/heading/costume/size, variable name, or mouse axis
    target_sprite: int = -1  # probe towards a sprite
    target_colour: str | None = None  # probe towards a colour


@dataclass(frozen=True)
class FeatureSchema:
    descriptors: tuple[FeatureDescriptor, ...]

    @property
    def dimension(self) -> int:
        return len(self.descriptors)

    def labels(self) -> list[str]:
        return [d.label for d in self.descriptors]

    def index(self, label: str) -> int:
        for d in self.descriptors:
            if d.label == label:
                return d.index
        raise KeyError(label)


def squash(v: float) -> float:
    """Order-preserving map of the real line onto (0, 1) with 0 -> 0.5."""
    return 0.5 + v / (2.0 * (1.0 + abs(v)))


def _walk(stmts) -> Iterator[Statement]:
    for s in stmts:
        yield s
        yield from _walk(s.children())


def _exprs(s: Statement) -> Iterator[Any]:
    yield from s.args.values()
    if s.cond is not None and s.cond.kind == "compare":
        yield s.cond.left
        yield s.cond.right


def _reads_mouse(e: Any) -> bool:
    if isinstance(e, Mapping):
        if "mouse" in e:
            return True
        if "op" in e:
            return _reads_mouse(e["left"]) or _reads_mouse(e["right"])
    return False


def _numeric(v: Any) -> bool:
    return not isinstance(v, str)


def build_schema(spec: GameSpec, inst: "GameInstance | None" = None) -> FeatureSchema:
    sprite_index = {s.name: i for i, s in enumerate(spec.sprites)}
    probes: dict[int, list[tuple[str, Any]]] = {}
    reads_mouse = False
    for script in spec.scripts:
        for s in _walk(script.body):
            p: Predicate | None = s.cond
            if p is not None and p.kind in ("touching_sprite", "touching_colour"):
                subject = sprite_index[p.sprite]
                target = ("sprite", p.other) if p.kind == "touching_sprite" else ("colour", p.colour)
                lst = probes.setdefault(subject, [])
                if target not in lst:
                    lst.append(target)
            if any(_reads_mouse(e) for e in _exprs(s)):
                reads_mouse = True

    out: list[FeatureDescriptor] = []

    def add(**kw):
        out.append(FeatureDescriptor(index=len(out), **kw))

    for i, sp in enumerate(spec.sprites):
        n = sp.name
        add(label=f"{n}.x", source="sprite", rule="linear", lo=X_BOUNDS[0], hi=X_BOUNDS[1], sprite=i, attr="x")
        add(label=f"{n}.y", source="sprite", rule="linear", lo=Y_BOUNDS[0], hi=Y_BOUNDS[1], sprite=i, attr="y")
        add(label=f"{n}.heading", source="sprite", rule="linear", lo=HEADING_BOUNDS[0], hi=HEADING_BOUNDS[1],
            sprite=i, attr="heading")
        # costume only for figures that can change appearance
        if len(sp.costumes) > 1:
            add(label=f"{n}.costume", source="sprite", rule="costume", lo=0.0, hi=float(len(sp.costumes) - 1),
                sprite=i, attr="costume")
        max_size = inst.max_sizes[i] if inst is not None else float(sp.max_size or max(100.0, sp.size))
        add(label=f"{n}.size", source="sprite", rule="size", lo=0.0, hi=max_size, sprite=i, attr="size")
        for var, v in sp.variables.items():
            if _numeric(v):
                add(label=f"{n}.var.{var}", source="sprite", rule="squash", lo=float("-inf"), hi=float("inf"),
                    sprite=i, attr=var)
        for kind, target in probes.get(i, []):
            lo, hi = DISTANCE_BOUNDS
            if kind == "sprite":
                add(label=f"{n}.dist.{target}", source="probe", rule="linear", lo=lo, hi=hi, sprite=i,
                    target_sprite=sprite_index[target])
            else:
                add(label=f"{n}.dist.{target}", source="probe", rule="linear", lo=lo, hi=hi, sprite=i,
                    target_colour=target)
    for var, v in spec.variables.items():
        if _numeric(v):
            add(label=f"var.{var}", source="variable", rule="squash", lo=float("-inf"), hi=float("inf"), attr=var)
    if reads_mouse:
        add(label="mouse.x", source="mouse", rule="linear", lo=X_BOUNDS[0], hi=X_BOUNDS[1], attr="x")
        add(label="mouse.y", source="mouse", rule="linear", lo=Y_BOUNDS[0], hi=Y_BOUNDS[1], attr="y")
    return FeatureSchema(tuple(out))


def _linear(v: float, lo: float, hi: float) -> float:
    t = (v - lo) / (hi - lo)
    return 0.0 if t < 0.0 else 1.0 if t > 1.0 else t


def extract_features(state: "GameState", schema: FeatureSchema) -> BehaviorVector:
    from noveltest.vm.interpreter import colour_gap, sprite_gap

    sprites = state.sprites
    out = []
    for d in schema.descriptors:
        if d.sprite >= 0:
            sp = sprites[d.sprite]
            if not sp.visible:
                out.append(0.0)
                continue
            if d.source == "probe":
                if d.target_colour is not None:
                    g = colour_gap(state, d.sprite, d.target_colour)
                else:
                    g = sprite_gap(state, d.sprite, d.target_sprite)
                out.append(_linear(min(g, NO_TARGET_DISTANCE), d.lo, d.hi))
            elif d.rule == "linear":
                out.append(_linear(getattr(sp, d.attr), d.lo, d.hi))
            elif d.rule == "costume":
                out.append(sp.costume / d.hi)
            elif d.rule == "size":
                out.append(min(sp.size / d.hi, 1.0))
            else:
                out.append(squash(sp.vars[d.attr]))
        elif d.source == "variable":
            out.append(squash(state.variables[d.attr]))
        else:
            v = state.mouse_x if d.attr == "x" else state.mouse_y
            out.append(_linear(v, d.lo, d.hi))
    return tuple(out)


def build_action_alphabet(spec: GameSpec) -> tuple["Action", ...]:
    """Key presses for every key the game listens to (triggers or key
    predicates, first appearance order), clicks on every sprite with a click
    trigger (sprite order), then noop."""
    from noveltest.vm.interpreter import NOOP, Action

    keys: list[str] = []
    clicked: set[str] = set()
    for script in spec.scripts:
        if script.trigger.kind == "key_pressed" and script.trigger.key not in keys:
            keys.append(script.trigger.key)
        if script.trigger.kind == "sprite_clicked":
            clicked.add(script.trigger.sprite)
        for s in _walk(script.body):
            if s.cond is not None and s.cond.kind == "key_pressed" and s.cond.key not in keys:
                keys.append(s.cond.key)
    actions = [Action.press(k) for k in keys]
    actions += [Action.click(s.name) for s in spec.sprites if s.name in clicked]
    actions.append(NOOP)
    return tuple(actions)
