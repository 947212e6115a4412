"""Declarative mini-game definitions and their JSON form.

A game is a stage plus an ordered list of sprites and scripts. Scripts hold
nested statements; conditions are predicates over the runtime state. The JSON
document mirrors these dataclasses field for field (see ``games/SCHEMA.md``).

Expressions are kept in their JSON shape and compiled by the interpreter:

* a number or a string literal,
* ``{"var": name}`` -- sprite-private variable of the owner, else global,
* ``{"attr": "x" | "y" | "heading" | "size" | "costume", "sprite": name}``,
* ``{"mouse": "x" | "y"}``,
* ``{"op": "+" | "-" | "*" | "/", "left": expr, "right": expr}``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Union

X_BOUNDS = (-240.0, 240.0)
Y_BOUNDS = (-180.0, 180.0)
HEADING_BOUNDS = (-180.0, 180.0)

STAGE = "stage"

Expr = Union[int, float, str, Mapping[str, Any]]

COMPARE_OPS = ("<", "<=", ">", ">=", "=")
ARITH_OPS = ("+", "-", "*", "/")
SPRITE_ATTRS = ("x", "y", "heading", "size", "costume")

PREDICATE_KINDS = ("compare", "touching_sprite", "touching_colour", "key_pressed", "string_equals")
TRIGGER_KINDS = ("game_start", "key_pressed", "sprite_clicked", "broadcast")

# op -> names of its expression arguments
SIMPLE_OPS: dict[str, tuple[str, ...]] = {
    "move_steps": ("steps",),
    "go_to": ("x", "y"),
    "point_in_direction": ("direction",),
    "change_variable": ("by",),
    "set_variable": ("value",),
    "switch_costume": ("costume",),
    "switch_backdrop": ("backdrop",),
    "set_size": ("size",),
    "show": (),
    "hide": (),
    "say": (),
    "broadcast": (),
    "wait": ("ticks",),
    "random_range_assign": ("low", "high"),
    "stop_all": (),
    "declare_win": (),
    "declare_game_over": (),
}
CONTROL_OPS = ("if", "repeat", "forever")
ALL_OPS = tuple(SIMPLE_OPS) + CONTROL_OPS


class GameSpecError(ValueError):
    """Structural problem in a game spec; ``statement_id`` names the first offender."""

    def __init__(self, message: str, statement_id: int | None = None):
        if statement_id is not None:
            message = f"statement {statement_id}: {message}"
        super().__init__(message)
        self.statement_id = statement_id


@dataclass(frozen=True)
class Costume:
    width: float
    height: float
    colour: str


@dataclass(frozen=True)
class SpriteSpec:
    name: str
    costumes: tuple[Costume, ...]
    x: float = 0.0
    y: float = 0.0
    heading: float = 90.0
    costume: int = 0
    size: float = 100.0
    visible: bool = True
    variables: Mapping[str, float | str] = field(default_factory=dict)
    # upper bound for the size feature; derived from set_size literals when None
    max_size: float | None = None


@dataclass(frozen=True)
class Trigger:
    kind: str
    key: str | None = None
    sprite: str | None = None
    message: str | None = None


@dataclass(frozen=True)
class Predicate:
    kind: str
    left: Expr | None = None
    op: str | None = None
    right: Expr | None = None
    sprite: str | None = None
    other: str | None = None
    colour: str | None = None
    key: str | None = None
    var: str | None = None
    value: str | None = None


@dataclass(frozen=True)
class Statement:
    id: int
    op: str
    args: Mapping[str, Any] = field(default_factory=dict)
    cond: Predicate | None = None
    body: tuple["Statement", ...] = ()
    orelse: tuple["Statement", ...] = ()

    def children(self) -> Iterator["Statement"]:
        yield from self.body
        yield from self.orelse


@dataclass(frozen=True)
class Script:
    owner: str
    trigger: Trigger
    body: tuple[Statement, ...]


@dataclass(frozen=True)
class GameSpec:
    name: str
    sprites: tuple[SpriteSpec, ...]
    scripts: tuple[Script, ...]
    backdrops: int = 1
    variables: Mapping[str, float | str] = field(default_factory=dict)

    def sprite(self, name: str) -> SpriteSpec:
        for s in self.sprites:
            if s.name == name:
                return s
        raise KeyError(name)

    def sprite_index(self, name: str) -> int:
        for i, s in enumerate(self.sprites):
            if s.name == name:
                return i
        raise KeyError(name)

    def iter_statements(self) -> Iterator[tuple[int, Statement]]:
        """Yield ``(script index, statement)`` in document order."""
        for i, script in enumerate(self.scripts):
            stack = list(reversed(script.body))
            while stack:
                stmt = stack.pop()
                yield i, stmt
                stack.extend(reversed(tuple(stmt.children())))

    def statement_ids(self) -> list[int]:
        return [s.id for _, s in self.iter_statements()]

    def to_dict(self) -> dict[str, Any]:
        return spec_to_dict(self)

    def digest(self) -> str:
        return structural_digest(self)


# --------------------------------------------------------------------------
# JSON round trip


def _expr_from_json(e: Any) -> Expr:
    if isinstance(e, bool):
        raise GameSpecError(f"booleans are not expressions: {e!r}")
    if isinstance(e, (int, float, str)):
        return e
    if isinstance(e, Mapping):
        if "op" in e:
            return {"op": e["op"], "left": _expr_from_json(e["left"]), "right": _expr_from_json(e["right"])}
        return dict(e)
    raise GameSpecError(f"bad expression {e!r}")


def _predicate_from_json(d: Mapping[str, Any]) -> Predicate:
    kind = d.get("type")
    if kind not in PREDICATE_KINDS:
        raise GameSpecError(f"unknown predicate type {kind!r}")
    kw = {k: v for k, v in d.items() if k != "type"}
    if kind == "compare":
        kw["left"] = _expr_from_json(kw["left"])
        kw["right"] = _expr_from_json(kw["right"])
    if "colour" in kw:
        kw["colour"] = str(kw["colour"]).lower()
    return Predicate(kind=kind, **kw)


def _predicate_to_json(p: Predicate) -> dict[str, Any]:
    out: dict[str, Any] = {"type": p.kind}
    for name in ("left", "op", "right", "sprite", "other", "colour", "key", "var", "value"):
        v = getattr(p, name)
        if v is not None:
            out[name] = v
    return out


class _IdAllocator:
    def __init__(self, used: set[int]):
        self.used = used
        self.next = 1

    def take(self) -> int:
        while self.next in self.used:
            self.next += 1
        self.used.add(self.next)
        return self.next


def _collect_ids(raw: list[Any], out: list[int]) -> None:
    for d in raw:
        if "id" in d:
            out.append(int(d["id"]))
        for key in ("then", "else", "body"):
            _collect_ids(d.get(key, []), out)


def _statement_from_json(d: Mapping[str, Any], ids: _IdAllocator) -> Statement:
    op = d.get("op")
    sid = int(d["id"]) if "id" in d else ids.take()
    if op not in ALL_OPS:
        raise GameSpecError(f"unknown op {op!r}", sid)
    args: dict[str, Any] = {}
    cond = None
    body: tuple[Statement, ...] = ()
    orelse: tuple[Statement, ...] = ()
    for key, value in d.items():
        if key in ("id", "op", "then", "else", "body", "cond"):
            continue
        args[key] = value if key in ("var", "text", "message") else _expr_from_json(value)
    if op == "if":
        if "cond" not in d:
            raise GameSpecError("if without cond", sid)
        cond = _predicate_from_json(d["cond"])
        body = tuple(_statement_from_json(c, ids) for c in d.get("then", []))
        orelse = tuple(_statement_from_json(c, ids) for c in d.get("else", []))
    elif op in ("repeat", "forever"):
        body = tuple(_statement_from_json(c, ids) for c in d.get("body", []))
    return Statement(id=sid, op=op, args=args, cond=cond, body=body, orelse=orelse)


def _statement_to_json(s: Statement) -> dict[str, Any]:
    out: dict[str, Any] = {"id": s.id, "op": s.op}
    out.update(s.args)
    if s.op == "if":
        assert s.cond is not None
        out["cond"] = _predicate_to_json(s.cond)
        out["then"] = [_statement_to_json(c) for c in s.body]
        if s.orelse:
            out["else"] = [_statement_to_json(c) for c in s.orelse]
    elif s.op in ("repeat", "forever"):
        out["body"] = [_statement_to_json(c) for c in s.body]
    return out


def spec_from_dict(d: Mapping[str, Any]) -> GameSpec:
    """Build a :class:`GameSpec` from its JSON document. Missing statement ids
    are assigned in document order, skipping ids used explicitly."""
    try:
        sprites = []
        for sd in d.get("sprites", []):
            costumes = tuple(
                Costume(float(c["width"]), float(c["height"]), str(c["colour"]).lower())
                for c in sd.get("costumes", [])
            )
            sprites.append(
                SpriteSpec(
                    name=sd["name"],
                    costumes=costumes,
                    x=float(sd.get("x", 0.0)),
                    y=float(sd.get("y", 0.0)),
                    heading=float(sd.get("heading", 90.0)),
                    costume=int(sd.get("costume", 0)),
                    size=float(sd.get("size", 100.0)),
                    visible=bool(sd.get("visible", True)),
                    variables=dict(sd.get("variables", {})),
                    max_size=sd.get("max_size"),
                )
            )
        explicit: list[int] = []
        for sc in d.get("scripts", []):
            _collect_ids(sc.get("body", []), explicit)
        ids = _IdAllocator(set(explicit))
        scripts = []
        for sc in d.get("scripts", []):
            trig = dict(sc.get("trigger", {"type": "game_start"}))
            kind = trig.pop("type")
            scripts.append(
                Script(
                    owner=sc.get("owner", STAGE),
                    trigger=Trigger(kind=kind, **trig),
                    body=tuple(_statement_from_json(s, ids) for s in sc.get("body", [])),
                )
            )
        stage = d.get("stage", {})
        return GameSpec(
            name=d.get("name", "game"),
            sprites=tuple(sprites),
            scripts=tuple(scripts),
            backdrops=int(stage.get("backdrops", 1)),
            variables=dict(stage.get("variables", {})),
        )
    except (KeyError, TypeError) as exc:
        if isinstance(exc, GameSpecError):
            raise
        raise GameSpecError(f"malformed game document: {exc!r}") from exc


def spec_to_dict(spec: GameSpec) -> dict[str, Any]:
    sprites = []
    for s in spec.sprites:
        sd: dict[str, Any] = {
            "name": s.name,
            "x": s.x,
            "y": s.y,
            "heading": s.heading,
            "costumes": [{"width": c.width, "height": c.height, "colour": c.colour} for c in s.costumes],
            "costume": s.costume,
            "size": s.size,
            "visible": s.visible,
            "variables": dict(s.variables),
        }
        if s.max_size is not None:
            sd["max_size"] = s.max_size
        sprites.append(sd)
    scripts = []
    for sc in spec.scripts:
        trig: dict[str, Any] = {"type": sc.trigger.kind}
        for name in ("key", "sprite", "message"):
            v = getattr(sc.trigger, name)
            if v is not None:
                trig[name] = v
        scripts.append({"owner": sc.owner, "trigger": trig, "body": [_statement_to_json(s) for s in sc.body]})
    return {
        "name": spec.name,
        "stage": {"backdrops": spec.backdrops, "variables": dict(spec.variables)},
        "sprites": sprites,
        "scripts": scripts,
    }


def load_spec_file(path: str) -> GameSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def dump_spec_file(spec: GameSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2)
        fh.write("\n")


def structural_digest(spec: GameSpec) -> str:
    """Hash of the game's shape: sprites, variables, triggers and the statement
    skeleton (ids, ops, nesting). Literal values are left out so that a suite
    can be replayed against a game whose constants were edited, while any
    change to targets or to the network I/O layout is caught."""

    def skel(stmts: tuple[Statement, ...]) -> list[Any]:
        out = []
        for s in stmts:
            node: list[Any] = [s.id, s.op]
            if s.cond is not None:
                node.append(s.cond.kind)
            if s.body:
                node.append(skel(s.body))
            if s.orelse:
                node.append(skel(s.orelse))
            out.append(node)
        return out

    shape = {
        "sprites": [[s.name, len(s.costumes), sorted(s.variables)] for s in spec.sprites],
        "variables": sorted(spec.variables),
        "backdrops": spec.backdrops,
        "scripts": [
            [sc.owner, sc.trigger.kind, sc.trigger.key, sc.trigger.sprite, sc.trigger.message, skel(sc.body)]
            for sc in spec.scripts
        ],
    }
    blob = json.dumps(shape, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# validation


def _is_numeric(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class _Validator:
    def __init__(self, spec: GameSpec):
        self.spec = spec
        self.sprite_names = {s.name for s in spec.sprites}
        self.colours = {c.colour for s in spec.sprites for c in s.costumes}

    def var_type(self, owner: str, name: str, sid: int) -> type:
        if owner != STAGE:
            private = self.spec.sprite(owner).variables
            if name in private:
                return str if isinstance(private[name], str) else float
        if name in self.spec.variables:
            return str if isinstance(self.spec.variables[name], str) else float
        raise GameSpecError(f"undeclared variable {name!r}", sid)

    def sprite_ref(self, name: Any, sid: int) -> None:
        if name not in self.sprite_names:
            raise GameSpecError(f"undeclared sprite {name!r}", sid)

    def expr(self, e: Any, owner: str, sid: int) -> type:
        if _is_numeric(e):
            return float
        if isinstance(e, str):
            return str
        if not isinstance(e, Mapping):
            raise GameSpecError(f"bad expression {e!r}", sid)
        if "var" in e:
            return self.var_type(owner, e["var"], sid)
        if "attr" in e:
            if e["attr"] not in SPRITE_ATTRS:
                raise GameSpecError(f"unknown sprite attribute {e['attr']!r}", sid)
            self.sprite_ref(e.get("sprite"), sid)
            return float
        if "mouse" in e:
            if e["mouse"] not in ("x", "y"):
                raise GameSpecError(f"unknown mouse axis {e['mouse']!r}", sid)
            return float
        if "op" in e:
            if e["op"] not in ARITH_OPS:
                raise GameSpecError(f"unknown arithmetic op {e['op']!r}", sid)
            if self.expr(e["left"], owner, sid) is not float or self.expr(e["right"], owner, sid) is not float:
                raise GameSpecError("arithmetic over strings", sid)
            return float
        raise GameSpecError(f"bad expression {e!r}", sid)

    def numeric(self, e: Any, owner: str, sid: int) -> None:
        if self.expr(e, owner, sid) is not float:
            raise GameSpecError(f"expected a numeric expression, got {e!r}", sid)

    def predicate(self, p: Predicate, owner: str, sid: int) -> None:
        if p.kind == "compare":
            if p.op not in COMPARE_OPS:
                raise GameSpecError(f"unknown comparison {p.op!r}", sid)
            self.numeric(p.left, owner, sid)
            self.numeric(p.right, owner, sid)
        elif p.kind == "touching_sprite":
            self.sprite_ref(p.sprite, sid)
            self.sprite_ref(p.other, sid)
        elif p.kind == "touching_colour":
            self.sprite_ref(p.sprite, sid)
            if p.colour not in self.colours:
                raise GameSpecError(f"undeclared colour {p.colour!r}", sid)
        elif p.kind == "key_pressed":
            if not p.key:
                raise GameSpecError("key_pressed without key", sid)
        elif p.kind == "string_equals":
            if p.var is None or self.var_type(owner, p.var, sid) is not str:
                raise GameSpecError(f"string_equals over non-string variable {p.var!r}", sid)
            if not isinstance(p.value, str):
                raise GameSpecError("string_equals literal must be a string", sid)
        else:
            raise GameSpecError(f"unknown predicate {p.kind!r}", sid)

    def statement(self, s: Statement, owner: str) -> None:
        sid = s.id
        if not isinstance(sid, int) or sid < 1:
            raise GameSpecError("statement ids must be positive integers", sid)
        op = s.op
        if op in SIMPLE_OPS:
            for name in SIMPLE_OPS[op]:
                if name not in s.args:
                    raise GameSpecError(f"{op} needs argument {name!r}", sid)
        sprite_only = ("move_steps", "go_to", "point_in_direction", "switch_costume", "set_size", "show", "hide")
        if op in sprite_only and owner == STAGE:
            raise GameSpecError(f"{op} is not available to the stage", sid)
        if op in ("change_variable", "set_variable", "random_range_assign"):
            if "var" not in s.args:
                raise GameSpecError(f"{op} needs 'var'", sid)
            vt = self.var_type(owner, s.args["var"], sid)
            if op == "set_variable":
                if self.expr(s.args["value"], owner, sid) is not vt:
                    raise GameSpecError("set_variable type mismatch", sid)
            elif vt is not float:
                raise GameSpecError(f"{op} on string variable", sid)
        if op == "broadcast" and not isinstance(s.args.get("message"), str):
            raise GameSpecError("broadcast needs a message", sid)
        for name in SIMPLE_OPS.get(op, ()):
            if op == "set_variable":
                continue
            self.numeric(s.args[name], owner, sid)
        if op == "switch_costume" and _is_numeric(s.args["costume"]):
            n = len(self.spec.sprite(owner).costumes)
            if not 0 <= int(s.args["costume"]) < n:
                raise GameSpecError(f"costume index out of range for {owner!r}", sid)
        if op == "switch_backdrop" and _is_numeric(s.args["backdrop"]):
            if not 0 <= int(s.args["backdrop"]) < self.spec.backdrops:
                raise GameSpecError("backdrop index out of range", sid)
        if op == "if":
            assert s.cond is not None
            self.predicate(s.cond, owner, sid)
        if op == "repeat":
            self.numeric(s.args.get("times"), owner, sid)
        if op not in ("if", "repeat", "forever") and (s.body or s.orelse):
            raise GameSpecError(f"{op} cannot have a body", sid)

    def run(self) -> None:
        spec = self.spec
        seen_names: set[str] = set()
        for sp in spec.sprites:
            if sp.name in seen_names or sp.name == STAGE:
                raise GameSpecError(f"duplicate or reserved sprite name {sp.name!r}")
            seen_names.add(sp.name)
            if not sp.costumes:
                raise GameSpecError(f"sprite {sp.name!r} has no costumes")
            if not 0 <= sp.costume < len(sp.costumes):
                raise GameSpecError(f"sprite {sp.name!r} initial costume out of range")
            if not (X_BOUNDS[0] <= sp.x <= X_BOUNDS[1] and Y_BOUNDS[0] <= sp.y <= Y_BOUNDS[1]):
                raise GameSpecError(f"sprite {sp.name!r} starts off the canvas")
            if not HEADING_BOUNDS[0] <= sp.heading <= HEADING_BOUNDS[1]:
                raise GameSpecError(f"sprite {sp.name!r} heading out of range")
            if sp.size <= 0:
                raise GameSpecError(f"sprite {sp.name!r} size must be positive")
        if spec.backdrops < 1:
            raise GameSpecError("need at least one backdrop")
        seen_ids: set[int] = set()
        for i, stmt in spec.iter_statements():
            if stmt.id in seen_ids:
                raise GameSpecError("duplicate statement id", stmt.id)
            seen_ids.add(stmt.id)
        for script in spec.scripts:
            if script.owner != STAGE and script.owner not in self.sprite_names:
                raise GameSpecError(f"script owner {script.owner!r} is not declared")
            trig = script.trigger
            if trig.kind not in TRIGGER_KINDS:
                raise GameSpecError(f"unknown trigger {trig.kind!r}")
            if trig.kind == "key_pressed" and not trig.key:
                raise GameSpecError("key trigger without key")
            if trig.kind == "sprite_clicked":
                self.sprite_ref(trig.sprite, None)  # type: ignore[arg-type]
            if trig.kind == "broadcast" and not trig.message:
                raise GameSpecError("broadcast trigger without message")
            stack = list(script.body)
            while stack:
                stmt = stack.pop(0)
                self.statement(stmt, script.owner)
                stack[:0] = list(stmt.children())


def validate_spec(spec: GameSpec) -> None:
    """Raise :class:`GameSpecError` for the first structural problem found."""
    _Validator(spec).run()
