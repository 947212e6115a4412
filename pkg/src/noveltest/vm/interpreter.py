"""Tick-based interpreter for :class:`~noveltest.vm.spec.GameSpec` games.

Scripts run as cooperative threads. Each tick every active thread (in script
order) executes until it yields: at a ``wait``, at a loop back-edge, or when
its body ends. The interpreter records statement coverage, which script
entries fired, and for every control location the smallest branch distance
seen towards each outcome.

``step`` mutates the state it is given and returns it; callers that need the
previous state must ``copy()`` it first.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from noveltest.objectives.distance import (
    K,
    NO_TARGET_DISTANCE,
    compare_outcome,
    rect_gap,
)
from noveltest.vm.spec import (
    STAGE,
    X_BOUNDS,
    Y_BOUNDS,
    GameSpec,
    Predicate,
    Statement,
    validate_spec,
)

RUNNING = "running"
WON = "won"
GAME_OVER = "game-over"
TIMEOUT = "timeout"

ROOT = 0

DEFAULT_MAX_TICKS = 300
DEFAULT_DECISION_INTERVAL = 10

# frame kinds
_F_SCRIPT, _F_IF, _F_REPEAT, _F_FOREVER = 0, 1, 2, 3
# node codes
_C_SIMPLE, _C_IF, _C_REPEAT, _C_FOREVER, _C_WAIT = 0, 1, 2, 3, 4

XMIN, XMAX = X_BOUNDS
YMIN, YMAX = Y_BOUNDS


def entry_id(script_index: int) -> int:
    """CDG/trace id of a script entry; statement ids are positive."""
    return -(script_index + 1)


# --------------------------------------------------------------------------
# actions


@dataclass(frozen=True)
class Action:
    kind: str  # press_key | click_sprite | move_mouse | noop
    key: str | None = None
    duration: int | None = None
    sprite: str | None = None
    x: float | None = None
    y: float | None = None

    @staticmethod
    def noop() -> "Action":
        return NOOP

    @staticmethod
    def press(key: str, duration: int | None = None) -> "Action":
        return Action("press_key", key=key, duration=duration)

    @staticmethod
    def click(sprite: str) -> "Action":
        return Action("click_sprite", sprite=sprite)

    @staticmethod
    def mouse(x: float, y: float) -> "Action":
        return Action("move_mouse", x=x, y=y)

    def label(self) -> str:
        if self.kind == "press_key":
            return f"press:{self.key}"
        if self.kind == "click_sprite":
            return f"click:{self.sprite}"
        if self.kind == "move_mouse":
            return f"mouse:{self.x},{self.y}"
        return "noop"


NOOP = Action("noop")


# --------------------------------------------------------------------------
# runtime state


class SpriteState:
    __slots__ = ("x", "y", "heading", "costume", "size", "visible", "vars")

    def __init__(self, x, y, heading, costume, size, visible, vars):
        self.x = x
        self.y = y
        self.heading = heading
        self.costume = costume
        self.size = size
        self.visible = visible
        self.vars = vars

    def copy(self) -> "SpriteState":
        return SpriteState(self.x, self.y, self.heading, self.costume, self.size, self.visible, dict(self.vars))

    def snapshot(self) -> tuple:
        return (self.x, self.y, self.heading, self.costume, self.size, self.visible, tuple(sorted(self.vars.items())))


class Thread:
    __slots__ = ("stack", "wake", "active")

    def __init__(self):
        self.stack: list[list[Any]] = []
        self.wake = 0
        self.active = False

    def copy(self) -> "Thread":
        t = Thread()
        t.stack = [list(f) for f in self.stack]
        t.wake = self.wake
        t.active = self.active
        return t


class GameState:
    __slots__ = (
        "instance",
        "sprites",
        "variables",
        "backdrop",
        "mouse_x",
        "mouse_y",
        "mouse_down",
        "held",
        "keys_down",
        "tick",
        "rng",
        "covered",
        "fired",
        "trace",
        "terminal",
        "threads",
        "pending",
        "stopped",
    )

    def copy(self) -> "GameState":
        s = GameState.__new__(GameState)
        s.instance = self.instance
        s.sprites = [sp.copy() for sp in self.sprites]
        s.variables = dict(self.variables)
        s.backdrop = self.backdrop
        s.mouse_x, s.mouse_y, s.mouse_down = self.mouse_x, self.mouse_y, self.mouse_down
        s.held = dict(self.held)
        s.keys_down = set(self.keys_down)
        s.tick = self.tick
        s.rng = random.Random()
        s.rng.setstate(self.rng.getstate())
        s.covered = set(self.covered)
        s.fired = set(self.fired)
        s.trace = {k: list(v) for k, v in self.trace.items()}
        s.terminal = self.terminal
        s.threads = [t.copy() for t in self.threads]
        s.pending = list(self.pending)
        s.stopped = self.stopped
        return s

    def snapshot(self) -> tuple:
        """Plain-value view of everything observable, for equality checks."""
        return (
            tuple(sp.snapshot() for sp in self.sprites),
            tuple(sorted(self.variables.items())),
            self.backdrop,
            (self.mouse_x, self.mouse_y, self.mouse_down),
            tuple(sorted(self.held.items())),
            self.tick,
            self.rng.getstate(),
            tuple(sorted(self.covered)),
            tuple(sorted(self.fired)),
            tuple(sorted((k, tuple(v)) for k, v in self.trace.items())),
            self.terminal,
            tuple((t.active, t.wake, tuple((len(f[0]), f[1], f[2], f[3]) for f in t.stack)) for t in self.threads),
            tuple(self.pending),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GameState):
            return NotImplemented
        return self.snapshot() == other.snapshot()

    def sprite(self, name: str) -> SpriteState:
        return self.sprites[self.instance.sprite_index[name]]

    def variable(self, name: str, owner: str | None = None):
        if owner is not None and owner != STAGE:
            private = self.sprite(owner).vars
            if name in private:
                return private[name]
        return self.variables[name]


# --------------------------------------------------------------------------
# compilation


def _unit(heading: float) -> tuple[float, float]:
    h = heading % 360.0
    exact = {0.0: (0.0, 1.0), 90.0: (1.0, 0.0), 180.0: (0.0, -1.0), 270.0: (-1.0, 0.0)}
    if h in exact:
        return exact[h]
    r = math.radians(heading)
    return math.sin(r), math.cos(r)


def _wrap_heading(d: float) -> float:
    """Map any angle into (-180, 180]."""
    return 180.0 - (180.0 - d) % 360.0


def _clamp(sp: SpriteState) -> None:
    if sp.x < XMIN:
        sp.x = XMIN
    elif sp.x > XMAX:
        sp.x = XMAX
    if sp.y < YMIN:
        sp.y = YMIN
    elif sp.y > YMAX:
        sp.y = YMAX


def compile_expr(e: Any, owner: str | None, inst: "GameInstance") -> Callable[[GameState], Any]:
    if isinstance(e, (int, float)) and not isinstance(e, bool):
        c = float(e)
        return lambda st: c
    if isinstance(e, str):
        return lambda st: e
    if "var" in e:
        name = e["var"]
        if owner not in (None, STAGE) and name in inst.spec.sprite(owner).variables:
            i = inst.sprite_index[owner]
            return lambda st: st.sprites[i].vars[name]
        return lambda st: st.variables[name]
    if "attr" in e:
        j = inst.sprite_index[e["sprite"]]
        attr = e["attr"]
        if attr == "x":
            return lambda st: st.sprites[j].x
        if attr == "y":
            return lambda st: st.sprites[j].y
        if attr == "heading":
            return lambda st: st.sprites[j].heading
        if attr == "size":
            return lambda st: st.sprites[j].size
        return lambda st: float(st.sprites[j].costume)
    if "mouse" in e:
        if e["mouse"] == "x":
            return lambda st: st.mouse_x
        return lambda st: st.mouse_y
    if "op" in e:
        left = compile_expr(e["left"], owner, inst)
        right = compile_expr(e["right"], owner, inst)
        op = e["op"]
        if op == "+":
            return lambda st: left(st) + right(st)
        if op == "-":
            return lambda st: left(st) - right(st)
        if op == "*":
            return lambda st: left(st) * right(st)

        def div(st):
            d = right(st)
            return left(st) / d if d != 0 else 0.0

        return div
    raise ValueError(f"bad expression {e!r}")


def sprite_gap(st: GameState, i: int, j: int) -> float:
    """Gap between visible sprites ``i`` and ``j``; NO_TARGET_DISTANCE if either is hidden."""
    a = st.sprites[i]
    b = st.sprites[j]
    if not (a.visible and b.visible):
        return NO_TARGET_DISTANCE
    ext = st.instance.half_extents
    ahw, ahh = ext[i][a.costume]
    bhw, bhh = ext[j][b.costume]
    s1 = a.size * 0.01
    s2 = b.size * 0.01
    return rect_gap(a.x, a.y, ahw * s1, ahh * s1, b.x, b.y, bhw * s2, bhh * s2)


def colour_gap(st: GameState, i: int, colour: str) -> float:
    """Gap from sprite ``i`` to the nearest visible pixel of ``colour`` on another sprite."""
    a = st.sprites[i]
    if not a.visible:
        return NO_TARGET_DISTANCE
    best = NO_TARGET_DISTANCE
    for j, costume in st.instance.colour_owners.get(colour, ()):
        if j == i:
            continue
        b = st.sprites[j]
        if b.visible and b.costume == costume:
            g = sprite_gap(st, i, j)
            if g < best:
                best = g
    return best


def compile_predicate(p: Predicate, owner: str | None, inst: "GameInstance") -> Callable[[GameState], tuple[bool, float]]:
    """Compile to ``state -> (outcome, distance to the opposite outcome)``."""
    kind = p.kind
    if kind == "compare":
        left = compile_expr(p.left, owner, inst)
        right = compile_expr(p.right, owner, inst)
        op = p.op
        return lambda st: compare_outcome(left(st), op, right(st))
    if kind == "touching_sprite":
        i = inst.sprite_index[p.sprite]
        j = inst.sprite_index[p.other]

        def touching_sprite(st):
            g = sprite_gap(st, i, j)
            return (True, K) if g <= 0.0 else (False, g)

        return touching_sprite
    if kind == "touching_colour":
        i = inst.sprite_index[p.sprite]
        colour = p.colour

        def touching_colour(st):
            g = colour_gap(st, i, colour)
            return (True, K) if g <= 0.0 else (False, g)

        return touching_colour
    if kind == "key_pressed":
        key = p.key
        return lambda st: (key in st.keys_down, K)
    if kind == "string_equals":
        value = compile_expr({"var": p.var}, owner, inst)
        literal = p.value
        return lambda st: (value(st) == literal, K)
    raise ValueError(f"unknown predicate {kind!r}")


class _Node:
    __slots__ = ("id", "code", "fn", "pred", "count", "body", "orelse")

    def __init__(self, sid: int, code: int):
        self.id = sid
        self.code = code
        self.fn = None
        self.pred = None
        self.count = None
        self.body: tuple = ()
        self.orelse: tuple = ()


def _compile_simple(s: Statement, owner: str, inst: "GameInstance") -> Callable[[GameState], None]:
    op = s.op
    a = s.args
    idx = inst.sprite_index.get(owner, -1)

    def ex(name: str):
        return compile_expr(a[name], owner, inst)

    if op == "move_steps":
        steps = ex("steps")

        def move_steps(st):
            sp = st.sprites[idx]
            n = steps(st)
            ux, uy = _unit(sp.heading)
            sp.x += n * ux
            sp.y += n * uy
            _clamp(sp)

        return move_steps
    if op == "go_to":
        fx, fy = ex("x"), ex("y")

        def go_to(st):
            sp = st.sprites[idx]
            sp.x = fx(st)
            sp.y = fy(st)
            _clamp(sp)

        return go_to
    if op == "point_in_direction":
        fd = ex("direction")

        def point(st):
            st.sprites[idx].heading = _wrap_heading(fd(st))

        return point
    if op in ("change_variable", "set_variable"):
        name = a["var"]
        private = owner != STAGE and name in inst.spec.sprite(owner).variables
        fv = ex("by" if op == "change_variable" else "value")
        if op == "change_variable":
            if private:

                def change_private(st):
                    d = st.sprites[idx].vars
                    d[name] = d[name] + fv(st)

                return change_private

            def change_global(st):
                st.variables[name] = st.variables[name] + fv(st)

            return change_global
        if private:

            def set_private(st):
                st.sprites[idx].vars[name] = fv(st)

            return set_private

        def set_global(st):
            st.variables[name] = fv(st)

        return set_global
    if op == "switch_costume":
        fc = ex("costume")
        n_costumes = len(inst.spec.sprite(owner).costumes)

        def switch_costume(st):
            st.sprites[idx].costume = int(round(fc(st))) % n_costumes

        return switch_costume
    if op == "switch_backdrop":
        fb = ex("backdrop")
        n_backdrops = inst.spec.backdrops

        def switch_backdrop(st):
            st.backdrop = int(round(fb(st))) % n_backdrops

        return switch_backdrop
    if op == "set_size":
        fs = ex("size")
        cap = inst.max_sizes[idx]

        def set_size(st):
            st.sprites[idx].size = min(max(fs(st), 1.0), cap)

        return set_size
    if op == "show":

        def show(st):
            st.sprites[idx].visible = True

        return show
    if op == "hide":

        def hide(st):
            st.sprites[idx].visible = False

        return hide
    if op == "say":
        return lambda st: None
    if op == "broadcast":
        msg = a["message"]

        def broadcast(st):
            st.pending.append(msg)

        return broadcast
    if op == "random_range_assign":
        name = a["var"]
        private = owner != STAGE and name in inst.spec.sprite(owner).variables
        flo, fhi = ex("low"), ex("high")

        def rand_assign(st):
            lo, hi = flo(st), fhi(st)
            if lo > hi:
                lo, hi = hi, lo
            if float(lo).is_integer() and float(hi).is_integer():
                v = float(st.rng.randint(int(lo), int(hi)))
            else:
                v = st.rng.uniform(lo, hi)
            if private:
                st.sprites[idx].vars[name] = v
            else:
                st.variables[name] = v

        return rand_assign
    if op == "stop_all":

        def stop_all(st):
            for t in st.threads:
                t.active = False
            st.stopped = True

        return stop_all
    if op == "declare_win":

        def win(st):
            st.terminal = WON
            st.stopped = True

        return win
    if op == "declare_game_over":

        def game_over(st):
            st.terminal = GAME_OVER
            st.stopped = True

        return game_over
    raise ValueError(f"not a simple statement: {op}")


def _compile_body(stmts: Sequence[Statement], owner: str, inst: "GameInstance") -> tuple[_Node, ...]:
    out = []
    for s in stmts:
        if s.op == "if":
            n = _Node(s.id, _C_IF)
            n.pred = compile_predicate(s.cond, owner, inst)
            n.body = _compile_body(s.body, owner, inst)
            n.orelse = _compile_body(s.orelse, owner, inst)
        elif s.op == "repeat":
            n = _Node(s.id, _C_REPEAT)
            n.count = compile_expr(s.args["times"], owner, inst)
            n.body = _compile_body(s.body, owner, inst)
        elif s.op == "forever":
            n = _Node(s.id, _C_FOREVER)
            n.body = _compile_body(s.body, owner, inst)
        elif s.op == "wait":
            n = _Node(s.id, _C_WAIT)
            n.count = compile_expr(s.args["ticks"], owner, inst)
        else:
            n = _Node(s.id, _C_SIMPLE)
            n.fn = _compile_simple(s, owner, inst)
        out.append(n)
    return tuple(out)


@dataclass(frozen=True)
class _CompiledScript:
    index: int
    entry: int
    kind: str
    key: str | None
    sprite: str | None
    message: str | None
    body: tuple


# --------------------------------------------------------------------------
# instance


class GameInstance:
    """A validated game with everything derived from its spec.

    Immutable after construction and safe to share between episodes.
    """

    def __init__(self, spec: GameSpec):
        from noveltest.vm.features import build_action_alphabet, build_schema

        validate_spec(spec)
        self.spec = spec
        self.sprite_index: dict[str, int] = {s.name: i for i, s in enumerate(spec.sprites)}
        self.half_extents = [tuple((c.width / 2.0, c.height / 2.0) for c in s.costumes) for s in spec.sprites]
        owners: dict[str, list[tuple[int, int]]] = {}
        for i, s in enumerate(spec.sprites):
            for ci, c in enumerate(s.costumes):
                owners.setdefault(c.colour, []).append((i, ci))
        self.colour_owners = {k: tuple(v) for k, v in owners.items()}
        self.max_sizes = [_declared_max_size(spec, i) for i in range(len(spec.sprites))]
        self.statement_ids: tuple[int, ...] = tuple(sorted(spec.statement_ids()))
        self.scripts = tuple(
            _CompiledScript(
                index=i,
                entry=entry_id(i),
                kind=sc.trigger.kind,
                key=sc.trigger.key,
                sprite=sc.trigger.sprite,
                message=sc.trigger.message,
                body=_compile_body(sc.body, sc.owner, self),
            )
            for i, sc in enumerate(spec.scripts)
        )
        # scripts grouped by trigger, each group in script order
        self.start_scripts = tuple(sc for sc in self.scripts if sc.kind == "game_start")
        self.key_scripts = tuple(sc for sc in self.scripts if sc.kind == "key_pressed")
        self.message_scripts = tuple(sc for sc in self.scripts if sc.kind == "broadcast")
        self.click_scripts: dict[str, tuple[_CompiledScript, ...]] = {}
        for sc in self.scripts:
            if sc.kind == "sprite_clicked":
                self.click_scripts[sc.sprite] = self.click_scripts.get(sc.sprite, ()) + (sc,)
        self.schema = build_schema(spec, self)
        self.alphabet = build_action_alphabet(spec)
        self.digest = spec.digest()

    def initial_state(self, seed: int = 0) -> GameState:
        st = GameState.__new__(GameState)
        st.instance = self
        st.sprites = [
            SpriteState(s.x, s.y, _wrap_heading(s.heading), s.costume, s.size, s.visible, dict(s.variables))
            for s in self.spec.sprites
        ]
        st.variables = dict(self.spec.variables)
        for sp in st.sprites:
            for k, v in sp.vars.items():
                if not isinstance(v, str):
                    sp.vars[k] = float(v)
        for k, v in st.variables.items():
            if not isinstance(v, str):
                st.variables[k] = float(v)
        st.backdrop = 0
        st.mouse_x = 0.0
        st.mouse_y = 0.0
        st.mouse_down = False
        st.held = {}
        st.keys_down = set()
        st.tick = 0
        st.rng = random.Random(seed)
        st.covered = set()
        st.fired = set()
        st.trace = {}
        st.terminal = RUNNING
        st.threads = [Thread() for _ in self.scripts]
        st.pending = []
        st.stopped = False
        return st


def _declared_max_size(spec: GameSpec, i: int) -> float:
    sprite = spec.sprites[i]
    if sprite.max_size is not None:
        return float(sprite.max_size)
    best = max(100.0, sprite.size)
    for sc in spec.scripts:
        if sc.owner != sprite.name:
            continue
        stack = list(sc.body)
        while stack:
            s = stack.pop()
            stack.extend(s.children())
            if s.op == "set_size":
                v = s.args["size"]
                if isinstance(v, (int, float)):
                    best = max(best, float(v))
    return best


def load_game(spec: GameSpec) -> GameInstance:
    """Validate ``spec`` and derive its feature schema and action alphabet."""
    return GameInstance(spec)


# --------------------------------------------------------------------------
# execution


def _start(st: GameState, script: _CompiledScript) -> None:
    th = st.threads[script.index]
    th.stack = [[script.body, 0, _F_SCRIPT, 0]]
    th.wake = 0
    th.active = True
    st.fired.add(script.entry)


def _run_thread(st: GameState, th: Thread) -> None:
    stack = th.stack
    covered = st.covered
    trace = st.trace
    while True:
        frame = stack[-1]
        body = frame[0]
        pc = frame[1]
        if pc >= len(body):
            kind = frame[2]
            if kind == _F_SCRIPT:
                th.active = False
                return
            if kind == _F_FOREVER:
                frame[1] = 0
                return
            if kind == _F_REPEAT:
                frame[3] -= 1
                if frame[3] > 0:
                    frame[1] = 0
                    return
            stack.pop()
            continue
        node = body[pc]
        frame[1] = pc + 1
        covered.add(node.id)
        code = node.code
        if code == _C_SIMPLE:
            node.fn(st)
            if st.stopped:
                return
        elif code == _C_IF:
            outcome, flip = node.pred(st)
            rec = trace.get(node.id)
            if rec is None:
                rec = trace[node.id] = [math.inf, math.inf]
            if outcome:
                rec[0] = 0.0
                if flip < rec[1]:
                    rec[1] = flip
                if node.body:
                    stack.append([node.body, 0, _F_IF, 0])
            else:
                rec[1] = 0.0
                if flip < rec[0]:
                    rec[0] = flip
                if node.orelse:
                    stack.append([node.orelse, 0, _F_IF, 0])
        elif code == _C_REPEAT:
            n = int(round(node.count(st)))
            rec = trace.get(node.id)
            if rec is None:
                rec = trace[node.id] = [math.inf, math.inf]
            if n >= 1:
                rec[0] = 0.0
                if n - 1 + K < rec[1]:
                    rec[1] = n - 1 + K
                stack.append([node.body, 0, _F_REPEAT, n])
            else:
                rec[1] = 0.0
                if 1 - n < rec[0]:
                    rec[0] = float(1 - n)
        elif code == _C_FOREVER:
            stack.append([node.body, 0, _F_FOREVER, 0])
        else:  # wait
            th.wake = st.tick + max(1, int(round(node.count(st))))
            return


def _apply_action(st: GameState, action: Action) -> str | None:
    kind = action.kind
    if kind == "noop":
        return None
    if kind == "press_key":
        d = action.duration if action.duration is not None else 1
        if d > st.held.get(action.key, 0):
            st.held[action.key] = d
        return None
    if kind == "move_mouse":
        st.mouse_x = min(max(float(action.x), XMIN), XMAX)
        st.mouse_y = min(max(float(action.y), YMIN), YMAX)
        return None
    if kind == "click_sprite":
        i = st.instance.sprite_index.get(action.sprite)
        if i is None or not st.sprites[i].visible:
            return None
        sp = st.sprites[i]
        st.mouse_x, st.mouse_y = sp.x, sp.y
        st.mouse_down = True
        return action.sprite
    raise ValueError(f"unknown action {kind!r}")


def step(state: GameState, action: Action = NOOP, instance: GameInstance | None = None) -> GameState:
    """Advance ``state`` by one tick in place and return it.

    A terminal state is returned untouched.
    """
    st = state
    if st.terminal != RUNNING:
        return st
    inst = instance if instance is not None else st.instance
    st.mouse_down = False
    clicked = _apply_action(st, action)
    held = st.held
    st.keys_down = {k for k, n in held.items() if n > 0}
    messages = st.pending
    st.pending = []
    threads = st.threads
    # starting order is irrelevant: threads always run in script order
    if st.tick == 0:
        for script in inst.start_scripts:
            _start(st, script)
    keys_down = st.keys_down
    if keys_down:
        for script in inst.key_scripts:
            if script.key in keys_down and not threads[script.index].active:
                _start(st, script)
    if clicked is not None:
        for script in inst.click_scripts.get(clicked, ()):
            _start(st, script)
    if messages:
        for script in inst.message_scripts:
            if script.message in messages:
                _start(st, script)
    st.stopped = False
    tick = st.tick
    for th in threads:
        if th.active and th.wake <= tick:
            _run_thread(st, th)
            if st.terminal != RUNNING:
                break
            if st.stopped:
                # stop_all: nothing else runs this tick
                st.pending = []
                break
    for k in list(held):
        n = held[k] - 1
        if n > 0:
            held[k] = n
        else:
            del held[k]
    st.tick = tick + 1
    return st


# --------------------------------------------------------------------------
# episodes


Policy = Callable[[tuple], Action]


@dataclass
class EpisodeResult:
    covered: frozenset
    fired: frozenset
    # control location id -> (min distance to true, min distance to false)
    trace: Mapping[int, tuple[float, float]]
    end_reason: str
    ticks: int
    final_state: GameState = field(repr=False)

    def executed(self, node: int) -> bool:
        """Whether a CDG node (statement, script entry, or root) ran."""
        if node == ROOT:
            return True
        if node < 0:
            return node in self.fired
        return node in self.covered


def run_episode(
    policy: Policy,
    instance: GameInstance,
    seed: int,
    max_ticks: int = DEFAULT_MAX_TICKS,
    decision_interval: int = DEFAULT_DECISION_INTERVAL,
) -> EpisodeResult:
    """Play one episode from the initial state.

    ``policy`` receives the current behaviour vector every ``decision_interval``
    ticks; a key press without an explicit duration is held until the next
    decision.
    """
    if max_ticks < 1:
        raise ValueError("max_ticks must be >= 1")
    from noveltest.vm.features import extract_features

    st = instance.initial_state(seed)
    schema = instance.schema
    for t in range(max_ticks):
        if t % decision_interval == 0:
            action = policy(extract_features(st, schema))
            if action.kind == "press_key" and action.duration is None:
                action = Action.press(action.key, decision_interval)
        else:
            action = NOOP
        step(st, action, instance)
        if st.terminal != RUNNING:
            break
    if st.terminal == RUNNING:
        st.terminal = TIMEOUT
    return EpisodeResult(
        covered=frozenset(st.covered),
        fired=frozenset(st.fired),
        trace={k: (v[0], v[1]) for k, v in st.trace.items()},
        end_reason=st.terminal,
        ticks=st.tick,
        final_state=st,
    )
