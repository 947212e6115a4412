"""Built-in desk-scale games.

``maze``: a player square walks to an orange portal. On level 2 a grey wall
sits between spawn and portal with a gap at the top, so walking straight at
the portal ends pressed against the wall and the only way through first moves
away from it.

``clicker``: points are earned by clicking a ball and spent on upgrades in
shop menus. The current menu is a string; next/previous buttons branch on
string equality, so the objective is flat across menus. A stage loop checks
a status string every tick, so until some agent buys the first upgrade every
agent gets the same objective value for the statement behind that check.

Both are written as JSON-shaped dicts and parsed with ``spec_from_dict``;
statement ids follow document order.
"""

from __future__ import annotations

from typing import Any

from noveltest.vm.spec import GameSpec, Statement, spec_from_dict

PLAYER_COLOUR = "#3050ff"
WALL_COLOUR = "#808080"
PORTAL_COLOUR = "#ff8000"

MOVE_STEP = 8
SPAWN_X = -200
SPAWN_Y_RANGE = (-60, 60)
PORTAL_X = 220  # 40 wide: spans x in [200, 240], so walking into the right edge touches it
LEVEL2_PORTAL = (PORTAL_X, -60)
LEVEL2_WALL = (0, -60)  # 30 x 240 costume: spans y in [-180, 60]

MENUS = ("Main", "Shop1", "Shop2", "Shop3")


# small builders ------------------------------------------------------------


def _if(cond: dict, then: list, orelse: list | None = None) -> dict:
    d = {"op": "if", "cond": cond, "then": then}
    if orelse:
        d["else"] = orelse
    return d


def _var(name: str) -> dict:
    return {"var": name}


def _eq(left: Any, right: Any) -> dict:
    return {"type": "compare", "left": left, "op": "=", "right": right}


def _streq(var: str, value: str) -> dict:
    return {"type": "string_equals", "var": var, "value": value}


def _say(text: str) -> dict:
    return {"op": "say", "text": text}


def _script(owner: str, trigger: dict, body: list) -> dict:
    return {"owner": owner, "trigger": trigger, "body": body}


def _on_start(owner: str, body: list) -> dict:
    return _script(owner, {"type": "game_start"}, body)


def _on_message(owner: str, message: str, body: list) -> dict:
    return _script(owner, {"type": "broadcast", "message": message}, body)


def _on_click(sprite: str, body: list) -> dict:
    return _script(sprite, {"type": "sprite_clicked", "sprite": sprite}, body)


# maze ------------------------------------------------------------------------


def _move_script(key: str, direction: int) -> dict:
    return _script(
        "player",
        {"type": "key_pressed", "key": key},
        [
            {"op": "point_in_direction", "direction": direction},
            {"op": "move_steps", "steps": MOVE_STEP},
            _if({"type": "touching_sprite", "sprite": "player", "other": "wall"},
                [{"op": "move_steps", "steps": -MOVE_STEP}]),
            {"op": "broadcast", "message": "moved"},
        ],
    )


def maze_document() -> dict:
    touch_portal = {"type": "touching_colour", "sprite": "player", "colour": PORTAL_COLOUR}
    return {
        "name": "maze",
        "stage": {"backdrops": 3, "variables": {"level": 1, "time": 0, "spawn": 0}},
        "sprites": [
            {"name": "player", "x": SPAWN_X, "y": 0, "heading": 90,
             "costumes": [{"width": 20, "height": 20, "colour": PLAYER_COLOUR}]},
            {"name": "wall", "x": 0, "y": 150, "heading": 90,
             "costumes": [{"width": 30, "height": 40, "colour": WALL_COLOUR},
                          {"width": 30, "height": 240, "colour": WALL_COLOUR}]},
            {"name": "portal", "x": PORTAL_X, "y": 0, "heading": 90,
             "costumes": [{"width": 40, "height": 100, "colour": PORTAL_COLOUR}]},
        ],
        "scripts": [
            _on_start("stage", [
                {"op": "set_variable", "var": "level", "value": 1},
                {"op": "switch_backdrop", "backdrop": 0},
                {"op": "set_variable", "var": "time", "value": 0},
                {"op": "forever", "body": [
                    {"op": "wait", "ticks": 30},
                    {"op": "change_variable", "var": "time", "by": 1},
                    _if({"type": "compare", "left": _var("time"), "op": ">", "right": 8}, [_say("Hurry up!")]),
                ]},
            ]),
            _on_start("player", [
                {"op": "random_range_assign", "var": "spawn", "low": SPAWN_Y_RANGE[0], "high": SPAWN_Y_RANGE[1]},
                {"op": "go_to", "x": SPAWN_X, "y": _var("spawn")},
                {"op": "point_in_direction", "direction": 90},
                {"op": "show"},
            ]),
            _move_script("right", 90),
            _move_script("left", -90),
            _move_script("up", 0),
            _move_script("down", 180),
            # level_up receivers run before the portal check within a tick
            _on_message("player", "level_up", [
                {"op": "set_variable", "var": "spawn", "value": 0},
                {"op": "go_to", "x": SPAWN_X, "y": 0},
            ]),
            _on_message("wall", "level_up", [
                _if(_eq(_var("level"), 2), [
                    {"op": "switch_costume", "costume": 1},
                    {"op": "go_to", "x": LEVEL2_WALL[0], "y": LEVEL2_WALL[1]},
                ]),
            ]),
            _on_message("portal", "level_up", [
                _if(_eq(_var("level"), 2), [
                    {"op": "go_to", "x": LEVEL2_PORTAL[0], "y": LEVEL2_PORTAL[1]},
                ]),
            ]),
            _on_message("stage", "moved", [
                _if(_eq(_var("level"), 1), [
                    _if(touch_portal, [
                        {"op": "change_variable", "var": "level", "by": 1},
                        {"op": "switch_backdrop", "backdrop": 1},
                        {"op": "broadcast", "message": "level_up"},
                    ]),
                ], [
                    _if(_eq(_var("level"), 2), [
                        _if(touch_portal, [
                            {"op": "change_variable", "var": "level", "by": 1},
                            {"op": "switch_backdrop", "backdrop": 2},
                            _say("Level 3!"),
                            {"op": "declare_win"},
                        ]),
                    ]),
                ]),
            ]),
            _on_start("wall", [
                {"op": "switch_costume", "costume": 0},
                {"op": "go_to", "x": 0, "y": 150},
            ]),
            _on_start("portal", [
                {"op": "go_to", "x": PORTAL_X, "y": 0},
            ]),
        ],
    }


def build_maze_world() -> GameSpec:
    return spec_from_dict(maze_document())


def _find(spec: GameSpec, match) -> Statement:
    for _, s in spec.iter_statements():
        if match(s):
            return s
    raise LookupError("no matching statement")


def _portal_branch(spec: GameSpec, level: int) -> Statement:
    """The touching-portal guard nested under ``level = <level>``."""
    outer = _find(
        spec,
        lambda s: s.op == "if" and s.cond.kind == "compare" and s.cond.right == level
        and any(c.op == "if" and c.cond.kind == "touching_colour" for c in s.body),
    )
    return next(c for c in outer.body if c.op == "if")


def maze_level_advance(spec: GameSpec, level: int) -> int:
    """Id of the first statement run when the level-``level`` portal is reached."""
    return _portal_branch(spec, level).body[0].id


def maze_portal_guard(spec: GameSpec, level: int) -> Statement:
    return _portal_branch(spec, level)


# clicker ---------------------------------------------------------------------


def _menu_chain(order: tuple[str, ...]) -> list:
    """if/else chain moving each menu to its successor in ``order``."""
    chain: list = []
    for i in reversed(range(len(order))):
        cur, nxt = order[i], order[(i + 1) % len(order)]
        branch = [
            {"op": "set_variable", "var": "menu", "value": nxt},
            {"op": "switch_backdrop", "backdrop": MENUS.index(nxt)},
        ]
        chain = [_if(_streq("menu", cur), branch, chain or None)]
    return chain


def _shop(menu: str, price: int, reward: list, poor: str) -> dict:
    return _if(_streq("menu", menu), [
        _if({"type": "compare", "left": _var("points"), "op": ">=", "right": price}, [
            {"op": "change_variable", "var": "points", "by": -price},
            *reward,
        ], [_say(poor)]),
    ])


def clicker_document() -> dict:
    button = lambda name, x, colour: {  # noqa: E731
        "name": name, "x": x, "y": -150, "heading": 90,
        "costumes": [{"width": 50, "height": 24, "colour": colour}],
    }
    return {
        "name": "clicker",
        "stage": {"backdrops": len(MENUS),
                  "variables": {"points": 0, "power": 1, "upgrades": 0, "menu": "Main", "status": "Basic"}},
        "sprites": [
            {"name": "ball", "x": 0, "y": 40, "heading": 90,
             "costumes": [{"width": 60, "height": 60, "colour": "#e03030"}]},
            button("next", 150, "#20a020"),
            button("prev", -150, "#20a0a0"),
            {"name": "buy", "x": 0, "y": -150, "heading": 90,
             "costumes": [{"width": 70, "height": 24, "colour": c}
                          for c in ("#c0c0c0", "#f0d000", "#f08000", "#a000f0")]},
        ],
        "scripts": [
            _on_start("stage", [
                {"op": "set_variable", "var": "points", "value": 0},
                {"op": "set_variable", "var": "power", "value": 1},
                {"op": "set_variable", "var": "menu", "value": "Main"},
                {"op": "set_variable", "var": "upgrades", "value": 0},
                {"op": "set_variable", "var": "status", "value": "Basic"},
                {"op": "switch_backdrop", "backdrop": 0},
                # status banner, checked every tick by every agent alike
                {"op": "forever", "body": [
                    {"op": "wait", "ticks": 1},
                    _if(_streq("status", "Upgraded"), [_say("Upgrade active")]),
                ]},
            ]),
            _on_click("ball", [
                {"op": "change_variable", "var": "points", "by": _var("power")},
                _say("+1"),
                _if({"type": "compare", "left": _var("points"), "op": ">", "right": 20}, [_say("So rich!")]),
            ]),
            _on_click("next", [*_menu_chain(MENUS), {"op": "broadcast", "message": "menu_changed"}]),
            _on_click("prev", [
                *_menu_chain(tuple(reversed(MENUS))),
                {"op": "broadcast", "message": "menu_changed"},
            ]),
            _on_message("buy", "menu_changed", [
                _if(_streq("menu", m), [{"op": "switch_costume", "costume": i}]) for i, m in enumerate(MENUS)
            ]),
            _on_click("buy", [
                _if(_streq("menu", "Main"), [_say("Pick a shop first")]),
                _shop("Shop1", 3, [
                    {"op": "change_variable", "var": "power", "by": 1},
                    {"op": "change_variable", "var": "upgrades", "by": 1},
                    {"op": "set_variable", "var": "status", "value": "Upgraded"},
                ], "Need 3 points"),
                _shop("Shop2", 6, [
                    {"op": "change_variable", "var": "power", "by": 2},
                    {"op": "change_variable", "var": "upgrades", "by": 1},
                ], "Need 6 points"),
                _shop("Shop3", 10, [
                    _say("Legendary!"),
                    {"op": "declare_win"},
                ], "Need 10 points"),
            ]),
        ],
    }


def build_clicker() -> GameSpec:
    return spec_from_dict(clicker_document())


def clicker_deepest_menu_target(spec: GameSpec) -> int:
    """Deepest statement in the ``next`` button's menu chain."""
    cdg_depth: dict[int, int] = {}

    def walk(stmts, d):
        for s in stmts:
            cdg_depth[s.id] = d
            walk(s.body, d + 1)
            walk(s.orelse, d + 1)

    script = next(sc for sc in spec.scripts if sc.trigger.kind == "sprite_clicked" and sc.trigger.sprite == "next")
    walk(script.body, 1)
    deepest = max(cdg_depth.values())
    return min(i for i, d in cdg_depth.items() if d == deepest)




def clicker_win_target(spec: GameSpec) -> int:
    """Id of the ``declare_win`` bought in the last shop."""
    return _find(spec, lambda s: s.op == "declare_win").id


def event_targets(spec: GameSpec) -> dict[str, int]:
    """Milestone statements reported by comparisons, keyed by event name."""
    events: dict[str, int] = {}
    try:
        events["level2_advance"] = maze_level_advance(spec, 2)
    except (LookupError, StopIteration):
        pass
    if not events and any(s.cond is not None and s.cond.kind == "string_equals" for _, s in spec.iter_statements()):
        try:
            events["game_won"] = clicker_win_target(spec)
        except LookupError:
            pass
    return events


BUILTIN = {"maze": build_maze_world, "clicker": build_clicker}
