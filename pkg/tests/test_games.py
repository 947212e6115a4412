import numpy as np
import pytest

from noveltest.games import (
    BUILTIN,
    MENUS,
    clicker_deepest_menu_target,
    clicker_win_target,
    event_targets,
    maze_level_advance,
    maze_portal_guard,
)
from noveltest.objectives import branch_distance, build_cdg, statement_fitness
from noveltest.vm import NOOP, WON, Action, load_game, run_episode, step
from noveltest.vm.interpreter import TIMEOUT

from helpers import constant


def maze_witness(maze):
    """Right until level 2, then up over the wall, right, and down into the portal."""
    sch = maze.schema
    ix, iy, ilv = sch.index("player.x"), sch.index("player.y"), sch.index("var.level")

    def policy(f):
        x = f[ix] * 480 - 240
        y = f[iy] * 360 - 180
        if f[ilv] < 0.8:  # squash(1) = 0.75, squash(2) ~ 0.83
            return Action.press("right")
        if y < 80 and x < 25:
            return Action.press("up")
        if x < 190:
            return Action.press("right")
        return Action.press("down")

    return policy


def clicker_witness():
    seq = ["ball"] * 10 + ["next"] * 3 + ["buy"]
    it = iter(seq)
    return lambda f: Action.click(next(it, "ball"))


def test_builtins_load_and_sizes():
    for build in BUILTIN.values():
        inst = load_game(build())
        assert 40 <= len(inst.spec.statement_ids()) <= 80


@pytest.mark.parametrize("seed", range(10))
def test_maze_witness_wins(maze, seed):
    ep = run_episode(maze_witness(maze), maze, seed, max_ticks=300)
    assert ep.end_reason == WON
    assert ep.final_state.variable("level") == 3
    assert maze_level_advance(maze.spec, 2) in ep.covered


def test_constant_right_stalls_at_level_two_wall(maze):
    target = maze_level_advance(maze.spec, 2)
    cdg = build_cdg(maze.spec)
    fs = []
    for seed in range(5):
        ep = run_episode(constant(Action.press("right")), maze, seed, max_ticks=300)
        assert ep.end_reason == TIMEOUT
        assert ep.final_state.variable("level") == 2
        p = ep.final_state.sprite("player")
        assert (p.x, p.y) == (-32.0, 0.0)
        fs.append(statement_fitness(ep, target, cdg).fitness)
    # pressed against the wall: same positive objective on every seed
    assert len(set(fs)) == 1 and fs[0] > 0.0


def _contact_state(maze):
    s = maze.initial_state(0)
    for t in range(200):
        step(s, Action.press("right", 10) if t % 10 == 0 else NOOP, maze)
    assert s.variable("level") == 2 and s.sprite("player").x == -32.0
    return s


def test_maze_deception_at_wall_contact(maze):
    """From the wall contact point no single move gets closer to the portal,
    although moving right would if the wall were not there."""
    guard = maze_portal_guard(maze.spec, 2)
    start = _contact_state(maze)
    d0 = branch_distance(guard.cond, start, True, "stage")
    assert d0 > 0.0
    for action in maze.alphabet:
        s = start.copy()
        step(s, action.__class__.press(action.key, 1) if action.kind == "press_key" else action, maze)
        step(s, NOOP, maze)
        assert branch_distance(guard.cond, s, True, "stage") >= d0
    # the same move with the wall hidden would have helped
    s = start.copy()
    s.sprite("wall").visible = False
    step(s, Action.press("right", 1), maze)
    assert branch_distance(guard.cond, s, True, "stage") < d0


@pytest.mark.parametrize("seed", range(5))
def test_clicker_witness_wins(clicker, seed):
    ep = run_episode(clicker_witness(), clicker, seed, max_ticks=300, decision_interval=1)
    assert ep.end_reason == WON
    assert clicker_win_target(clicker.spec) in ep.covered


def test_clicker_menu_guards_are_string_equals(clicker_spec):
    for _, s in clicker_spec.iter_statements():
        if s.cond is not None and s.cond.kind == "string_equals":
            assert (s.cond.var, s.cond.value) == ("status", "Upgraded") or (
                s.cond.var == "menu" and s.cond.value in MENUS)
        if s.cond is not None and s.cond.kind == "compare":
            assert "menu" not in (s.cond.left, s.cond.right)
            assert {"var": "menu"} not in (s.cond.left, s.cond.right)


@pytest.mark.parametrize("action", ["ball", "next", "prev", "buy", None])
def test_single_click_policy_leaves_quarter_uncovered(clicker, action):
    a = Action.click(action) if action else NOOP
    total = len(clicker.spec.statement_ids())
    for seed in range(3):
        ep = run_episode(constant(a), clicker, seed, max_ticks=300, decision_interval=1)
        assert total - len(ep.covered) >= 0.25 * total


def _shop_target(spec, menu):
    guard = next(s for _, s in spec.iter_statements()
                 if s.cond is not None and s.cond.kind == "string_equals" and s.cond.value == menu
                 and s.body and s.body[0].op == "if" and s.body[0].cond.kind == "compare")
    return guard.body[0].id


def test_wrong_menu_states_share_objective(clicker):
    target = _shop_target(clicker.spec, "Shop2")
    cdg = build_cdg(clicker.spec)
    values = set()
    for n_next in (0, 1, 3):  # Main, Shop1, Shop3
        seq = iter(["next"] * n_next + ["ball"] * 5 + ["buy"])
        ep = run_episode(lambda f: Action.click(next(seq, "ball")), clicker, 0, max_ticks=20, decision_interval=1)
        assert target not in ep.covered
        values.add(statement_fitness(ep, target, cdg).fitness)
    assert values == {0.5}


def test_clicker_plateau_one_value_per_approach_level(clicker):
    target = clicker_deepest_menu_target(clicker.spec)
    cdg = build_cdg(clicker.spec)
    rng = np.random.default_rng(0)
    by_level = {}
    for i in range(60):
        acts = [clicker.alphabet[j] for j in rng.integers(len(clicker.alphabet), size=40)]
        it = iter(acts)
        ep = run_episode(lambda f: next(it, NOOP), clicker, i, max_ticks=40, decision_interval=1)
        r = statement_fitness(ep, target, cdg)
        if not r.covered:
            by_level.setdefault(r.approach_level, set()).add(r.fitness)
    assert by_level
    assert all(len(v) == 1 for v in by_level.values())


def test_event_targets(maze_spec, clicker_spec):
    assert event_targets(maze_spec) == {"level2_advance": maze_level_advance(maze_spec, 2)}
    assert event_targets(clicker_spec) == {"game_won": clicker_win_target(clicker_spec)}
