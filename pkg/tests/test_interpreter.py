import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from noveltest.vm import (
    GAME_OVER,
    NOOP,
    RUNNING,
    TIMEOUT,
    WON,
    Action,
    GameSpecError,
    load_game,
    run_episode,
    spec_from_dict,
    step,
)
from noveltest.vm.spec import X_BOUNDS, Y_BOUNDS

from helpers import NOOP_POLICY, constant, one_sprite_game


def _right_mover(steps=10):
    return one_sprite_game(
        [{"owner": "cat", "trigger": {"type": "key_pressed", "key": "right"},
          "body": [{"op": "move_steps", "steps": steps}]}]
    )


def test_key_press_moves_and_covers():
    inst = load_game(_right_mover())
    st0 = inst.initial_state(0)
    step(st0, Action.press("right"), inst)
    assert st0.sprite("cat").x == 10.0
    assert 1 in st0.covered
    assert st0.tick == 1


def test_noop_on_key_only_game_changes_only_tick():
    inst = load_game(_right_mover())
    s = inst.initial_state(0)
    before = s.copy()
    step(s, NOOP, inst)
    assert s.tick == before.tick + 1
    s.tick = before.tick
    assert s == before


def test_terminal_is_sticky():
    spec = one_sprite_game([{"owner": "cat", "trigger": {"type": "game_start"},
                             "body": [{"op": "declare_win"}, {"op": "move_steps", "steps": 5}]}])
    inst = load_game(spec)
    s = inst.initial_state(0)
    step(s, NOOP, inst)
    assert s.terminal == WON
    snap = s.snapshot()
    step(s, Action.press("right"), inst)
    assert s.snapshot() == snap
    # the statement after declare_win never ran
    assert 2 not in s.covered


def test_game_over_ends_episode():
    spec = one_sprite_game([{"owner": "stage", "trigger": {"type": "game_start"},
                             "body": [{"op": "wait", "ticks": 3}, {"op": "declare_game_over"}]}])
    ep = run_episode(NOOP_POLICY, load_game(spec), seed=0, max_ticks=50)
    assert ep.end_reason == GAME_OVER
    assert ep.ticks == 4


def test_max_ticks_one_simulates_one_tick():
    ep = run_episode(NOOP_POLICY, load_game(_right_mover()), seed=0, max_ticks=1)
    assert ep.ticks == 1
    assert ep.end_reason == TIMEOUT


def test_max_ticks_must_be_positive():
    with pytest.raises(ValueError):
        run_episode(NOOP_POLICY, load_game(_right_mover()), seed=0, max_ticks=0)


def test_noop_maze_times_out_on_level_one(maze):
    ep = run_episode(NOOP_POLICY, maze, seed=3, max_ticks=300)
    assert ep.end_reason == TIMEOUT
    assert ep.final_state.variable("level") == 1


def test_episode_is_deterministic(maze):
    policy = constant(Action.press("right"))
    a = run_episode(policy, maze, seed=11)
    b = run_episode(policy, maze, seed=11)
    assert a.covered == b.covered
    assert a.trace == b.trace
    assert a.final_state == b.final_state


def test_seed_changes_random_draws(maze):
    spawns = {run_episode(NOOP_POLICY, maze, seed=s, max_ticks=2).final_state.variable("spawn") for s in range(20)}
    assert len(spawns) > 1
    assert all(-60 <= v <= 60 for v in spawns)


def test_wait_yields_for_the_given_ticks():
    spec = one_sprite_game([{"owner": "cat", "trigger": {"type": "game_start"},
                             "body": [{"op": "wait", "ticks": 5}, {"op": "move_steps", "steps": 1}]}])
    inst = load_game(spec)
    s = inst.initial_state(0)
    for _ in range(5):
        step(s, NOOP, inst)
    assert s.sprite("cat").x == 0.0
    step(s, NOOP, inst)
    assert s.sprite("cat").x == 1.0


def test_forever_yields_each_iteration():
    spec = one_sprite_game([{"owner": "cat", "trigger": {"type": "game_start"},
                             "body": [{"op": "forever", "body": [{"op": "move_steps", "steps": 2}]}]}])
    inst = load_game(spec)
    s = inst.initial_state(0)
    for _ in range(3):
        step(s, NOOP, inst)
    assert s.sprite("cat").x == 6.0


def test_repeat_runs_body_count_times():
    spec = one_sprite_game([{"owner": "cat", "trigger": {"type": "game_start"},
                             "body": [{"op": "repeat", "times": 3, "body": [{"op": "move_steps", "steps": 1}]},
                                      {"op": "say", "text": "done"}]}])
    ep = run_episode(NOOP_POLICY, load_game(spec), seed=0, max_ticks=10)
    assert ep.final_state.sprite("cat").x == 3.0
    assert 3 in ep.covered


def test_broadcast_starts_receivers_next_tick():
    spec = one_sprite_game([
        {"owner": "stage", "trigger": {"type": "game_start"}, "body": [{"op": "broadcast", "message": "go"}]},
        {"owner": "cat", "trigger": {"type": "broadcast", "message": "go"}, "body": [{"op": "move_steps", "steps": 4}]},
    ])
    inst = load_game(spec)
    s = inst.initial_state(0)
    step(s, NOOP, inst)
    assert s.sprite("cat").x == 0.0
    step(s, NOOP, inst)
    assert s.sprite("cat").x == 4.0


def test_click_restarts_script():
    spec = one_sprite_game(
        [{"owner": "cat", "trigger": {"type": "sprite_clicked", "sprite": "cat"},
          "body": [{"op": "change_variable", "var": "n", "by": 1}]}],
        variables={"n": 0},
    )
    inst = load_game(spec)
    s = inst.initial_state(0)
    for _ in range(3):
        step(s, Action.click("cat"), inst)
    assert s.variable("n") == 3


def test_heading_wraps_into_half_open_range():
    spec = one_sprite_game([{"owner": "cat", "trigger": {"type": "game_start"},
                             "body": [{"op": "point_in_direction", "direction": 270}]}])
    ep = run_episode(NOOP_POLICY, load_game(spec), seed=0, max_ticks=1)
    assert ep.final_state.sprite("cat").heading == -90.0


def test_move_uses_heading():
    spec = one_sprite_game([{"owner": "cat", "trigger": {"type": "game_start"},
                             "body": [{"op": "point_in_direction", "direction": 0},
                                      {"op": "move_steps", "steps": 7}]}])
    cat = run_episode(NOOP_POLICY, load_game(spec), seed=0, max_ticks=1).final_state.sprite("cat")
    assert (cat.x, cat.y) == (0.0, 7.0)


def test_division_by_zero_is_zero():
    spec = one_sprite_game(
        [{"owner": "stage", "trigger": {"type": "game_start"},
          "body": [{"op": "set_variable", "var": "v", "value": {"op": "/", "left": 3, "right": 0}}]}],
        variables={"v": 5},
    )
    assert run_episode(NOOP_POLICY, load_game(spec), seed=0, max_ticks=1).final_state.variable("v") == 0.0


def test_undeclared_variable_names_statement():
    with pytest.raises(GameSpecError) as err:
        load_game(one_sprite_game([{"owner": "stage", "trigger": {"type": "game_start"},
                                    "body": [{"op": "say", "text": "hi"},
                                             {"op": "change_variable", "var": "score", "by": 1}]}]))
    assert err.value.statement_id == 2
    assert "score" in str(err.value)


def test_duplicate_statement_id_rejected():
    with pytest.raises(GameSpecError):
        load_game(one_sprite_game([{"owner": "stage", "trigger": {"type": "game_start"},
                                    "body": [{"id": 4, "op": "show"}, {"id": 4, "op": "hide"}]}]))


def test_undeclared_sprite_in_trigger_rejected():
    with pytest.raises(GameSpecError):
        load_game(one_sprite_game([{"owner": "cat", "trigger": {"type": "sprite_clicked", "sprite": "dog"},
                                    "body": [{"op": "show"}]}]))


def test_zero_script_game_has_noop_only():
    spec = spec_from_dict({"name": "empty", "stage": {"backdrops": 1}, "sprites": [], "scripts": []})
    inst = load_game(spec)
    assert inst.alphabet == (NOOP,)


actions = st.sampled_from([Action.press(k) for k in ("right", "left", "up", "down")] + [NOOP])


@given(seed=st.integers(0, 2**31), moves=st.lists(actions, min_size=1, max_size=40))
def test_reachable_states_stay_on_canvas_and_coverage_grows(maze, seed, moves):
    s = maze.initial_state(seed)
    seen = set()
    for a in moves:
        for _ in range(5):
            step(s, a, maze)
            assert seen <= s.covered
            seen = set(s.covered)
            for sp in s.sprites:
                assert X_BOUNDS[0] <= sp.x <= X_BOUNDS[1]
                assert Y_BOUNDS[0] <= sp.y <= Y_BOUNDS[1]
                assert -180.0 < sp.heading <= 180.0
    assert s.covered <= set(maze.statement_ids)
    assert s.terminal in (RUNNING, WON, GAME_OVER, TIMEOUT)
    assert not math.isnan(s.sprite("player").x)
