import dataclasses
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from noveltest.neat import InnovationLedger, NeatParams, minimal_genome
from noveltest.search import (
    FITNESS,
    NOVELTY,
    ConfigError,
    DynamicTestSuite,
    EvaluationRecord,
    SearchConfig,
    SuiteDigestError,
    derive_seed,
    neatest_search,
    rank_candidates,
    replay_suite,
    robustness_check,
    robustness_seeds,
)
from noveltest.vm import load_game, run_episode, spec_from_dict, spec_to_dict

from helpers import NOOP_POLICY, one_sprite_game, win_at_start

import numpy as np


def rec(gid, fitness, novelty=0.0):
    return EvaluationRecord(gid, fitness, None, (), frozenset(), 0, novelty)


def test_rank_fitness_mode_ties_by_id():
    rs = [rec(3, 0.5, 0.9), rec(1, 0.5, 0.1), rec(2, 0.8, 0.0)]
    assert rank_candidates(rs, FITNESS) == [2, 1, 3]


def test_rank_novelty_mode_orders_ties_by_novelty():
    rs = [rec(3, 0.5, 0.9), rec(1, 0.5, 0.1), rec(2, 0.8, 0.0), rec(4, 0.5, 0.9)]
    assert rank_candidates(rs, NOVELTY) == [2, 3, 4, 1]


def test_rank_tolerance():
    rs = [rec(0, 0.5), rec(1, 0.5 + 4e-10, 0.0), rec(2, 0.5 - 4e-10, 1.0)]
    assert rank_candidates(rs, NOVELTY) == [2, 0, 1]
    assert rank_candidates(rs, FITNESS) == [1, 0, 2]


def test_rank_unknown_mode():
    with pytest.raises(ConfigError):
        rank_candidates([], "novel")


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=30, unique_by=lambda t: t[0]))
def test_modes_agree_without_ties(pairs):
    fits = sorted(p[0] for p in pairs)
    if any(b - a <= 1e-9 for a, b in zip(fits, fits[1:])):
        return
    rs = [rec(i, f, n) for i, (f, n) in enumerate(pairs)]
    assert rank_candidates(rs, NOVELTY) == rank_candidates(rs, FITNESS)


def test_derive_seed_is_stable():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 2, 4)
    assert robustness_seeds(5, 3) == [derive_seed(5, 0), derive_seed(5, 1), derive_seed(5, 2)]


def test_config_validation():
    with pytest.raises(ConfigError):
        SearchConfig(mode="novel")
    with pytest.raises(ConfigError):
        SearchConfig(robustness_reps=0)
    with pytest.raises(ConfigError):
        SearchConfig.from_dict({"mode": "fitness", "popsize": 3})
    with pytest.raises(ConfigError):
        SearchConfig.from_dict({"neat": {"population_size": 1}})
    cfg = SearchConfig.from_dict({"mode": "fitness", "neat": {"population_size": 7}, "novelty": {"k": 3}})
    assert cfg.neat.population_size == 7 and cfg.novelty.k == 3
    assert "workers" not in cfg.echo()


# lucky spawn: covering depends on a coin flip at game start
LUCKY = one_sprite_game(
    [{"owner": "stage", "trigger": {"type": "game_start"},
      "body": [{"op": "random_range_assign", "var": "coin", "low": 0, "high": 1},
               {"op": "if", "cond": {"type": "compare", "left": {"var": "coin"}, "op": "=", "right": 1},
                "then": [{"op": "say", "text": "lucky"}]}]}],
    variables={"coin": 0},
)


def test_lucky_spawn_fails_robustness():
    inst = load_game(LUCKY)
    lucky_seeds = [s for s in range(20) if 3 in run_episode(NOOP_POLICY, inst, s, max_ticks=2).covered]
    assert 0 < len(lucky_seeds) < 20
    g = minimal_genome(0, inst.schema.dimension, len(inst.alphabet), InnovationLedger(), np.random.default_rng(0))
    assert not robustness_check(g, 3, inst, 10, seed_base=1, max_ticks=2)
    assert robustness_check(g, 2, inst, 10, seed_base=1, max_ticks=2)


def small(mode=NOVELTY, **kw):
    base = dict(mode=mode, seed=3, max_generations=6, target_generations=3, max_ticks=60,
                robustness_reps=3, neat=NeatParams(population_size=8))
    base.update(kw)
    return SearchConfig(**base)


def test_trivial_game_covered_in_generation_zero():
    inst = load_game(win_at_start())
    res = neatest_search(inst, small())
    assert res.suite.coverage() == 1.0
    assert res.generations == 1
    assert res.suite.entries[1].generation == 0


def test_search_is_deterministic(maze):
    a = neatest_search(maze, small())
    b = neatest_search(maze, small())
    assert a.suite.dumps() == b.suite.dumps()
    assert a.timeline.to_csv("r", "m") == b.timeline.to_csv("r", "m")
    assert a.archive.entries == b.archive.entries


def test_workers_do_not_change_results(maze):
    a = neatest_search(maze, small(max_generations=3))
    b = neatest_search(maze, small(max_generations=3, workers=2))
    assert a.suite.dumps() == b.suite.dumps()
    assert a.timeline.points == b.timeline.points


def test_fitness_mode_leaves_archive_empty(maze):
    res = neatest_search(maze, small(mode=FITNESS))
    assert len(res.archive) == 0


def test_timeline_is_monotone_and_complete(maze):
    res = neatest_search(maze, small())
    pts = res.timeline.points
    assert [p.generation for p in pts] == list(range(res.generations))
    assert all(a.covered <= b.covered for a, b in zip(pts, pts[1:]))
    assert all(a.elapsed_ms <= b.elapsed_ms for a, b in zip(pts, pts[1:]))
    assert pts[-1].covered == res.suite.covered


def test_generation_log_ranks_whole_population(maze):
    logs = []
    neatest_search(maze, small(), on_generation=logs.append)
    assert logs
    for log in logs:
        assert sorted(log.rank) == sorted(r.genome_id for r in log.records)
        assert len(log.records) == 8
        assert rank_candidates(log.records, NOVELTY) == log.rank


def test_suite_entries_replay(maze):
    res = neatest_search(maze, small())
    assert res.suite.covered > 0
    outcomes = replay_suite(res.suite, maze)
    assert outcomes and all(o.passed for o in outcomes)
    again = DynamicTestSuite.from_dict(json.loads(res.suite.dumps()))
    assert again.dumps() == res.suite.dumps()


def test_replay_empty_suite(maze):
    suite = DynamicTestSuite("maze", maze.digest, {}, 10)
    assert replay_suite(suite, maze) == []


def test_replay_digest_mismatch(maze):
    res = neatest_search(maze, small(max_generations=1))
    other = load_game(win_at_start())
    with pytest.raises(SuiteDigestError):
        replay_suite(res.suite, other)


def mutate_level_guard(spec, value=7):
    """Copy of the maze whose ``level = 1`` guard compares against ``value``."""
    doc = spec_to_dict(spec)
    moved = next(sc for sc in doc["scripts"] if sc["trigger"] == {"type": "broadcast", "message": "moved"})
    moved["body"][0]["cond"]["right"] = value
    return spec_from_dict(doc)


def test_replay_against_mutated_guard_fails(maze_spec, maze):
    res = neatest_search(maze, small(max_generations=10))
    mutated_spec = mutate_level_guard(maze_spec)
    mutated = load_game(mutated_spec)
    assert mutated.digest == maze.digest
    # the portal guard inside the level-1 branch runs on any move at level 1
    guard = maze_spec.scripts[[sc.trigger.message for sc in maze_spec.scripts].index("moved")].body[0].body[0].id
    assert guard in res.suite.entries
    assert all(o.passed for o in replay_suite(res.suite, maze))
    failing = {o.target for o in replay_suite(res.suite, mutated) if not o.passed}
    assert guard in failing


def test_curriculum_seeds_population(maze):
    cfg = small(neat=NeatParams(population_size=8, weight_mutation_rate=0.0, add_connection_rate=0.0,
                                add_node_rate=0.0, crossover_rate=0.0))
    logs = []
    res = neatest_search(maze, cfg, on_generation=logs.append)
    found = sorted({e.generation for e in res.suite.entries.values()})
    assert found
    # after the first success the next attempt starts from clones of the suite agent
    g0 = found[0]
    nxt = [log for log in logs if log.generation == g0 + 1]
    if nxt:
        assert nxt[0].local_generation == 0
        assert min(r.genome_id for r in nxt[0].records) > max(r.genome_id for r in logs[0].records)


def test_budget_counts_generations(maze):
    res = neatest_search(maze, small(max_generations=2))
    assert res.generations == 2
    assert dataclasses.asdict(res.timeline.points[-1])["generation"] == 1
