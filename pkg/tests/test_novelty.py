import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noveltest.novelty import (
    BehaviorArchive,
    NoveltyParams,
    behavior_distance,
    generation_novelty,
    novelty_score,
    pairwise_distances,
    update_archive,
)


def brute_novelty(b, neighbours, k):
    """Mean of the k smallest cosine distances, by explicit angle arithmetic."""
    ds = []
    for n in neighbours:
        na, nb = math.sqrt(sum(x * x for x in b)), math.sqrt(sum(x * x for x in n))
        if na == 0 or nb == 0:
            ds.append(0.5)
            continue
        c = max(-1.0, min(1.0, sum(x * y for x, y in zip(b, n)) / (na * nb)))
        ds.append((1.0 - c) / 2.0)
    ds.sort()
    near = ds[:k]
    return math.fsum(near) / len(near) if near else 1.0


def test_novelty_example():
    got = novelty_score((1, 1), [(1, 0), (0, 1), (0, 0)], NoveltyParams(k=2))
    assert got == pytest.approx((1 - 1 / math.sqrt(2)) / 2, abs=1e-12)
    assert got == pytest.approx(0.14645, abs=1e-5)


def test_distance_fixed_points():
    assert behavior_distance((0.3, 0.7, 0.1), (0.3, 0.7, 0.1)) == 0.0
    assert behavior_distance((1, 2), (2, 4)) == 0.0
    assert behavior_distance((1, 0), (0, 1)) == 0.5
    assert behavior_distance((1, 0), (-1, 0)) == 1.0
    assert behavior_distance((0, 0), (1, 0)) == 0.5


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        behavior_distance((1, 0), (1, 0, 0))


def test_empty_neighbourhood():
    assert novelty_score((1, 0), [], NoveltyParams()) == 1.0
    assert generation_novelty([(1.0, 0.0)], [], NoveltyParams()) == [1.0]


def test_fewer_neighbours_than_k_uses_all():
    got = novelty_score((1, 0), [(0, 1), (-1, 0)], NoveltyParams(k=15))
    assert got == pytest.approx(0.75)


def test_params_validated():
    with pytest.raises(ValueError):
        NoveltyParams(k=0)
    with pytest.raises(ValueError):
        NoveltyParams(archive_probability=1.5)


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3)


@given(a=vec, b=vec, s=st.floats(0.01, 100))
def test_distance_symmetry_range_and_scale(a, b, s):
    d = behavior_distance(a, b)
    assert 0.0 <= d <= 1.0
    assert d == pytest.approx(behavior_distance(b, a), abs=1e-12)
    assert d == pytest.approx(behavior_distance([s * x for x in a], b), abs=1e-9)


@given(seed=st.integers(0, 2**32 - 1), k=st.sampled_from([1, 5, 15]))
def test_generation_novelty_matches_per_behaviour(seed, k):
    r = np.random.default_rng(seed)
    gen = r.random((int(r.integers(1, 20)), 4)).tolist()
    arch = r.random((int(r.integers(0, 20)), 4)).tolist()
    params = NoveltyParams(k=k)
    fast = generation_novelty(gen, arch, params)
    for i, b in enumerate(gen):
        others = gen[:i] + gen[i + 1:] + arch
        assert fast[i] == pytest.approx(brute_novelty(b, others, k), abs=1e-12)
        assert novelty_score(b, others, params) == pytest.approx(brute_novelty(b, others, k), abs=1e-12)


def test_pairwise_matches_scalar():
    r = np.random.default_rng(1)
    a, b = r.normal(size=(5, 3)), r.normal(size=(4, 3))
    a[0] = 0.0
    d = pairwise_distances(a, b)
    for i in range(5):
        for j in range(4):
            assert d[i, j] == pytest.approx(behavior_distance(a[i], b[j]), abs=1e-12)


def test_archive_insertion_rate_and_stream():
    params = NoveltyParams(archive_probability=0.1)
    arch = BehaviorArchive.seeded(7)
    for i in range(5000):
        update_archive(arch, (float(i), 1.0), params)
    assert 400 <= len(arch) <= 600
    # one draw per call: the same stream reproduces the same insertions
    twin = BehaviorArchive.seeded(7)
    draws = twin.rng.random(5000)
    assert [e[0] for e in arch.entries] == [float(i) for i in np.flatnonzero(draws < 0.1)]


def test_archive_bounds():
    never = BehaviorArchive.seeded(0)
    always = BehaviorArchive.seeded(0)
    for i in range(50):
        update_archive(never, (1.0,), NoveltyParams(archive_probability=0.0))
        update_archive(always, (float(i),), NoveltyParams(archive_probability=1.0))
    assert len(never) == 0
    assert len(always) == 50


def test_archive_dimension_checked():
    arch = BehaviorArchive.seeded(0)
    update_archive(arch, (1.0, 2.0), NoveltyParams(archive_probability=1.0))
    with pytest.raises(ValueError):
        update_archive(arch, (1.0,), NoveltyParams(archive_probability=1.0))


def test_archive_csv(tmp_path):
    arch = BehaviorArchive.seeded(0)
    update_archive(arch, (0.25, 0.5), NoveltyParams(archive_probability=1.0))
    path = tmp_path / "a.csv"
    arch.dump_csv(path)
    assert path.read_bytes() == b"0.25,0.5\r\n"
