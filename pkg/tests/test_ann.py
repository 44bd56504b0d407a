"""ANN join: oracle equivalence, traversal coverage, stats, determinism."""

import random

import pytest

from annjoin.ann import (
    ann_join,
    ann_join_bestfirst,
    ann_join_unseeded,
    brute_force_ann,
    oracle_mismatches,
)
from annjoin.errors import EmptyQuery, ExhaustedGraph
from annjoin.geom import DelaunayIndex, PointRecord
from annjoin.store import BlockStore, serialize_index, write_index

from oracles import pts_family, pts_uniform

TRI = [PointRecord(0, 0.0, 0.0), PointRecord(1, 4.0, 0.0), PointRecord(2, 0.0, 4.0)]


def dists(pairs):
    return {q: sq for q, (_nn, sq) in pairs.items()}


# -- brute-force oracle --------------------------------------------------------


def test_oracle_single_query_near_origin():
    result = brute_force_ann([PointRecord(0, 0.1, 0.1)], TRI)
    nn_id, sq = result.pairs[0]
    assert nn_id == 0
    assert sq == 0.1 * 0.1 + 0.1 * 0.1


def test_oracle_singleton_data():
    result = brute_force_ann(pts_uniform(25, random.Random(0)), [PointRecord(0, 0.5, 0.5)])
    assert all(nn == 0 for nn, _ in result.pairs.values())


def test_oracle_tie_lowest_id():
    data = [PointRecord(0, 0.0, 0.0), PointRecord(1, 4.0, 0.0), PointRecord(2, 9.0, 9.0)]
    result = brute_force_ann([PointRecord(0, 2.0, 0.0)], data)
    assert result.pairs[0] == (0, 4.0)


# -- ann_join ------------------------------------------------------------------


def test_single_query_join(make_store):
    q_store = make_store([PointRecord(0, 0.1, 0.1)], name="q.vor")
    p_store = make_store(TRI, name="p.vor")
    result = ann_join(q_store, p_store, rng_seed=7)
    assert result.pairs == {0: (0, 0.1 * 0.1 + 0.1 * 0.1)}
    assert result.q_side.expansions == 1


def test_self_join_maps_to_self(make_store):
    pts = pts_uniform(150, random.Random(9))
    q_store = make_store(pts, name="q.vor")
    p_store = make_store(pts, name="p.vor")
    result = ann_join(q_store, p_store, rng_seed=0)
    for q, (nn, sq) in result.pairs.items():
        assert (nn, sq) == (q, 0.0)


@pytest.mark.parametrize("join", [ann_join, ann_join_unseeded, ann_join_bestfirst])
def test_join_matches_oracle_all_variants(join, make_store):
    rng = random.Random(11)
    Q = pts_family("clustered", 130, rng)
    P = pts_family("uniform", 170, rng)
    q_store = make_store(Q, name="q.vor")
    p_store = make_store(P, name="p.vor")
    result = join(q_store, p_store, rng_seed=3)
    assert not oracle_mismatches(result.pairs, Q, P)
    assert sorted(result.pairs) == [p.id for p in Q]  # exactly once each


def test_unseeded_identical_pairs(make_store):
    rng = random.Random(13)
    Q = pts_uniform(200, rng)
    P = pts_uniform(300, rng)
    q_store = make_store(Q, name="q.vor")
    p_store = make_store(P, name="p.vor")
    seeded = ann_join(q_store, p_store, rng_seed=5)
    q_store.reset_counters()
    p_store.reset_counters()
    unseeded = ann_join_unseeded(q_store, p_store, rng_seed=5)
    assert dists(seeded.pairs) == dists(unseeded.pairs)


def test_seed_independent_values(make_store):
    rng = random.Random(17)
    Q = pts_uniform(120, rng)
    P = pts_uniform(180, rng)
    q_store = make_store(Q, name="q.vor")
    p_store = make_store(P, name="p.vor")
    baseline = None
    for seed in (0, 1, 2, 99):
        result = ann_join(q_store, p_store, rng_seed=seed)
        if baseline is None:
            baseline = dists(result.pairs)
        else:
            assert dists(result.pairs) == baseline


def test_stats_additivity_and_io_split(make_store):
    rng = random.Random(19)
    Q = pts_uniform(160, rng)
    P = pts_uniform(220, rng)
    q_store = make_store(Q, cache_blocks=4, name="q.vor")
    p_store = make_store(P, cache_blocks=4, name="p.vor")
    result = ann_join(q_store, p_store, rng_seed=2)
    assert result.p_side.expansions == sum(s.expansions for s in result.per_query.values())
    assert result.p_side.ios == sum(s.ios for s in result.per_query.values())
    assert result.p_side.ios == p_store.read_counters()[0]
    assert result.q_side.ios == q_store.read_counters()[0]
    assert result.q_side.expansions == len(Q)
    assert result.ios_total == result.p_side.ios + result.q_side.ios


def test_deterministic_run(make_store):
    rng = random.Random(23)
    Q = pts_uniform(140, rng)
    P = pts_uniform(200, rng)
    first = ann_join(
        make_store(Q, name="q1.vor", cache_blocks=8),
        make_store(P, name="p1.vor", cache_blocks=8),
        rng_seed=42,
    )
    second = ann_join(
        make_store(Q, name="q2.vor", cache_blocks=8),
        make_store(P, name="p2.vor", cache_blocks=8),
        rng_seed=42,
    )
    assert first.pairs == second.pairs
    assert first.visit_order == second.visit_order
    assert first.per_query == second.per_query
    assert first.p_side == second.p_side and first.q_side == second.q_side


def test_single_query_unseeded_equals_seeded_shape(make_store):
    # with one query there is no previous neighbour to exploit, so both
    # variants run the same single search from the same random start
    Q = [PointRecord(0, 0.25, 0.75)]
    P = pts_uniform(90, random.Random(29))
    a = ann_join(
        make_store(Q, name="q1.vor"), make_store(P, name="p1.vor"), rng_seed=4
    )
    b = ann_join_unseeded(
        make_store(Q, name="q2.vor"), make_store(P, name="p2.vor"), rng_seed=4
    )
    assert a.pairs == b.pairs
    assert a.per_query == b.per_query


def test_empty_query_store(tmp_path, make_store):
    empty = DelaunayIndex(points=(), adjacency={}, triangles=())
    path = tmp_path / "empty.vor"
    path.write_bytes(serialize_index(empty, block_size=64))
    p_store = make_store(TRI, name="p.vor")
    with BlockStore(path) as q_store:
        with pytest.raises(EmptyQuery):
            ann_join(q_store, p_store, rng_seed=0)


def test_disconnected_query_graph_detected(tmp_path, make_store):
    # a corrupt index whose traversal cannot reach every query point
    pts = tuple(PointRecord(i, float(i % 2), float(i // 2)) for i in range(4))
    broken = DelaunayIndex(
        points=pts,
        adjacency={0: (1,), 1: (0,), 2: (3,), 3: (2,)},
        triangles=(),
    )
    path = tmp_path / "broken.vor"
    write_index(broken, path)
    p_store = make_store(TRI, name="p.vor")
    with BlockStore(path) as q_store:
        with pytest.raises(ExhaustedGraph):
            ann_join(q_store, p_store, rng_seed=1)


def test_moderate_uniform_instance_bitwise_oracle(make_store):
    rng = random.Random(31)
    Q = pts_uniform(1000, rng)
    P = pts_uniform(1000, rng)
    q_store = make_store(Q, name="q.vor")
    p_store = make_store(P, name="p.vor")
    oracle = brute_force_ann(Q, P)
    for join in (ann_join, ann_join_unseeded, ann_join_bestfirst):
        result = join(q_store, p_store, rng_seed=8)
        assert dists(result.pairs) == dists(oracle.pairs)
