"""Block file format, first-fit packing, LRU buffering, IO counters."""

import hashlib
import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annjoin.errors import IoFailure, RecordTooLarge, UnknownPoint
from annjoin.geom import DelaunayIndex, PointRecord, build_delaunay
from annjoin.nnsearch import nn_search
from annjoin.store import (
    BlockStore,
    MAGIC_VORONOI,
    pack_first_fit,
    read_index,
    record_size,
    serialize_index,
    write_index,
)

from oracles import pts_uniform


def triangle_index():
    return build_delaunay(
        [PointRecord(0, 0.0, 0.0), PointRecord(1, 4.0, 0.0), PointRecord(2, 0.0, 4.0)]
    )


def synthetic_index(adjacency, coords=None):
    pts = tuple(
        PointRecord(i, *(coords[i] if coords else (float(i), float(i * i) + 1.0)))
        for i in sorted(adjacency)
    )
    return DelaunayIndex(points=pts, adjacency=adjacency, triangles=())


# -- serialization -----------------------------------------------------------


def test_record_size_formula():
    assert record_size(0) == 22
    assert record_size(2) == 30
    assert record_size(300) == 22 + 1200


def test_triangle_file_layout(tmp_path):
    # Degree-2 records are 30 bytes; three of them pack into one block.
    index = triangle_index()
    image = serialize_index(index, block_size=1024)
    magic, block_size, count = struct.unpack_from("<8sII", image, 0)
    assert magic == MAGIC_VORONOI
    assert (block_size, count) == (1024, 3)
    directory = [struct.unpack_from("<IH", image, 16 + 6 * i) for i in range(3)]
    assert directory == [(0, 0), (0, 30), (0, 60)]
    assert len(image) == 16 + 6 * 3 + 1024  # header + directory + one block
    # decode it back and compare
    path = tmp_path / "tri.vor"
    path.write_bytes(image)
    again = read_index(path)
    assert again.adjacency == index.adjacency
    assert again.points == index.points


def test_roundtrip_bit_exact(tmp_path):
    pts = pts_uniform(137, random.Random(4))
    index = build_delaunay(pts)
    path = tmp_path / "pts.vor"
    write_index(index, path, block_size=256)
    image = path.read_bytes()
    again = read_index(path)
    assert again.points == index.points
    assert again.adjacency == index.adjacency
    # re-serializing what was read reproduces the file bit for bit
    assert hashlib.sha256(serialize_index(again, block_size=256)).hexdigest() == (
        hashlib.sha256(image).hexdigest()
    )


def test_record_too_large():
    index = synthetic_index({0: tuple(range(1, 301)), **{i: (0,) for i in range(1, 301)}})
    with pytest.raises(RecordTooLarge):
        serialize_index(index, block_size=256)


def test_block_size_bounds():
    index = triangle_index()
    with pytest.raises(ValueError):
        serialize_index(index, block_size=32)
    with pytest.raises(ValueError):
        serialize_index(index, block_size=1 << 17)


def test_sparse_ids_rejected():
    index = DelaunayIndex(
        points=(PointRecord(0, 0.0, 0.0), PointRecord(2, 1.0, 1.0)),
        adjacency={0: (2,), 2: (0,)},
        triangles=(),
    )
    with pytest.raises(ValueError):
        serialize_index(index, block_size=1024)


def test_first_fit_backfills():
    # record 1 opens a new block, record 2 back-fills block 0
    placements, blocks = pack_first_fit([26, 58, 30], block_size=64)
    assert placements == [(0, 0), (1, 0), (0, 26)]
    assert blocks == 2


def test_first_fit_never_spans_blocks():
    rng = random.Random(8)
    sizes = [22 + 4 * rng.randrange(12) for _ in range(200)]
    placements, blocks = pack_first_fit(sizes, block_size=128)
    used = [[False] * 128 for _ in range(blocks)]
    for size, (b, off) in zip(sizes, placements):
        assert off + size <= 128
        for k in range(off, off + size):
            assert not used[b][k]
            used[b][k] = True


# -- store access ------------------------------------------------------------


def test_cold_fetches_single_block(tmp_path):
    write_index(triangle_index(), tmp_path / "t.vor")
    with BlockStore(tmp_path / "t.vor", cache_blocks=64) as store:
        for pid in (0, 1, 2):
            store.fetch_record(pid)
        assert store.io_count == 1


def test_capacity_zero_counts_every_fetch(tmp_path):
    write_index(triangle_index(), tmp_path / "t.vor")
    with BlockStore(tmp_path / "t.vor", cache_blocks=0) as store:
        for pid in (0, 1, 2, 0, 1, 2):
            store.fetch_record(pid)
        assert store.io_count == 6


def test_unknown_point(tmp_path):
    write_index(triangle_index(), tmp_path / "t.vor")
    with BlockStore(tmp_path / "t.vor") as store:
        with pytest.raises(UnknownPoint):
            store.fetch_record(3)
        with pytest.raises(UnknownPoint):
            store.fetch_record(-1)


def test_record_contents(tmp_path):
    pts = pts_uniform(60, random.Random(12))
    index = build_delaunay(pts)
    write_index(index, tmp_path / "p.vor")
    with BlockStore(tmp_path / "p.vor") as store:
        assert store.point_count == 60
        for p in pts:
            rec = store.fetch_record(p.id)
            assert (rec.point_id, rec.x, rec.y) == (p.id, p.x, p.y)
            assert rec.neighbour_ids == index.adjacency[p.id]
            assert store.coords(p.id) == (p.x, p.y)


def test_lru_eviction_and_recency(tmp_path):
    # K5 gives 38-byte records, one per 64-byte block; capacity 2: a hit
    # must refresh recency.
    index = synthetic_index(
        {i: tuple(j for j in range(5) if j != i) for i in range(5)}
    )
    write_index(index, tmp_path / "s.vor", block_size=64)
    with BlockStore(tmp_path / "s.vor", cache_blocks=2) as store:
        assert [store.directory[i][0] for i in range(5)] == [0, 1, 2, 3, 4]
        store.fetch_record(0)  # miss -> [0]
        store.fetch_record(1)  # miss -> [0, 1]
        store.fetch_record(0)  # hit  -> [1, 0]
        assert store.io_count == 2
        store.fetch_record(2)  # miss, evicts 1 -> [0, 2]
        assert store.io_count == 3
        store.fetch_record(0)  # hit -> [2, 0]
        assert store.io_count == 3
        store.fetch_record(1)  # miss again (was evicted)
        assert store.io_count == 4


def test_capacity_at_least_blocks_counts_distinct(tmp_path):
    pts = pts_uniform(80, random.Random(13))
    write_index(build_delaunay(pts), tmp_path / "p.vor", block_size=128)
    rng = random.Random(5)
    with BlockStore(tmp_path / "p.vor", cache_blocks=10_000) as store:
        touched = set()
        for _ in range(500):
            pid = rng.randrange(80)
            store.fetch_record(pid)
            touched.add(store.directory[pid][0])
        assert store.io_count == len(touched)


def test_counters_reset_and_cross_check(tmp_path):
    pts = pts_uniform(120, random.Random(14))
    write_index(build_delaunay(pts), tmp_path / "p.vor")
    rng = random.Random(6)
    with BlockStore(tmp_path / "p.vor", cache_blocks=4) as store:
        store.reset_counters()
        assert store.read_counters() == (0, 0)
        ios_sum = 0
        exp_sum = 0
        for _ in range(25):
            answer = nn_search(store, (rng.random(), rng.random()), rng.randrange(120))
            ios_sum += answer.stats.ios
            exp_sum += answer.stats.expansions
        assert store.read_counters() == (ios_sum, exp_sum)
        store.reset_counters()
        assert store.read_counters() == (0, 0)


def test_bad_magic_and_truncation(tmp_path):
    path = tmp_path / "bad.vor"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
    with pytest.raises(IoFailure):
        BlockStore(path)
    write_index(triangle_index(), path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 700])
    with pytest.raises(IoFailure):
        with BlockStore(path) as store:
            store.fetch_record(0)


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_roundtrip_random_indexes(seed):
    rng = random.Random(seed)
    pts = pts_uniform(3 + rng.randrange(40), rng)
    index = build_delaunay(pts)
    block_size = rng.choice([64, 128, 256, 1024])
    try:
        image = serialize_index(index, block_size=block_size)
    except RecordTooLarge:
        assert max(len(v) for v in index.adjacency.values()) > (block_size - 22) // 4
        return
    magic, bs, count = struct.unpack_from("<8sII", image, 0)
    assert (magic, bs, count) == (MAGIC_VORONOI, block_size, len(pts))
    assert serialize_index(index, block_size=block_size) == image
