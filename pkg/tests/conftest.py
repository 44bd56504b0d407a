import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from annjoin.geom import PointRecord, build_neighbour_graph
from annjoin.store import BlockStore, write_index

TRIANGLE = (PointRecord(0, 0.0, 0.0), PointRecord(1, 4.0, 0.0), PointRecord(2, 0.0, 4.0))


@pytest.fixture
def triangle_points():
    return list(TRIANGLE)


@pytest.fixture
def make_store(tmp_path):
    """Build a Voronoi store over a point list; returns opened BlockStore."""
    opened = []

    def _make(points, cache_blocks=64, block_size=1024, name="pts.vor"):
        path = tmp_path / name
        if not path.exists():
            write_index(build_neighbour_graph(points), path, block_size=block_size)
        store = BlockStore(path, cache_blocks=cache_blocks)
        opened.append(store)
        return store

    yield _make
    for store in opened:
        store.close()
