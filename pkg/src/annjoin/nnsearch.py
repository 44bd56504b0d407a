"""Nearest-neighbour search by walking the Delaunay graph.

The walk keeps a stack of candidate vertices.  Expanding a vertex reads
its neighbour record (one counted IO on buffer miss) and tests whether it
is no farther from the query than every one of its Voronoi neighbours.
By the local-minimum property of Delaunay graphs that test accepts
exactly the global nearest neighbour, wherever the walk starts.
Unvisited neighbours are pushed in order of decreasing distance to the
query, so the most promising vertex is expanded next.

Because pushes are ordered before the neighbours' own records are read,
neighbour coordinates come from the in-memory coordinate table loaded at
store-open time; only adjacency reads are IO-charged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappop, heappush

from .errors import ExhaustedGraph, UnknownStart
from .store import BlockStore


@dataclass(frozen=True)
class SearchStats:
    """Work done by one search: record reads, charged IOs, accept step."""

    expansions: int
    ios: int
    steps_to_answer: int


@dataclass(frozen=True)
class NnAnswer:
    """The nearest data point to a query, with its search statistics."""

    nn_id: int
    sq_dist: float
    stats: SearchStats


def _check_query(store: BlockStore, query, start_id: int):
    qx = float(query[0])
    qy = float(query[1])
    if not (math.isfinite(qx) and math.isfinite(qy)):
        raise ValueError(f"query coordinates must be finite, got {query!r}")
    if not 0 <= start_id < store.point_count:
        raise UnknownStart(f"start id {start_id} not in dataset")
    return qx, qy


def nn_search(store: BlockStore, query, start_id: int) -> NnAnswer:
    """Depth-first distance-ordered walk from ``start_id`` to the NN.

    Ties in push order are broken by ascending point id (the lower id is
    expanded first); acceptance is non-strict, so the currently expanded
    vertex wins an exact distance tie with its neighbour.
    """
    qx, qy = _check_query(store, query, start_id)
    xs = store.xs
    ys = store.ys
    io_before = store.io_count
    stack = [start_id]
    visited = set()
    expansions = 0
    while stack:
        v = stack.pop()
        if v in visited:
            continue
        rec = store.fetch_record(v)
        store.note_expansion()
        expansions += 1
        dx = xs[v] - qx
        dy = ys[v] - qy
        dv = dx * dx + dy * dy
        local_min = True
        candidates = []
        for u in rec.neighbour_ids:
            ux = xs[u] - qx
            uy = ys[u] - qy
            du = ux * ux + uy * uy
            if du < dv:
                local_min = False
            if u not in visited:
                candidates.append((du, u))
        if local_min:
            return NnAnswer(
                v, dv, SearchStats(expansions, store.io_count - io_before, expansions)
            )
        visited.add(v)
        candidates.sort(reverse=True)  # nearest neighbour of v ends up on top
        stack.extend(u for _, u in candidates)
    raise ExhaustedGraph(
        "stack emptied before acceptance; the index is corrupt or disconnected"
    )


def nn_search_bestfirst(store: BlockStore, query, start_id: int) -> NnAnswer:
    """Best-first variant: expand the globally nearest discovered vertex.

    The frontier is a min-priority queue keyed by distance to the query
    (the per-step block cost is constant, so the ordering ignores it).
    Returns the same answer as :func:`nn_search`, usually with fewer
    expansions; only the statistics may differ.
    """
    qx, qy = _check_query(store, query, start_id)
    xs = store.xs
    ys = store.ys
    io_before = store.io_count
    sx = xs[start_id] - qx
    sy = ys[start_id] - qy
    frontier = [(sx * sx + sy * sy, start_id)]
    visited = set()
    expansions = 0
    while frontier:
        dv, v = heappop(frontier)
        if v in visited:
            continue
        rec = store.fetch_record(v)
        store.note_expansion()
        expansions += 1
        local_min = True
        for u in rec.neighbour_ids:
            ux = xs[u] - qx
            uy = ys[u] - qy
            du = ux * ux + uy * uy
            if du < dv:
                local_min = False
            if u not in visited:
                heappush(frontier, (du, u))
        if local_min:
            return NnAnswer(
                v, dv, SearchStats(expansions, store.io_count - io_before, expansions)
            )
        visited.add(v)
    raise ExhaustedGraph(
        "frontier emptied before acceptance; the index is corrupt or disconnected"
    )
