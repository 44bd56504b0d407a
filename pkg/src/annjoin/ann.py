"""All-nearest-neighbour join of a query set against a data set.

The query set's own Delaunay graph is traversed depth first; each query's
NN search over the data set starts from the previously found neighbour.
Consecutive queries are Voronoi neighbours of each other, so their data
neighbours are close and each walk accepts after a few steps.  Query-side
record reads go through the query store and are counted separately from
data-side IOs; the headline comparison metric is their sum.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import EmptyQuery, ExhaustedGraph
from .geom import PointRecord
from .nnsearch import NnAnswer, SearchStats, nn_search, nn_search_bestfirst
from .store import BlockStore


@dataclass(frozen=True)
class SideTotals:
    """Aggregated store counters for one side of a join."""

    ios: int
    expansions: int


@dataclass(frozen=True)
class AnnResult:
    """Join output: one (nn_id, sq_dist) pair per query id, plus totals."""

    pairs: dict[int, tuple[int, float]]
    visit_order: tuple[int, ...]
    per_query: dict[int, SearchStats]
    p_side: SideTotals
    q_side: SideTotals

    @property
    def ios_total(self) -> int:
        return self.p_side.ios + self.q_side.ios

    def steps_sum(self, skip_first: bool = False) -> int:
        order = self.visit_order[1:] if skip_first else self.visit_order
        return sum(self.per_query[q].steps_to_answer for q in order)


SearchFn = Callable[[BlockStore, tuple[float, float], int], NnAnswer]


def _traverse(
    q_store: BlockStore,
    p_store: BlockStore,
    rng_seed: int,
    seeded: bool,
    search: SearchFn,
) -> AnnResult:
    nq = q_store.point_count
    if nq == 0:
        raise EmptyQuery("query store holds no points")
    np_count = p_store.point_count
    rng = random.Random(rng_seed)
    q_first = rng.randrange(nq)
    p_first = rng.randrange(np_count)

    q_io0, q_exp0 = q_store.read_counters()
    p_io0, p_exp0 = p_store.read_counters()

    qxs = q_store.xs
    qys = q_store.ys
    pxs = p_store.xs
    pys = p_store.ys

    pairs: dict[int, tuple[int, float]] = {}
    per_query: dict[int, SearchStats] = {}
    order: list[int] = []
    stack = [q_first]
    visited = set()
    last_nn = -1
    while stack:
        q = stack.pop()
        if q in visited:
            continue
        if last_nn < 0:
            start = p_first
        elif seeded:
            start = last_nn
        else:
            start = rng.randrange(np_count)
        answer = search(p_store, (qxs[q], qys[q]), start)
        pairs[q] = (answer.nn_id, answer.sq_dist)
        per_query[q] = answer.stats
        order.append(q)
        visited.add(q)
        last_nn = answer.nn_id

        rec = q_store.fetch_record(q)
        q_store.note_expansion()
        ax = pxs[answer.nn_id]
        ay = pys[answer.nn_id]
        candidates = []
        for u in rec.neighbour_ids:
            if u not in visited:
                ux = qxs[u] - ax
                uy = qys[u] - ay
                candidates.append((ux * ux + uy * uy, u))
        candidates.sort(reverse=True)  # closest to the found neighbour on top
        stack.extend(u for _, u in candidates)

    if len(pairs) != nq:
        raise ExhaustedGraph(
            f"query traversal covered {len(pairs)} of {nq} points; index corrupt"
        )
    q_io1, q_exp1 = q_store.read_counters()
    p_io1, p_exp1 = p_store.read_counters()
    return AnnResult(
        pairs=pairs,
        visit_order=tuple(order),
        per_query=per_query,
        p_side=SideTotals(ios=p_io1 - p_io0, expansions=p_exp1 - p_exp0),
        q_side=SideTotals(ios=q_io1 - q_io0, expansions=q_exp1 - q_exp0),
    )


def ann_join(
    q_store: BlockStore,
    p_store: BlockStore,
    rng_seed: int,
    search: SearchFn = nn_search,
) -> AnnResult:
    """Exact ANN join with locality-seeded searches.

    The first query and the very first search start are drawn from a
    Mersenne-Twister generator (``random.Random``) seeded with
    ``rng_seed``; every later search starts from the most recently found
    neighbour.  Output pairs are independent of the seed; statistics are
    not.  ``search`` selects the walk variant (stack or best-first).
    """
    return _traverse(q_store, p_store, rng_seed, seeded=True, search=search)


def ann_join_unseeded(
    q_store: BlockStore,
    p_store: BlockStore,
    rng_seed: int,
    search: SearchFn = nn_search,
) -> AnnResult:
    """Control variant: every search starts from a fresh random data point.

    Identical pairs to :func:`ann_join`; only the statistics differ.
    """
    return _traverse(q_store, p_store, rng_seed, seeded=False, search=search)


def ann_join_bestfirst(
    q_store: BlockStore, p_store: BlockStore, rng_seed: int
) -> AnnResult:
    """Seeded join using the best-first walk variant."""
    return _traverse(q_store, p_store, rng_seed, seeded=True, search=nn_search_bestfirst)


def brute_force_ann(
    q_points: Iterable[PointRecord], p_points: Iterable[PointRecord]
) -> AnnResult:
    """Exhaustive oracle: exact minimum over the data set for every query.

    Distance ties resolve to the lowest data point id.  No IO accounting.
    """
    q = sorted(q_points, key=lambda p: p.id)
    p = sorted(p_points, key=lambda p: p.id)
    if not q:
        raise EmptyQuery("empty query set")
    if not p:
        raise ValueError("empty data set")
    p_ids = [pt.id for pt in p]
    pxs = np.array([pt.x for pt in p], dtype=np.float64)
    pys = np.array([pt.y for pt in p], dtype=np.float64)
    pairs: dict[int, tuple[int, float]] = {}
    chunk = max(1, 4_000_000 // len(p))
    for i in range(0, len(q), chunk):
        sub = q[i : i + chunk]
        qx = np.array([pt.x for pt in sub], dtype=np.float64)[:, None]
        qy = np.array([pt.y for pt in sub], dtype=np.float64)[:, None]
        dx = pxs[None, :] - qx
        dy = pys[None, :] - qy
        d = dx * dx + dy * dy
        best = np.argmin(d, axis=1)  # first occurrence = lowest id
        for row, pt in enumerate(sub):
            j = int(best[row])
            pairs[pt.id] = (p_ids[j], float(d[row, j]))
    zero = SideTotals(ios=0, expansions=0)
    return AnnResult(
        pairs=pairs,
        visit_order=tuple(pt.id for pt in q),
        per_query={},
        p_side=zero,
        q_side=zero,
    )


def oracle_mismatches(
    pairs: dict[int, tuple[int, float]],
    q_points: Sequence[PointRecord],
    p_points: Sequence[PointRecord],
) -> list[int]:
    """Query ids whose pair disagrees with the exhaustive oracle.

    A pair matches when its squared distance equals the oracle's exactly
    (bitwise) and its nn_id attains that distance; missing or extra query
    ids are mismatches as well.
    """
    oracle = brute_force_ann(q_points, p_points)
    coords = {pt.id: (pt.x, pt.y) for pt in p_points}
    bad = []
    for qp in q_points:
        got = pairs.get(qp.id)
        if got is None:
            bad.append(qp.id)
            continue
        nn_id, sq = got
        want = oracle.pairs[qp.id][1]
        if sq != want or nn_id not in coords:
            bad.append(qp.id)
            continue
        px, py = coords[nn_id]
        dx = px - qp.x
        dy = py - qp.y
        if dx * dx + dy * dy != sq:
            bad.append(qp.id)
    extra = set(pairs) - {qp.id for qp in q_points}
    bad.extend(sorted(extra))
    return bad
