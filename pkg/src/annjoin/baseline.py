"""R-tree ANN baseline under the same block/IO cost model.

The tree is bulk loaded with sort-tile-recursive packing, stored one node
per block in the shared block-file framing, and queried with best-first
traversal ordered by minimum MBR distance.  Answers are exact; node reads
are counted through the same buffer machinery as the Voronoi path, so IO
comparisons between the two engines are apples to apples.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Iterable, Sequence

from .errors import IoFailure, NonFiniteCoordinate, RecordTooLarge
from .geom import PointRecord
from .ann import AnnResult, SideTotals
from .nnsearch import NnAnswer, SearchStats
from .sfc import hilbert_argsort
from .store import (
    _check_block_size,
    _DIR_ENTRY,
    _HEADER,
    BlockFile,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_CACHE_BLOCKS,
    MAGIC_RTREE,
)

_NODE_FIXED = struct.Struct("<BH")  # kind (0 leaf, 1 internal), entry count
_LEAF_ENTRY = struct.Struct("<Idd")  # point_id, x, y
_INT_ENTRY = struct.Struct("<Idddd")  # child_id, minx, miny, maxx, maxy

_KIND_LEAF = 0
_KIND_INTERNAL = 1


def leaf_fanout(block_size: int) -> int:
    return (block_size - _NODE_FIXED.size) // _LEAF_ENTRY.size


def internal_fanout(block_size: int) -> int:
    return (block_size - _NODE_FIXED.size) // _INT_ENTRY.size


@dataclass(frozen=True)
class RTreeNode:
    """One decoded node.

    Leaf entries are (point_id, x, y); internal entries are
    (child_id, minx, miny, maxx, maxy).
    """

    node_id: int
    is_leaf: bool
    entries: tuple


@dataclass(frozen=True)
class RTreeIndex:
    """Packed R-tree: nodes indexed by id, root at id 0."""

    block_size: int
    nodes: tuple[RTreeNode, ...]
    mbrs: tuple[tuple[float, float, float, float], ...]  # per node, for audits
    height: int

    @property
    def root(self) -> RTreeNode:
        return self.nodes[0]


def _min_fill_groups(groups: list[list], fanout: int) -> list[list]:
    """Repair undersized tail groups so every group has >= fanout // 2.

    STR chunking can leave one short group per slice; merging or evenly
    redistributing with the preceding group restores the fill invariant
    (a lone group stays as the future root and is exempt).
    """
    min_fill = fanout // 2
    i = 1
    while i < len(groups):
        if len(groups[i]) < min_fill:
            merged = groups[i - 1] + groups[i]
            if len(merged) >= 2 * min_fill:
                groups[i - 1] = merged[: len(merged) - min_fill]
                groups[i] = merged[len(merged) - min_fill :]
            else:
                groups[i - 1 : i + 1] = [merged]
                continue
        i += 1
    return groups


def _str_pack(items: list, fanout: int, key_x, key_y) -> list[list]:
    """Sort-tile-recursive grouping of one level into parent groups."""
    n = len(items)
    if n <= fanout:
        return [list(items)]
    group_count = -(-n // fanout)
    slice_count = math.isqrt(group_count)
    if slice_count * slice_count < group_count:
        slice_count += 1
    per_slice = -(-n // slice_count)
    by_x = sorted(items, key=key_x)
    groups: list[list] = []
    for s in range(0, n, per_slice):
        chunk = sorted(by_x[s : s + per_slice], key=key_y)
        local = [chunk[i : i + fanout] for i in range(0, len(chunk), fanout)]
        groups.extend(_min_fill_groups(local, fanout))
    return _min_fill_groups(groups, fanout)


def build_rtree(
    points: Iterable[PointRecord], block_size: int = DEFAULT_BLOCK_SIZE
) -> RTreeIndex:
    """Bulk-load a packed R-tree over one or more points.

    Nodes are sized to the block: fanout is the maximum entry count that
    fits the payload.  Ids are assigned root-first in breadth-first
    order, so the root is always node 0.
    """
    _check_block_size(block_size)
    pts = list(points)
    if not pts:
        raise ValueError("cannot build an R-tree over zero points")
    for p in pts:
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            raise NonFiniteCoordinate(f"point {p.id} has non-finite coordinates")
    f_leaf = leaf_fanout(block_size)
    f_int = internal_fanout(block_size)
    if f_leaf < 1 or (len(pts) > f_leaf and f_int < 2):
        raise RecordTooLarge(
            f"block size {block_size} is too small for R-tree nodes over {len(pts)} points"
        )

    # temp nodes: (is_leaf, entries, mbr, child_temp_ids)
    temp: list[tuple[bool, list, tuple, list[int]]] = []
    level: list[int] = []
    for group in _str_pack(
        pts, f_leaf, key_x=lambda p: (p.x, p.y, p.id), key_y=lambda p: (p.y, p.x, p.id)
    ):
        mbr = (
            min(p.x for p in group),
            min(p.y for p in group),
            max(p.x for p in group),
            max(p.y for p in group),
        )
        temp.append((True, [(p.id, p.x, p.y) for p in group], mbr, []))
        level.append(len(temp) - 1)

    while len(level) > 1:
        def center(t):
            mbr = temp[t][2]
            return ((mbr[0] + mbr[2]) / 2.0, (mbr[1] + mbr[3]) / 2.0)

        parents: list[int] = []
        for group in _str_pack(
            level,
            f_int,
            key_x=lambda t: (*center(t), t),
            key_y=lambda t: (*center(t)[::-1], t),
        ):
            mbr = (
                min(temp[t][2][0] for t in group),
                min(temp[t][2][1] for t in group),
                max(temp[t][2][2] for t in group),
                max(temp[t][2][3] for t in group),
            )
            temp.append((False, [], mbr, list(group)))
            parents.append(len(temp) - 1)
        level = parents

    # breadth-first relabel from the root
    root_temp = level[0]
    order = [root_temp]
    final_id = {root_temp: 0}
    i = 0
    while i < len(order):
        for child in temp[order[i]][3]:
            final_id[child] = len(order)
            order.append(child)
        i += 1

    nodes = []
    mbrs = []
    for t in order:
        is_leaf, leaf_entries, mbr, children = temp[t]
        nid = final_id[t]
        if is_leaf:
            entries = tuple(leaf_entries)
        else:
            entries = tuple((final_id[c], *temp[c][2]) for c in children)
        nodes.append(RTreeNode(node_id=nid, is_leaf=is_leaf, entries=entries))
        mbrs.append(mbr)

    height = 1
    node = nodes[0]
    while not node.is_leaf:
        node = nodes[node.entries[0][0]]
        height += 1
    return RTreeIndex(
        block_size=block_size, nodes=tuple(nodes), mbrs=tuple(mbrs), height=height
    )


def _encode_node(node: RTreeNode, block_size: int) -> bytes:
    kind = _KIND_LEAF if node.is_leaf else _KIND_INTERNAL
    out = bytearray(_NODE_FIXED.pack(kind, len(node.entries)))
    entry = _LEAF_ENTRY if node.is_leaf else _INT_ENTRY
    for e in node.entries:
        out += entry.pack(*e)
    if len(out) > block_size:
        raise RecordTooLarge(
            f"node {node.node_id} needs {len(out)} bytes, block is {block_size}"
        )
    return bytes(out)


def serialize_rtree(index: RTreeIndex) -> bytes:
    """`RTRIDX1` file image: same framing as the Voronoi store.

    Header (magic, u32 block_size, u32 node_count), a directory entry per
    node id, then one node per block at offset 0, zero padded.
    """
    bs = index.block_size
    out = bytearray(_HEADER.pack(MAGIC_RTREE, bs, len(index.nodes)))
    for node in index.nodes:
        out += _DIR_ENTRY.pack(node.node_id, 0)
    for node in index.nodes:
        payload = _encode_node(node, bs)
        out += payload
        out += b"\x00" * (bs - len(payload))
    return bytes(out)


def write_rtree(index: RTreeIndex, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(serialize_rtree(index))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


class RTreeStore(BlockFile):
    """IO-counting accessor over an `RTRIDX1` file; caches decoded nodes."""

    MAGIC = MAGIC_RTREE

    def _decode_block(self, raw: bytes, bno: int) -> RTreeNode:
        kind, count = _NODE_FIXED.unpack_from(raw, 0)
        is_leaf = kind == _KIND_LEAF
        entry = _LEAF_ENTRY if is_leaf else _INT_ENTRY
        entries = tuple(
            entry.unpack_from(raw, _NODE_FIXED.size + i * entry.size)
            for i in range(count)
        )
        return RTreeNode(node_id=bno, is_leaf=is_leaf, entries=entries)

    @property
    def node_count(self) -> int:
        return self.record_count

    def fetch_node(self, node_id: int) -> RTreeNode:
        bno, _off = self.directory[node_id]
        return self.load_block(bno)

    @property
    def root_id(self) -> int:
        return 0


def rtree_nn(store: RTreeStore, query) -> NnAnswer:
    """Exact best-first NN over the packed tree.

    The priority queue holds nodes keyed by minimum MBR distance and
    points keyed by exact distance; popping a point first proves no
    unexplored subtree can beat it.  One IO per node block miss.
    """
    qx = float(query[0])
    qy = float(query[1])
    io_before = store.io_count
    expansions = 0
    heap = [(0.0, 1, store.root_id)]
    while heap:
        dist, kind, ident = heappop(heap)
        if kind == 0:
            return NnAnswer(
                ident,
                dist,
                SearchStats(expansions, store.io_count - io_before, expansions),
            )
        node = store.fetch_node(ident)
        store.note_expansion()
        expansions += 1
        if node.is_leaf:
            for pid, x, y in node.entries:
                dx = x - qx
                dy = y - qy
                heappush(heap, (dx * dx + dy * dy, 0, pid))
        else:
            for child, minx, miny, maxx, maxy in node.entries:
                dx = minx - qx
                if dx < 0.0:
                    dx = qx - maxx
                    if dx < 0.0:
                        dx = 0.0
                dy = miny - qy
                if dy < 0.0:
                    dy = qy - maxy
                    if dy < 0.0:
                        dy = 0.0
                heappush(heap, (dx * dx + dy * dy, 1, child))
    raise IoFailure(f"{store.path}: tree traversal found no points")


def rtree_ann(
    store: RTreeStore, q_points: Sequence[PointRecord], order: str = "hilbert"
) -> AnnResult:
    """Per-query best-first NN with space-filling-curve query ordering.

    Sorting queries along a Hilbert curve keeps consecutive searches in
    the same subtrees so a small buffer absorbs most node reads; the
    answers do not depend on the order.  There is no query-side index,
    so q-side IO is zero by construction.
    """
    pts = sorted(q_points, key=lambda p: p.id)
    if order == "hilbert":
        idxs = hilbert_argsort([(p.x, p.y) for p in pts])
        pts = [pts[i] for i in idxs]
    elif order != "none":
        raise ValueError(f"unknown query order {order!r}")
    io0, exp0 = store.read_counters()
    pairs: dict[int, tuple[int, float]] = {}
    per_query: dict[int, SearchStats] = {}
    for p in pts:
        answer = rtree_nn(store, (p.x, p.y))
        pairs[p.id] = (answer.nn_id, answer.sq_dist)
        per_query[p.id] = answer.stats
    io1, exp1 = store.read_counters()
    return AnnResult(
        pairs=pairs,
        visit_order=tuple(p.id for p in pts),
        per_query=per_query,
        p_side=SideTotals(ios=io1 - io0, expansions=exp1 - exp0),
        q_side=SideTotals(ios=0, expansions=0),
    )
