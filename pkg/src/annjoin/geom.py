"""Planar point sets, exact predicates, and Delaunay-graph construction.

The Delaunay graph (equivalently, the Voronoi neighbour relation) is the
index structure every search in this package walks.  Construction uses
exact predicates throughout; exactly cocircular inputs such as grids are
resolved by a symbolic perturbation ordered by point id, so the output
adjacency is unique and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import _exact
from ._mesh import Mesh, MeshCorrupt
from .errors import (
    AnnJoinError,
    DegenerateInput,
    DuplicatePoints,
    IoFailure,
    NonFiniteCoordinate,
)
from .sfc import hilbert_argsort


@dataclass(frozen=True, slots=True)
class PointRecord:
    """One identified point of a dataset."""

    id: int
    x: float
    y: float


@dataclass(frozen=True)
class DelaunayIndex:
    """Delaunay graph of a point set.

    ``adjacency`` maps each point id to the sorted ids of its Voronoi
    neighbours.  ``triangles`` (id triples, CCW, kept for validation) is
    empty for degenerate inputs handled by :func:`build_neighbour_graph`.
    A built index is immutable and safe to share between threads.
    """

    points: tuple[PointRecord, ...]
    adjacency: dict[int, tuple[int, ...]]
    triangles: tuple[tuple[int, int, int], ...]

    @property
    def point_count(self) -> int:
        return len(self.points)


def squared_distance(p, q) -> float:
    """Squared Euclidean distance between two (x, y) pairs.

    All distance comparisons in this package use squared distances; the
    square root is never needed.
    """
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return dx * dx + dy * dy


def orientation(a: PointRecord, b: PointRecord, c: PointRecord) -> int:
    """Exact orientation sign: +1 if (a, b, c) turn counter-clockwise."""
    return _exact.orient2d(a.x, a.y, b.x, b.y, c.x, c.y)


def in_circle(a: PointRecord, b: PointRecord, c: PointRecord, d: PointRecord) -> int:
    """Exact in-circle sign for CCW triangle (a, b, c).

    +1 iff d lies strictly inside the circumcircle of (a, b, c), 0 iff
    the four points are cocircular, -1 iff strictly outside.  Callers are
    responsible for the CCW precondition.
    """
    return _exact.incircle(a.x, a.y, b.x, b.y, c.x, c.y, d.x, d.y)


def _validate_points(points: Sequence[PointRecord]) -> None:
    seen_ids = set()
    seen_xy = {}
    for p in points:
        if not (isinstance(p.id, int) and p.id >= 0):
            raise AnnJoinError(f"point id must be a non-negative integer: {p.id!r}")
        if p.id in seen_ids:
            raise AnnJoinError(f"duplicate point id {p.id}")
        seen_ids.add(p.id)
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            raise NonFiniteCoordinate(f"point {p.id} has non-finite coordinates")
        key = (p.x, p.y)
        if key in seen_xy:
            raise DuplicatePoints(
                f"points {seen_xy[key]} and {p.id} share coordinates {key}"
            )
        seen_xy[key] = p.id


def _collinear_all(xs, ys) -> bool:
    x0, y0, x1, y1 = xs[0], ys[0], xs[1], ys[1]
    for j in range(2, len(xs)):
        if _exact.orient2d(x0, y0, x1, y1, xs[j], ys[j]) != 0:
            return False
    return True


def _mesh_incremental(xs, ys, pids) -> Mesh:
    order = hilbert_argsort(list(zip(xs, ys)))
    i0, i1 = order[0], order[1]
    apex_pos = None
    for pos in range(2, len(order)):
        j = order[pos]
        if _exact.orient2d(xs[i0], ys[i0], xs[i1], ys[i1], xs[j], ys[j]) != 0:
            apex_pos = pos
            break
    if apex_pos is None:
        raise DegenerateInput("all points are collinear")
    mesh = Mesh(xs, ys, pids)
    mesh.init_triangle(i0, i1, order[apex_pos])
    for pos in range(2, len(order)):
        if pos == apex_pos:
            continue
        mesh.insert(order[pos])
    return mesh


def _mesh_from_qhull(xs, ys, pids) -> Mesh:
    import numpy as np
    from scipy.spatial import Delaunay as _SciDelaunay

    pts = np.empty((len(xs), 2), dtype=np.float64)
    pts[:, 0] = xs
    pts[:, 1] = ys
    simplices = _SciDelaunay(pts).simplices
    if simplices.size == 0:
        raise MeshCorrupt("qhull produced no triangles")
    if len(np.unique(simplices)) != len(xs):
        raise MeshCorrupt("qhull dropped vertices")

    mesh = Mesh(xs, ys, pids)
    halfedge = {}
    for a, b, c in simplices.tolist():
        s = _exact.orient2d(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c])
        if s == 0:
            raise MeshCorrupt("qhull emitted a degenerate triangle")
        if s < 0:
            b, c = c, b
        t = mesh.new_tri(a, b, c)
        for k, edge in enumerate(((a, b), (b, c), (c, a))):
            if edge in halfedge:
                raise MeshCorrupt("non-manifold edge in imported triangulation")
            halfedge[edge] = 3 * t + k

    hull = {}
    for (u, w), h in halfedge.items():
        rev = halfedge.get((w, u))
        if rev is None:
            hull[(u, w)] = h
        elif u < w:
            mesh.set_twin(h, rev)
    nxt = {u: w for (u, w) in hull}
    for u, w in hull:
        y = nxt.get(w)
        if y is None or _exact.orient2d(xs[u], ys[u], xs[w], ys[w], xs[y], ys[y]) < 0:
            raise MeshCorrupt("imported boundary is not convex")
    mesh.attach_ghost_ring(hull)
    # Canonicalize: qhull is not exact and resolves cocircular ties its own
    # way; flipping to the perturbed-Delaunay fixpoint makes the output
    # identical to the exact incremental path.
    mesh.legalize_all()
    return mesh


def _extract(mesh: Mesh, points: Sequence[PointRecord]):
    pids = [p.id for p in points]
    adj = {pid: set() for pid in pids}
    tris = []
    for a, b, c in mesh.real_triangles():
        pa, pb, pc = pids[a], pids[b], pids[c]
        adj[pa].add(pb)
        adj[pa].add(pc)
        adj[pb].add(pa)
        adj[pb].add(pc)
        adj[pc].add(pa)
        adj[pc].add(pb)
        m = min(pa, pb, pc)
        if m == pa:
            tris.append((pa, pb, pc))
        elif m == pb:
            tris.append((pb, pc, pa))
        else:
            tris.append((pc, pa, pb))
    tris.sort()
    adjacency = {pid: tuple(sorted(neigh)) for pid, neigh in adj.items()}
    return adjacency, tuple(tris)


def build_delaunay(points: Iterable[PointRecord], method: str = "auto") -> DelaunayIndex:
    """Build the Delaunay graph of three or more non-collinear points.

    ``method`` selects the construction path: ``"incremental"`` is the
    self-contained exact builder, ``"qhull"`` imports a scipy/Qhull
    triangulation and legalizes it with the same exact predicates, and
    ``"auto"`` prefers qhull with automatic fallback.  All paths produce
    the identical, canonical adjacency.
    """
    pts = tuple(points)
    _validate_points(pts)
    if len(pts) < 3:
        raise DegenerateInput(f"need at least 3 points, got {len(pts)}")
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    pids = [p.id for p in pts]
    if _collinear_all(xs, ys):
        raise DegenerateInput("all points are collinear")

    mesh = None
    if method in ("auto", "qhull"):
        try:
            mesh = _mesh_from_qhull(xs, ys, pids)
        except MeshCorrupt:
            if method == "qhull":
                raise
        except ImportError:
            if method == "qhull":
                raise
        except Exception as exc:  # scipy.spatial.QhullError and kin
            if method == "qhull" or type(exc).__name__ != "QhullError":
                raise
    elif method != "incremental":
        raise ValueError(f"unknown construction method {method!r}")
    if mesh is None:
        mesh = _mesh_incremental(xs, ys, pids)

    adjacency, triangles = _extract(mesh, pts)
    return DelaunayIndex(points=pts, adjacency=adjacency, triangles=triangles)


def build_neighbour_graph(
    points: Iterable[PointRecord], method: str = "auto"
) -> DelaunayIndex:
    """Voronoi-neighbour graph for any valid point set.

    Degenerate sets that :func:`build_delaunay` rejects still have a
    well-defined Voronoi adjacency: a single point has no neighbours, two
    points neighbour each other, and collinear points form a chain in
    their order along the line.  Those cases are handled here so stores
    can be built over any dataset.
    """
    pts = tuple(points)
    _validate_points(pts)
    if len(pts) == 0:
        raise DegenerateInput("empty point set")
    if len(pts) >= 3:
        xs = [p.x for p in pts]
        ys = [p.y for p in pts]
        if not _collinear_all(xs, ys):
            return build_delaunay(pts, method=method)
    if len(pts) == 1:
        adjacency = {pts[0].id: ()}
    else:
        chain = sorted(pts, key=lambda p: (p.x, p.y))
        adjacency = {}
        for i, p in enumerate(chain):
            neigh = []
            if i > 0:
                neigh.append(chain[i - 1].id)
            if i + 1 < len(chain):
                neigh.append(chain[i + 1].id)
            adjacency[p.id] = tuple(sorted(neigh))
    return DelaunayIndex(points=pts, adjacency=adjacency, triangles=())


def load_points_csv(path) -> list[PointRecord]:
    """Read a ``id,x,y`` CSV dataset.

    Lines starting with ``#`` are ignored; ids must increase strictly
    from 0.  This is also the ingestion format for real datasets
    (e.g. longitude/latitude exports).
    """
    points = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise IoFailure(f"{path}:{lineno}: expected 'id,x,y'")
                pid = int(parts[0])
                if pid != len(points):
                    raise IoFailure(
                        f"{path}:{lineno}: ids must increase strictly from 0"
                    )
                x = float(parts[1])
                y = float(parts[2])
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise NonFiniteCoordinate(f"{path}:{lineno}: non-finite coordinate")
                points.append(PointRecord(pid, x, y))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise IoFailure(f"cannot parse {path}: {exc}") from exc
    return points


def save_points_csv(path, points: Iterable[PointRecord]) -> None:
    """Write points in the ``id,x,y`` format (floats via repr, lossless)."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for p in points:
                fh.write(f"{p.id},{p.x!r},{p.y!r}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
