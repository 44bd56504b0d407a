"""Triangle-mesh engine behind Delaunay construction.

Stores a triangulation as vertex triples plus halfedge twins.  The hull is
closed with ghost triangles: for every hull edge a->b (interior on the
left) there is a triangle (b, a, GHOST), so each halfedge always has a
twin and insertion never special-cases the boundary.  All predicate calls
are exact; cocircular ties are resolved by the id-ordered symbolic
perturbation, which makes the resulting triangulation unique regardless
of construction order.
"""

from __future__ import annotations

from .errors import AnnJoinError
from ._exact import incircle_perturbed, orient2d

GHOST = -1


class MeshCorrupt(AnnJoinError):
    """Internal consistency failure while building a triangulation."""


class Mesh:
    """Mutable triangulation over a fixed vertex set."""

    __slots__ = ("xs", "ys", "pids", "tv", "tn", "alive", "_free", "_hint")

    def __init__(self, xs, ys, pids):
        self.xs = list(xs)
        self.ys = list(ys)
        self.pids = list(pids)
        self.tv = []  # triangle -> [v0, v1, v2], GHOST allowed
        self.tn = []  # triangle -> [twin halfedge of edge i] (3*t + e)
        self.alive = []
        self._free = []
        self._hint = 0

    # -- low-level slots ------------------------------------------------

    def new_tri(self, a, b, c) -> int:
        if self._free:
            t = self._free.pop()
            self.tv[t][0] = a
            self.tv[t][1] = b
            self.tv[t][2] = c
            self.alive[t] = True
        else:
            t = len(self.tv)
            self.tv.append([a, b, c])
            self.tn.append([-1, -1, -1])
            self.alive.append(True)
        return t

    def kill(self, t) -> None:
        self.alive[t] = False
        self._free.append(t)

    def set_twin(self, h1, h2) -> None:
        self.tn[h1 // 3][h1 % 3] = h2
        self.tn[h2 // 3][h2 % 3] = h1

    def is_ghost(self, t) -> bool:
        v = self.tv[t]
        return v[0] == GHOST or v[1] == GHOST or v[2] == GHOST

    def ghost_edge(self, t):
        """Directed real edge (u, w) of a ghost triangle.

        (u, w) is the reverse of the hull edge w->u, so the hull interior
        lies strictly right of u->w.
        """
        v = self.tv[t]
        if v[0] == GHOST:
            return v[1], v[2]
        if v[1] == GHOST:
            return v[2], v[0]
        return v[0], v[1]

    # -- predicates -----------------------------------------------------

    def conflict(self, t, px, py, pid) -> bool:
        """True when inserting p must delete triangle t."""
        a, b, c = self.tv[t]
        xs = self.xs
        ys = self.ys
        if a != GHOST and b != GHOST and c != GHOST:
            return (
                incircle_perturbed(
                    self.pids[a], xs[a], ys[a],
                    self.pids[b], xs[b], ys[b],
                    self.pids[c], xs[c], ys[c],
                    pid, px, py,
                )
                > 0
            )
        u, w = self.ghost_edge(t)
        s = orient2d(xs[u], ys[u], xs[w], ys[w], px, py)
        if s > 0:
            return True
        if s < 0:
            return False
        # Collinear with the hull edge: conflict only when p is strictly
        # inside the open segment (w, u).
        if xs[u] != xs[w]:
            lo, hi = (xs[u], xs[w]) if xs[u] < xs[w] else (xs[w], xs[u])
            return lo < px < hi
        lo, hi = (ys[u], ys[w]) if ys[u] < ys[w] else (ys[w], ys[u])
        return lo < py < hi

    # -- point location -------------------------------------------------

    def locate_conflict(self, px, py, pid) -> int:
        """Walk to some triangle in conflict with p.

        Visibility walk over real triangles; stepping through a hull edge
        lands on its ghost, which by construction conflicts.  Terminates
        on (perturbed-)Delaunay meshes.
        """
        t = self._hint
        if not (0 <= t < len(self.tv)) or not self.alive[t] or self.is_ghost(t):
            t = next(
                i for i in range(len(self.tv)) if self.alive[i] and not self.is_ghost(i)
            )
        xs = self.xs
        ys = self.ys
        tv = self.tv
        tn = self.tn
        limit = 3 * len(tv) + 16
        for _ in range(limit):
            a, b, c = tv[t]
            if a == GHOST or b == GHOST or c == GHOST:
                return t
            if orient2d(xs[a], ys[a], xs[b], ys[b], px, py) < 0:
                t = tn[t][0] // 3
            elif orient2d(xs[b], ys[b], xs[c], ys[c], px, py) < 0:
                t = tn[t][1] // 3
            elif orient2d(xs[c], ys[c], xs[a], ys[a], px, py) < 0:
                t = tn[t][2] // 3
            else:
                return t
        raise MeshCorrupt("point location walk did not terminate")

    # -- insertion ------------------------------------------------------

    def insert(self, v) -> None:
        """Insert vertex index v (Bowyer-Watson cavity retriangulation)."""
        px = self.xs[v]
        py = self.ys[v]
        pid = self.pids[v]
        seed = self.locate_conflict(px, py, pid)
        if not self.conflict(seed, px, py, pid):
            raise MeshCorrupt("located triangle is not in conflict")

        tn = self.tn
        status = {seed: True}
        dead = [seed]
        stack = [seed]
        boundary = []  # (x, y, twin halfedge) with the cavity left of x->y
        tv = self.tv
        while stack:
            t = stack.pop()
            verts = tv[t]
            nbrs = tn[t]
            for i in range(3):
                nb = nbrs[i] // 3
                st = status.get(nb)
                if st is None:
                    st = self.conflict(nb, px, py, pid)
                    status[nb] = st
                    if st:
                        dead.append(nb)
                        stack.append(nb)
                if not st:
                    boundary.append((verts[i], verts[(i + 1) % 3], nbrs[i]))

        for t in dead:
            self.kill(t)

        by_start = {}
        created = []
        last_real = -1
        for x, y, twin in boundary:
            nt = self.new_tri(x, y, v)
            self.set_twin(3 * nt, twin)
            by_start[x] = nt
            created.append((nt, y))
            if x != GHOST and y != GHOST:
                last_real = nt
        for nt, y in created:
            # twin of edge (y, v) is edge (v, y) of the fan triangle
            # starting at y
            self.set_twin(3 * nt + 1, 3 * by_start[y] + 2)
        if last_real < 0:
            raise MeshCorrupt("insertion produced no real triangle")
        self._hint = last_real

    # -- legalization (for imported triangulations) ----------------------

    def _illegal(self, t, i) -> bool:
        h2 = self.tn[t][i]
        t2 = h2 // 3
        tv = self.tv
        if self.is_ghost(t) or self.is_ghost(t2):
            return False
        u = tv[t][i]
        v = tv[t][(i + 1) % 3]
        w = tv[t][(i + 2) % 3]
        z = tv[t2][(h2 % 3 + 2) % 3]
        xs = self.xs
        ys = self.ys
        return (
            incircle_perturbed(
                self.pids[u], xs[u], ys[u],
                self.pids[v], xs[v], ys[v],
                self.pids[w], xs[w], ys[w],
                self.pids[z], xs[z], ys[z],
            )
            > 0
        )

    def flip(self, t, i) -> None:
        """Flip the interior edge i of triangle t."""
        h2 = self.tn[t][i]
        t2, j = divmod(h2, 3)
        tv = self.tv
        tn = self.tn
        u = tv[t][i]
        v = tv[t][(i + 1) % 3]
        w = tv[t][(i + 2) % 3]
        z = tv[t2][(j + 2) % 3]
        twin_a = tn[t][(i + 1) % 3]
        twin_b = tn[t][(i + 2) % 3]
        twin_c = tn[t2][(j + 1) % 3]
        twin_d = tn[t2][(j + 2) % 3]
        tv[t][0] = u
        tv[t][1] = z
        tv[t][2] = w
        tv[t2][0] = z
        tv[t2][1] = v
        tv[t2][2] = w
        self.set_twin(3 * t, twin_c)
        self.set_twin(3 * t + 1, 3 * t2 + 2)
        self.set_twin(3 * t + 2, twin_b)
        self.set_twin(3 * t2, twin_d)
        self.set_twin(3 * t2 + 1, twin_a)

    def legalize_all(self, max_passes: int = 256) -> int:
        """Lawson flips until every interior edge is locally Delaunay.

        From any valid triangulation this converges to the unique
        perturbed-Delaunay triangulation.  Returns the number of flips.
        """
        total = 0
        for _ in range(max_passes):
            flips = 0
            for t in range(len(self.tv)):
                if not self.alive[t] or self.is_ghost(t):
                    continue
                for i in range(3):
                    if 3 * t + i < self.tn[t][i] and self._illegal(t, i):
                        self.flip(t, i)
                        flips += 1
            total += flips
            if flips == 0:
                return total
        raise MeshCorrupt("edge legalization did not converge")

    # -- bootstrap and extraction ----------------------------------------

    def init_triangle(self, i0, i1, i2) -> None:
        """Seed the mesh with one CCW triangle and its three ghosts."""
        if orient2d(
            self.xs[i0], self.ys[i0], self.xs[i1], self.ys[i1], self.xs[i2], self.ys[i2]
        ) < 0:
            i1, i2 = i2, i1
        t0 = self.new_tri(i0, i1, i2)
        ring = (i0, i1, i2)
        ghosts = []
        for k in range(3):
            u = ring[k]
            w = ring[(k + 1) % 3]
            g = self.new_tri(w, u, GHOST)
            ghosts.append(g)
            self.set_twin(3 * t0 + k, 3 * g)
        for k in range(3):
            self.set_twin(3 * ghosts[k] + 1, 3 * ghosts[k - 1] + 2)
        self._hint = t0

    def attach_ghost_ring(self, hull_edges) -> None:
        """Close an imported triangulation with ghosts.

        ``hull_edges`` maps each boundary halfedge (u, w) (interior left)
        to its real halfedge code.
        """
        ghost_by_start = {}
        for (u, w), h in hull_edges.items():
            g = self.new_tri(w, u, GHOST)
            self.set_twin(3 * g, h)
            ghost_by_start[u] = (g, w)
        if len(ghost_by_start) != len(hull_edges):
            raise MeshCorrupt("a hull vertex starts two boundary edges")
        for u, (g, w) in ghost_by_start.items():
            nxt = ghost_by_start.get(w)
            if nxt is None:
                raise MeshCorrupt("hull boundary is not a closed cycle")
            self.set_twin(3 * g + 2, 3 * nxt[0] + 1)
        # A valid hull is one closed cycle through every boundary vertex.
        start = next(iter(ghost_by_start))
        steps = 0
        u = start
        while True:
            u = ghost_by_start[u][1]
            steps += 1
            if u == start:
                break
            if steps > len(hull_edges):
                raise MeshCorrupt("hull boundary is not a single cycle")
        if steps != len(hull_edges):
            raise MeshCorrupt("hull boundary is not a single cycle")

    def real_triangles(self):
        tv = self.tv
        for t in range(len(tv)):
            if not self.alive[t]:
                continue
            a, b, c = tv[t]
            if a != GHOST and b != GHOST and c != GHOST:
                yield a, b, c
