"""Independent oracles and instance generators used by the test suite.

Everything here recomputes expected values from first principles (exhaustive
search, half-plane clipping, determinant evaluation) and stays independent
of the code paths under test.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

from annjoin._exact import incircle_perturbed, orient2d
from annjoin.geom import PointRecord



def incircle_det_exact(a, b, c, d) -> int:
    """Sign of the raw 4x4 in-circle determinant via rational arithmetic."""
    rows = []
    for p in (a, b, c):
        px = Fraction(p[0]) - Fraction(d[0])
        py = Fraction(p[1]) - Fraction(d[1])
        rows.append((px, py, px * px + py * py))
    (a0, a1, a2), (b0, b1, b2), (c0, c1, c2) = rows
    det = (
        a0 * (b1 * c2 - b2 * c1)
        - a1 * (b0 * c2 - b2 * c0)
        + a2 * (b0 * c1 - b1 * c0)
    )
    return (det > 0) - (det < 0)


def orient_det_exact(a, b, c) -> int:
    det = (Fraction(a[0]) - Fraction(c[0])) * (Fraction(b[1]) - Fraction(c[1])) - (
        Fraction(a[1]) - Fraction(c[1])
    ) * (Fraction(b[0]) - Fraction(c[0]))
    return (det > 0) - (det < 0)


def brute_nn(points, q) -> tuple[float, set[int]]:
    """Exhaustive minimum squared distance and the ids attaining it."""
    best = math.inf
    ids: set[int] = set()
    for p in points:
        dx = p.x - q[0]
        dy = p.y - q[1]
        d = dx * dx + dy * dy
        if d < best:
            best = d
            ids = {p.id}
        elif d == best:
            ids.add(p.id)
    return best, ids


# -- Voronoi adjacency oracles -------------------------------------------------


def _bisector_constraint(u, v, w):
    """Closer-to-u-than-w as a linear constraint a*t < b on u/v's bisector.

    The bisector is parametrized z(t) = midpoint(u, v) + t * rot90(v - u).
    """
    dx = -(v.y - u.y)
    dy = v.x - u.x
    mx = (u.x + v.x) / 2.0
    my = (u.y + v.y) / 2.0
    ex = w.x - u.x
    ey = w.y - u.y
    a = 2.0 * (dx * ex + dy * ey)
    b = (w.x * w.x + w.y * w.y - u.x * u.x - u.y * u.y) - 2.0 * (mx * ex + my * ey)
    return a, b


def _bisector_adjacent_exact(u, v, others) -> bool:
    """Exact test: does the open cell-shared part of the bisector exist?"""
    two = Fraction(2)
    dx = -(Fraction(v.y) - Fraction(u.y))
    dy = Fraction(v.x) - Fraction(u.x)
    mx = (Fraction(u.x) + Fraction(v.x)) / two
    my = (Fraction(u.y) + Fraction(v.y)) / two
    lo = None
    hi = None
    for w in others:
        ex = Fraction(w.x) - Fraction(u.x)
        ey = Fraction(w.y) - Fraction(u.y)
        a = two * (dx * ex + dy * ey)
        b = (
            Fraction(w.x) ** 2
            + Fraction(w.y) ** 2
            - Fraction(u.x) ** 2
            - Fraction(u.y) ** 2
        ) - two * (mx * ex + my * ey)
        if a == 0:
            if b <= 0:
                return False
            continue
        t = b / a
        if a > 0:
            hi = t if hi is None else min(hi, t)
        else:
            lo = t if lo is None else max(lo, t)
        if lo is not None and hi is not None and lo >= hi:
            return False
    return True


def halfplane_voronoi_adjacency(points) -> dict[int, set[int]]:
    """Voronoi neighbours by brute-force half-plane intersection.

    u and v share a Voronoi edge iff intersecting every other point's
    closer-half-plane with u/v's bisector leaves an open interval.  Each
    pair is decided in float arithmetic and re-decided exactly (rational
    arithmetic) whenever the float margin is small, so the answer is
    reliable even for jittered near-degenerate inputs.  Exactly
    cocircular quadruples yield a zero-length interval, i.e. cells
    touching in one point are not neighbours (the unperturbed reading).
    """
    pts = list(points)
    n = len(pts)
    adjacency: dict[int, set[int]] = {p.id: set() for p in pts}
    for i in range(n):
        u = pts[i]
        for j in range(i + 1, n):
            v = pts[j]
            others = [w for w in pts if w.id not in (u.id, v.id)]
            lo = -math.inf
            hi = math.inf
            uncertain = False
            feasible = True
            for w in others:
                a, b = _bisector_constraint(u, v, w)
                scale = abs(a) + abs(b) + 1e-300
                if abs(a) <= 1e-9 * scale:
                    uncertain = True
                    break
                t = b / a
                if a > 0.0:
                    hi = min(hi, t)
                else:
                    lo = max(lo, t)
            if not uncertain:
                width = hi - lo
                span = max(1.0, abs(lo) if lo != -math.inf else 0.0, abs(hi) if hi != math.inf else 0.0)
                if not (width > 1e-7 * span or width < -1e-7 * span):
                    uncertain = True
                else:
                    feasible = width > 0.0
            if uncertain:
                feasible = _bisector_adjacent_exact(u, v, others)
            if feasible:
                adjacency[u.id].add(v.id)
                adjacency[v.id].add(u.id)
    return adjacency


def witness_delaunay_adjacency(points) -> dict[int, set[int]]:
    """Exact perturbed-Delaunay adjacency by exhaustive witness search.

    Two points are neighbours iff some circle through both is empty of
    all other points, evaluated with the same symbolic perturbation that
    defines the canonical triangulation.  O(n^4); small inputs only.
    """
    pts = list(points)
    n = len(pts)
    adjacency: dict[int, set[int]] = {p.id: set() for p in pts}
    for i in range(n):
        for j in range(i + 1, n):
            pi, pj = pts[i], pts[j]
            found = False
            for w in pts:
                if w.id in (pi.id, pj.id):
                    continue
                s = orient2d(pi.x, pi.y, pj.x, pj.y, w.x, w.y)
                if s == 0:
                    continue
                a, b = (pi, pj) if s > 0 else (pj, pi)
                empty = True
                for z in pts:
                    if z.id in (a.id, b.id, w.id):
                        continue
                    if (
                        incircle_perturbed(
                            a.id, a.x, a.y, b.id, b.x, b.y, w.id, w.x, w.y, z.id, z.x, z.y
                        )
                        > 0
                    ):
                        empty = False
                        break
                if empty:
                    found = True
                    break
            if found:
                adjacency[pi.id].add(pj.id)
                adjacency[pj.id].add(pi.id)
    return adjacency


# -- instance generators --------------------------------------------------------


def pts_uniform(n: int, rng: random.Random, box=(0.0, 0.0, 1.0, 1.0)) -> list[PointRecord]:
    minx, miny, maxx, maxy = box
    seen = set()
    out = []
    while len(out) < n:
        x = minx + rng.random() * (maxx - minx)
        y = miny + rng.random() * (maxy - miny)
        if (x, y) in seen:
            continue
        seen.add((x, y))
        out.append(PointRecord(len(out), x, y))
    return out


def pts_clustered(n: int, rng: random.Random, clusters: int = 5) -> list[PointRecord]:
    centers = [(rng.random(), rng.random()) for _ in range(max(1, clusters))]
    seen = set()
    out = []
    while len(out) < n:
        cx, cy = centers[rng.randrange(len(centers))]
        x = rng.gauss(cx, 0.03)
        y = rng.gauss(cy, 0.03)
        if (x, y) in seen:
            continue
        seen.add((x, y))
        out.append(PointRecord(len(out), x, y))
    return out


def pts_grid(n: int, rng: random.Random, jitter: float = 0.0) -> list[PointRecord]:
    """First n cells of a g x g grid over the unit square, optionally jittered.

    With jitter 0 every interior quad is exactly cocircular, exercising
    the symbolic tie-break policy.
    """
    g = math.isqrt(n - 1) + 1
    out = []
    seen = set()
    i = 0
    while len(out) < n:
        gx = i % g
        gy = i // g
        i += 1
        x = gx / max(g - 1, 1)
        y = gy / max(g - 1, 1)
        if jitter:
            x += rng.uniform(-jitter, jitter)
            y += rng.uniform(-jitter, jitter)
        if (x, y) in seen:
            continue
        seen.add((x, y))
        out.append(PointRecord(len(out), x, y))
    return out


FAMILIES = ("uniform", "clustered", "grid-exact", "grid-jitter")


def pts_family(family: str, n: int, rng: random.Random) -> list[PointRecord]:
    if family == "uniform":
        return pts_uniform(n, rng)
    if family == "clustered":
        return pts_clustered(n, rng)
    if family == "grid-exact":
        return pts_grid(n, rng, jitter=0.0)
    if family == "grid-jitter":
        return pts_grid(n, rng, jitter=1e-6)
    raise ValueError(family)
