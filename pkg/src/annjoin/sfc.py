"""Hilbert-curve ordering of planar points.

Used to lay out generated datasets, to pick cache-friendly query order for
the R-tree join, and as a locality-preserving insertion order during
triangulation.  Exact answers never depend on this ordering.
"""

from __future__ import annotations

DEFAULT_ORDER = 16


def hilbert_index(order: int, x: int, y: int) -> int:
    """Distance along the Hilbert curve of a 2^order x 2^order grid."""
    d = 0
    s = 1 << (order - 1)
    while s > 0:
        rx = 1 if (x & s) > 0 else 0
        ry = 1 if (y & s) > 0 else 0
        d += s * s * ((3 * rx) ^ ry)
        if ry == 0:
            if rx == 1:
                x = s - 1 - x
                y = s - 1 - y
            x, y = y, x
        s >>= 1
    return d


def hilbert_keys(coords, order: int = DEFAULT_ORDER):
    """Hilbert key per (x, y) pair, scaled over the data bounding box."""
    xs = [c[0] for c in coords]
    ys = [c[1] for c in coords]
    minx, maxx = min(xs), max(xs)
    miny, maxy = min(ys), max(ys)
    side = (1 << order) - 1
    spanx = maxx - minx
    spany = maxy - miny
    keys = []
    for x, y in coords:
        ix = int((x - minx) / spanx * side) if spanx > 0 else 0
        iy = int((y - miny) / spany * side) if spany > 0 else 0
        if ix > side:
            ix = side
        if iy > side:
            iy = side
        keys.append(hilbert_index(order, ix, iy))
    return keys


def hilbert_argsort(coords, order: int = DEFAULT_ORDER):
    """Indices of ``coords`` sorted along the Hilbert curve.

    Ties (points falling on one grid cell) are broken by position so the
    result is deterministic.
    """
    keys = hilbert_keys(coords, order)
    return sorted(range(len(keys)), key=lambda i: (keys[i], i))
