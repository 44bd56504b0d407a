"""Exact-sign geometric predicates.

Fast path evaluates each determinant in float64 and accepts the sign when
it clears a forward-error bound (Shewchuk's stage-A filters); otherwise the
sign is recomputed with exact rational arithmetic.  Every float is a dyadic
rational, so ``Fraction`` conversion is lossless and the fallback sign is
exact, including a reliable zero.
"""

from __future__ import annotations

from fractions import Fraction

# Stage-A error-bound coefficients for binary64 (epsilon = 2**-53).
_EPS = 2.0 ** -53
_ORIENT_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_INCIRCLE_BOUND = (10.0 + 96.0 * _EPS) * _EPS
# Below this magnitude, term products may have underflowed and the error
# bounds no longer hold; go exact.  Above it, the bound dominates any
# subnormal rounding loss (< 2**-1021 per term).
_UNDERFLOW_GUARD = 1e-290


def _sign(value) -> int:
    if value > 0:
        return 1
    if value < 0:
        return -1
    return 0


def orient2d(ax, ay, bx, by, cx, cy) -> int:
    """Sign of twice the signed area of triangle (a, b, c).

    +1 when c lies strictly left of the directed line a->b, -1 when strictly
    right, 0 when the three points are exactly collinear.
    """
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright

    # Sign comparisons of the two products are exact even when the
    # products underflow (rounding is monotone around zero), so the
    # opposite-sign cases are safe without a bound.
    if detleft > 0.0:
        if detright <= 0.0:
            return 1
        detsum = detleft + detright
    elif detleft < 0.0:
        if detright >= 0.0:
            return -1
        detsum = -detleft - detright
    else:
        if detright != 0.0:
            return _sign(-detright)
        # Both products rounded to zero; only factor inspection can tell
        # an exact zero from a doubly underflowed determinant.
        if ((ax == cx or by == cy) and (ay == cy or bx == cx)):
            return 0
        return _orient2d_exact(ax, ay, bx, by, cx, cy)

    if detsum >= _UNDERFLOW_GUARD:
        if det >= _ORIENT_BOUND * detsum:
            return 1
        if -det >= _ORIENT_BOUND * detsum:
            return -1
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


def _orient2d_exact(ax, ay, bx, by, cx, cy) -> int:
    acx = Fraction(ax) - Fraction(cx)
    acy = Fraction(ay) - Fraction(cy)
    bcx = Fraction(bx) - Fraction(cx)
    bcy = Fraction(by) - Fraction(cy)
    return _sign(acx * bcy - acy * bcx)


def incircle(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    """Sign of the in-circle determinant for CCW triangle (a, b, c).

    +1 when d lies strictly inside the circumcircle, -1 strictly outside,
    0 when the four points are exactly cocircular.  Exact for all float
    inputs.
    """
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady

    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy

    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (
        alift * (bdxcdy - cdxbdy)
        + blift * (cdxady - adxcdy)
        + clift * (adxbdy - bdxady)
    )
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    if permanent >= _UNDERFLOW_GUARD:
        errbound = _INCIRCLE_BOUND * permanent
        if det > errbound:
            return 1
        if -det > errbound:
            return -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    dxf = Fraction(dx)
    dyf = Fraction(dy)
    adx = Fraction(ax) - dxf
    ady = Fraction(ay) - dyf
    bdx = Fraction(bx) - dxf
    bdy = Fraction(by) - dyf
    cdx = Fraction(cx) - dxf
    cdy = Fraction(cy) - dyf
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    return _sign(det)


def incircle_perturbed(ia, ax, ay, ib, bx, by, ic, cx, cy, idd, dx, dy) -> int:
    """In-circle sign with cocircular ties broken symbolically by id.

    Each point gets an infinitesimal lifting weight that shrinks as its id
    grows (lower id perturbed first), which is equivalent to evaluating the
    corresponding power/regular test at epsilon -> 0+.  Never returns 0 for
    four distinct points not all collinear.  Requires (a, b, c) in CCW
    order, matching :func:`incircle`.
    """
    s = incircle(ax, ay, bx, by, cx, cy, dx, dy)
    if s:
        return s
    # Cocircular: the dominant weight belongs to the smallest id.  The
    # weight coefficients are cofactors of the lifted determinant, each an
    # orientation of the remaining three points.
    order = sorted(((ia, 0), (ib, 1), (ic, 2), (idd, 3)))
    for _, which in order:
        if which == 0:
            coeff = -orient2d(bx, by, cx, cy, dx, dy)
        elif which == 1:
            coeff = orient2d(ax, ay, cx, cy, dx, dy)
        elif which == 2:
            coeff = -orient2d(ax, ay, bx, by, dx, dy)
        else:
            coeff = orient2d(ax, ay, bx, by, cx, cy)
        if coeff:
            return coeff
    raise ValueError("perturbed in-circle test on degenerate point quadruple")
