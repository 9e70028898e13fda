"""Axis-aligned facet geometry.

A facet is a bounded piece of a hyperplane in R^d: a center z, a half-extent
r > 0, and an orientation given either by a canonical axis index (the normal
direction e_i, any d >= 2) or by a unit normal vector (d = 2 only).  The facet
is the sup-norm ball of radius r around z inside its hyperplane, i.e. an
axis-aligned (d-1)-cube for canonical orientations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Facet:
    """One facet: center, half-extent, orientation.

    orientation is an int axis index in [0, d) for canonical normals, or a
    unit normal (nx, ny) with the first nonzero coordinate positive (d = 2
    only).  The facet occupies {s : s[axis] = z[axis], max_c |s_c - z_c| <= r}
    for canonical orientation, and the segment z + t * perp(normal),
    |t| <= r, in d = 2.
    """

    center: tuple[float, ...]
    half_extent: float
    orientation: int | tuple[float, float]

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_extent", float(self.half_extent))
        d = len(center)
        if d < 2:
            raise ValueError("facets need ambient dimension d >= 2")
        if not self.half_extent > 0:
            raise ValueError("half_extent must be positive")
        if isinstance(self.orientation, (int,)) and not isinstance(self.orientation, bool):
            if not 0 <= self.orientation < d:
                raise ValueError(f"canonical axis {self.orientation} outside [0, {d})")
        else:
            normal = tuple(float(v) for v in self.orientation)
            if d != 2 or len(normal) != 2:
                raise ValueError("vector orientations are supported in d = 2 only")
            norm = math.hypot(*normal)
            if abs(norm - 1.0) > 1e-9:
                raise ValueError("orientation normal must be a unit vector")
            if normal[0] < 0 or (normal[0] == 0 and normal[1] < 0):
                raise ValueError("normal must have its first nonzero coordinate positive")
            object.__setattr__(self, "orientation", normal)

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def is_canonical(self) -> bool:
        return isinstance(self.orientation, int)

    def orientation_key(self):
        """Hashable key identifying the orientation class (parallel iff equal)."""
        return self.orientation


@dataclass(frozen=True)
class Window:
    """Axis-aligned observation window, a product of closed intervals."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if len(bounds) < 2:
            raise ValueError("window needs dimension d >= 2")
        for lo, hi in bounds:
            if not hi > lo:
                raise ValueError("window intervals must have positive length")

    @classmethod
    def cube(cls, side: float, d: int) -> "Window":
        return cls(tuple((0.0, float(side)) for _ in range(d)))

    @property
    def d(self) -> int:
        return len(self.bounds)

    @property
    def volume(self) -> float:
        v = 1.0
        for lo, hi in self.bounds:
            v *= hi - lo
        return v

    def contains(self, point: Sequence[float]) -> bool:
        return all(lo <= p <= hi for (lo, hi), p in zip(self.bounds, point))


def facet_measure(facet: Facet) -> float:
    """(d-1)-dimensional measure of a single facet: (2r)^(d-1)."""
    return (2.0 * facet.half_extent) ** (facet.d - 1)


def general_position(facets: Iterable[Facet]) -> bool:
    """True iff no two facets are parallel (share an orientation class)."""
    seen = set()
    for f in facets:
        key = f.orientation_key()
        if key in seen:
            return False
        seen.add(key)
    return True


def _check_same_dimension(facets: Sequence[Facet]) -> int:
    d = facets[0].d
    for f in facets[1:]:
        if f.d != d:
            raise ValueError("facets live in different ambient dimensions")
    return d


def _canonical_intersection(facets: Sequence[Facet], d: int) -> float:
    # Intersection of j canonical facets with pairwise distinct axes is an
    # axis-aligned box: fixed coordinates must fall inside every facet's
    # extent (closed inequalities, no epsilon), free coordinates contribute
    # their interval overlap length.
    axes = {f.orientation: f for f in facets}
    measure = 1.0
    for c in range(d):
        lo = max(f.center[c] - f.half_extent for f in facets)
        hi = min(f.center[c] + f.half_extent for f in facets)
        if c in axes:
            v = axes[c].center[c]
            if not (lo <= v <= hi):
                return 0.0
        else:
            length = hi - lo
            if length <= 0.0:
                return 0.0
            measure *= length
    return measure


def _segment_endpoints(f: Facet):
    if f.is_canonical:
        nx, ny = (1.0, 0.0) if f.orientation == 0 else (0.0, 1.0)
    else:
        nx, ny = f.orientation
    # direction along the segment: perpendicular of the normal
    tx, ty = -ny, nx
    cx, cy = f.center
    r = f.half_extent
    return (cx - r * tx, cy - r * ty), (cx + r * tx, cy + r * ty)


def _segments_cross(f1: Facet, f2: Facet) -> bool:
    """Closed-segment intersection test for two non-parallel d=2 facets."""
    (ax, ay), (bx, by) = _segment_endpoints(f1)
    (cx, cy), (dx, dy) = _segment_endpoints(f2)
    r_x, r_y = bx - ax, by - ay
    s_x, s_y = dx - cx, dy - cy
    denom = r_x * s_y - r_y * s_x
    if denom == 0.0:
        return False
    qp_x, qp_y = cx - ax, cy - ay
    t = (qp_x * s_y - qp_y * s_x) / denom
    u = (qp_x * r_y - qp_y * r_x) / denom
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


def intersection_measure(facets: Sequence[Facet]) -> float:
    """H^(d-j) measure of the intersection of j distinct facets.

    Parallel facets (equal orientation class) yield 0, including coincident
    ones.  For j = d the value is the 0-or-1 point count.  Non-canonical
    orientations are supported in d = 2 only; elsewhere they raise.
    """
    facets = list(facets)
    if not facets:
        raise ValueError("need at least one facet")
    d = _check_same_dimension(facets)
    j = len(facets)
    if j > d:
        return 0.0
    if j == 1:
        return facet_measure(facets[0])
    if not general_position(facets):
        return 0.0
    if all(f.is_canonical for f in facets):
        return _canonical_intersection(facets, d)
    if d != 2:
        raise ValueError("non-canonical orientations are supported in d = 2 only")
    return 1.0 if _segments_cross(facets[0], facets[1]) else 0.0
