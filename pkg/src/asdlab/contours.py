"""Contours in the complex plane for transporting linear systems.

A contour is a list of smooth segments, each parametrized on [0, 1] with an
analytic derivative.  Lassos (segment out, circle around, segment back) are
built with optional detour arcs so approach paths keep a prescribed clearance
from other poles.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LineSegment", "ArcSegment", "Contour", "circle", "polyline", "lasso"]


@dataclass(frozen=True)
class LineSegment:
    z0: complex
    z1: complex

    def point(self, s):
        return self.z0 + (self.z1 - self.z0) * s

    def velocity(self, s):
        return self.z1 - self.z0

    def length(self):
        return abs(self.z1 - self.z0)


@dataclass(frozen=True)
class ArcSegment:
    center: complex
    radius: float
    angle0: float
    angle1: float  # may differ by more than 2*pi for multiple turns

    def point(self, s):
        a = self.angle0 + (self.angle1 - self.angle0) * s
        return self.center + self.radius * np.exp(1j * a)

    def velocity(self, s):
        a = self.angle0 + (self.angle1 - self.angle0) * s
        return 1j * (self.angle1 - self.angle0) * self.radius * np.exp(1j * a)

    def length(self):
        return abs(self.angle1 - self.angle0) * self.radius


@dataclass(frozen=True)
class Contour:
    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def start(self):
        return self.segments[0].point(0.0)

    @property
    def end(self):
        return self.segments[-1].point(1.0)

    def is_closed(self, tol=1e-12):
        scale = 1.0 + abs(self.start) + abs(self.end)
        return abs(self.start - self.end) <= tol * scale

    def reversed(self):
        rev = []
        for seg in reversed(self.segments):
            if isinstance(seg, LineSegment):
                rev.append(LineSegment(seg.z1, seg.z0))
            else:
                rev.append(ArcSegment(seg.center, seg.radius, seg.angle1, seg.angle0))
        return Contour(tuple(rev))

    def __add__(self, other):
        return Contour(self.segments + other.segments)

    def min_distance(self, points, n_samples=64):
        """Coarse minimum distance from the contour to a set of points."""
        points = np.asarray(points, dtype=complex)
        if points.size == 0:
            return np.inf
        best = np.inf
        s = np.linspace(0.0, 1.0, n_samples)
        for seg in self.segments:
            zs = np.array([seg.point(si) for si in s])
            d = np.abs(zs[:, None] - points[None, :]).min()
            best = min(best, float(d))
        return best


def circle(center, radius, turns=1, start_angle=0.0):
    """Circular contour; positive turns wind counterclockwise."""
    return Contour((ArcSegment(complex(center), float(radius), start_angle,
                               start_angle + 2.0 * np.pi * turns),))


def polyline(points, close=False):
    pts = [complex(p) for p in points]
    if close:
        pts.append(pts[0])
    return Contour(tuple(LineSegment(a, b) for a, b in zip(pts[:-1], pts[1:])))


def _approach(z_from, z_to, avoid, clearance):
    """Segments from z_from to z_to detouring around points in `avoid`.

    Detours are arcs on the side of the obstructing point that faces the
    start of the approach, which keeps a family of lassos from a common
    basepoint mutually non-crossing.
    """
    segs = []
    cur = complex(z_from)
    target = complex(z_to)
    remaining = sorted(
        (p for p in avoid if _seg_point_dist(cur, target, p) < clearance),
        key=lambda p: abs(p - cur),
    )
    for p in remaining:
        d = target - cur
        if abs(d) == 0:
            continue
        # foot of the perpendicular from p onto the segment
        tfoot = np.clip(((p - cur) / d).real, 0.0, 1.0)
        foot = cur + tfoot * d
        if abs(foot - p) >= clearance:
            continue
        r = clearance
        u = d / abs(d)
        enter = p - u * r
        a_enter = float(np.angle(-u))
        # bulge away from the offending point: if p sits left of the path,
        # sweep counterclockwise (the arc midpoint lies right of the path)
        offset = p - cur
        side = d.real * offset.imag - d.imag * offset.real
        a_leave = a_enter + np.pi if side >= 0 else a_enter - np.pi
        segs.append(LineSegment(cur, enter))
        segs.append(ArcSegment(p, r, a_enter, a_leave))
        cur = p + u * r
    segs.append(LineSegment(cur, target))
    return segs


def _seg_point_dist(z0, z1, p):
    d = z1 - z0
    if abs(d) == 0:
        return abs(p - z0)
    t = np.clip(((p - z0) / d).real, 0.0, 1.0)
    return abs(z0 + t * d - p)


def lasso(basepoint, pole, radius, avoid=(), clearance=None, turns=1):
    """Closed loop from basepoint around a single pole and back.

    `avoid` lists other poles the approach path must keep `clearance` away
    from (default: the loop radius).
    """
    basepoint = complex(basepoint)
    pole = complex(pole)
    if clearance is None:
        clearance = radius
    avoid = [complex(p) for p in avoid if abs(complex(p) - pole) > 1e-15]
    direction = (pole - basepoint) / abs(pole - basepoint)
    entry = pole - direction * radius
    out_segs = _approach(basepoint, entry, avoid, clearance)
    a0 = np.angle(entry - pole)
    loop = ArcSegment(pole, radius, a0, a0 + 2 * np.pi * turns)
    back_segs = [
        LineSegment(seg.z1, seg.z0) if isinstance(seg, LineSegment)
        else ArcSegment(seg.center, seg.radius, seg.angle1, seg.angle0)
        for seg in reversed(out_segs)
    ]
    return Contour(tuple(out_segs) + (loop,) + tuple(back_segs))
