"""Monodromy of dY/dz = B1(z) Y and its constancy along flow families.

Loops are circles around individual poles (traces are basepoint-free), a
big circle around everything (regular at infinity since B1 = O(z^-2)), and
basepoint-connected lassos whose ordered product reproduces the big loop.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..contours import Contour, circle, lasso
from ..ode_engine import IntegratorOptions, PoleOnPath, integrate_matrix_ode

__all__ = [
    "PoleCollision",
    "monodromy",
    "pole_circle",
    "basepoint_for",
    "ordered_lassos",
    "total_monodromy",
    "MonodromyDrift",
    "isomonodromy_drift",
    "DEFAULT_CLEARANCE_FACTOR",
]

# minimum pole clearance, as a fraction of the smallest pole separation
DEFAULT_CLEARANCE_FACTOR = 1e-2


class PoleCollision(ValueError):
    """Poles of a deformation family cross a tracked loop."""


def monodromy(coefficient, loop: Contour, opts: IntegratorOptions | None = None):
    """Fundamental-solution transport around a closed loop.

    Returns (matrix, trace); det = 1 up to integration error for traceless
    coefficients.
    """
    if not loop.is_closed(1e-9):
        raise ValueError("monodromy needs a closed loop")
    M = integrate_matrix_ode(coefficient, loop, np.eye(2, dtype=complex), opts)
    return M, complex(np.trace(M))


def _min_separation(locations):
    locs = list(locations)
    if len(locs) < 2:
        return 2.0 * (1.0 + max((abs(z) for z in locs), default=1.0))
    return min(abs(a - b) for i, a in enumerate(locs) for b in locs[i + 1:])


def pole_circle(conn, index, radius_factor: float = 0.3):
    locs = [p.location for p in conn.poles]
    r = radius_factor * _min_separation(locs)
    return circle(locs[index], r)


def basepoint_for(locations):
    """Common basepoint above and left of the configuration.

    From there, counterclockwise angular order of the poles agrees with
    lexicographic (Re, Im) order: the downward view orders by real part,
    and for vertically stacked poles the left offset breaks the tie in
    favor of increasing imaginary part.
    """
    locs = np.asarray(list(locations), dtype=complex)
    spread = max(float(np.max(np.abs(locs - np.mean(locs)))), 1.0)
    return complex(float(np.min(locs.real)) - 0.37 * spread,
                   float(np.max(locs.imag)) + 2.3 * spread)


def ordered_lassos(conn, radius_factor: float = 0.22,
                   clearance_factor: float = DEFAULT_CLEARANCE_FACTOR):
    """Lassos around each pole from a common basepoint.

    Poles are ordered by increasing real part, then increasing imaginary
    part; approach paths detour on a common side, so the family is mutually
    non-crossing and the ordered product of the loop monodromies contracts
    through infinity to the identity.
    """
    poles = sorted(conn.poles, key=lambda p: (p.location.real, p.location.imag))
    locs = [p.location for p in poles]
    sep = _min_separation(locs)
    radius = radius_factor * sep
    clearance = max(clearance_factor * sep, 0.5 * sep)
    bp = basepoint_for(locs)
    loops = []
    for p in poles:
        others = [q.location for q in poles if q is not p]
        loops.append(lasso(bp, p.location, radius, avoid=others, clearance=clearance))
    return poles, loops


def total_monodromy(conn, opts: IntegratorOptions | None = None,
                    radius_factor: float = 0.3):
    """Product of per-pole monodromies and the big-circle transport.

    Returns (product_matrix, big_circle_matrix); both should be the identity
    (trace 2) since z = infinity is a regular point.
    """
    poles, loops = ordered_lassos(conn, radius_factor=radius_factor)
    mats = [monodromy(conn, lp, opts)[0] for lp in loops]
    prod = np.eye(2, dtype=complex)
    for M in mats:
        prod = M @ prod
    rmax = max(abs(p.location) for p in poles)
    big = circle(0.0, 2.0 * (1.0 + rmax))
    Mbig = monodromy(conn, big, opts)[0]
    return prod, Mbig


@dataclass(frozen=True)
class MonodromyDrift:
    times: np.ndarray
    traces: np.ndarray        # shape (n_loops, n_times)
    drift: float
    pole_tracks: np.ndarray   # shape (n_loops, n_times) complex locations


def _match(previous, current):
    """Greedy nearest matching of pole locations, previous -> current."""
    cur = list(current)
    out = []
    for z in previous:
        j = int(np.argmin([abs(z - c) for c in cur]))
        out.append(cur.pop(j))
    return out


def isomonodromy_drift(family, opts: IntegratorOptions | None = None,
                       radius_factor: float = 0.3,
                       clearance_factor: float = DEFAULT_CLEARANCE_FACTOR) -> MonodromyDrift:
    """Trace drift of per-pole monodromies across a t-family of connections.

    `family` is a sequence of (t, RationalConnection).  Loops are circles
    recentered on the tracked poles; radii shrink if poles approach, and a
    PoleCollision is raised when the clearance floor is violated.
    """
    times = np.array([t for t, _ in family], dtype=float)
    conns = [c for _, c in family]
    locs0 = [p.location for p in conns[0].poles]
    n = len(locs0)
    sep0 = _min_separation(locs0)
    radius = radius_factor * sep0
    clearance = clearance_factor * sep0

    tracks = np.zeros((n, len(conns)), dtype=complex)
    tracks[:, 0] = locs0
    for j in range(1, len(conns)):
        matched = _match(tracks[:, j - 1], [p.location for p in conns[j].poles])
        tracks[:, j] = matched

    for j, conn in enumerate(conns):
        sep = _min_separation(tracks[:, j])
        if sep < 2.2 * radius:
            radius = sep / 2.5
        if radius < clearance:
            raise PoleCollision(
                f"poles at t={times[j]} approach within the clearance floor")

    traces = np.zeros((n, len(conns)), dtype=complex)
    for k in range(n):
        for j, conn in enumerate(conns):
            loop = circle(tracks[k, j], radius)
            traces[k, j] = monodromy(conn, loop, opts)[1]
    drift = float(np.max(np.abs(traces - traces[:, :1])))
    return MonodromyDrift(times=times, traces=traces, drift=drift,
                          pole_tracks=tracks)
