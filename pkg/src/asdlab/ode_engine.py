"""Adaptive explicit Runge-Kutta integration over complex state vectors.

Dormand-Prince 5(4) pair with the standard quartic dense-output interpolant.
States are complex throughout (real systems embed with zero imaginary parts),
movable singularities are reported as structured blow-up terminations, and
2x2 fundamental solutions can be transported along contours in the complex
plane.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .contours import Contour

__all__ = [
    "StateVector",
    "IntegratorOptions",
    "Termination",
    "Trajectory",
    "integrate",
    "dense_eval",
    "integrate_matrix_ode",
    "trajectory_to_csv",
    "ImmediateFieldFailure",
    "OutOfSpan",
    "PoleOnPath",
]


class ImmediateFieldFailure(ValueError):
    """The vector field is non-finite at the initial point."""


class OutOfSpan(ValueError):
    """Dense evaluation requested outside the covered interval."""


class PoleOnPath(ValueError):
    """A transport contour passes too close to a pole of the coefficient."""


@dataclass(frozen=True)
class StateVector:
    """Ordered complex entries of a flow state."""

    entries: np.ndarray

    def __init__(self, entries):
        arr = np.atleast_1d(np.asarray(entries, dtype=complex))
        if arr.ndim != 1:
            raise ValueError("state must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "entries", arr)

    @property
    def dimension(self):
        return self.entries.size

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    blow_up_threshold: float = 1e8
    max_steps: int = 200_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_step <= 0 or self.blow_up_threshold <= 0:
            raise ValueError("max_step and blow_up_threshold must be positive")


@dataclass(frozen=True)
class Termination:
    kind: str  # "completed" | "blow_up" | "step_failure"
    t: float

    @property
    def completed(self):
        return self.kind == "completed"


# Dormand-Prince 5(4) tableau (FSAL, 7 stages).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([
    5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40,
])
# Quartic dense-output coefficients: y(t0 + s h) = y0 + h * K^T P [s, s^2, s^3, s^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass(frozen=True)
class Trajectory:
    """Dense-output solution of a flow, queryable at arbitrary times."""

    times: np.ndarray            # accepted node times, strictly monotone
    states: np.ndarray           # shape (n_nodes, dim)
    interp: np.ndarray           # shape (n_steps, dim, 4) dense coefficients
    termination: Termination
    field: object = field(repr=False, default=None, compare=False)

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    @property
    def span(self):
        return (self.t_start, self.t_end)

    @property
    def final_state(self):
        return StateVector(self.states[-1])

    def at(self, t):
        return dense_eval(self, t)


def _error_norm(err, y0, y1, opts):
    scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(field, t0, y0, f0, direction, opts):
    scale = opts.abs_tol + opts.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = np.asarray(field(t0 + h0 * direction, y1), dtype=complex)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, opts.max_step)


def integrate(field, y0, span, opts: IntegratorOptions | None = None) -> Trajectory:
    """Integrate y' = field(t, y) over span, forward or reverse in time."""
    opts = opts or IntegratorOptions()
    if isinstance(y0, StateVector):
        y = y0.entries.copy()
    else:
        y = np.atleast_1d(np.asarray(y0, dtype=complex)).copy()
    t0, t1 = float(span[0]), float(span[1])
    if t0 == t1:
        raise ValueError("integration span is degenerate")
    direction = 1.0 if t1 > t0 else -1.0

    f = np.asarray(field(t0, y), dtype=complex)
    if not np.all(np.isfinite(f)):
        raise ImmediateFieldFailure(f"field is non-finite at t={t0}")

    times = [t0]
    states = [y.copy()]
    interp = []
    t = t0
    h = min(_initial_step(field, t0, y, f, direction, opts), abs(t1 - t0))
    termination = None
    n_accepted = 0

    for _ in range(opts.max_steps):
        if direction * (t - t1) >= 0:
            termination = Termination("completed", t)
            break
        h = min(h, abs(t1 - t), opts.max_step)
        h_min = 16 * np.finfo(float).eps * max(abs(t), 1.0)
        if h < h_min:
            if n_accepted == 0:
                raise ImmediateFieldFailure("step size underflow before any progress")
            termination = Termination("step_failure", t)
            break

        hs = h * direction
        K = np.empty((7, y.size), dtype=complex)
        K[0] = f
        failed = False
        for i in range(1, 7):
            yi = y + hs * (_A[i] @ K[:i])
            K[i] = field(t + _C[i] * hs, yi)
            if not np.all(np.isfinite(K[i])):
                failed = True
                break
        if not failed:
            y_new = y + hs * (_B5 @ K)
            err = hs * ((_B5 - _B4) @ K)
            finite = np.all(np.isfinite(y_new))
            err_norm = _error_norm(err, y, y_new, opts) if finite else np.inf
        else:
            err_norm = np.inf

        if err_norm <= 1.0:
            interp.append(hs * (K.T @ _P))
            t = t1 if abs(t + hs - t1) < h_min else t + hs
            y = y_new
            f = K[6]  # FSAL
            times.append(t)
            states.append(y.copy())
            n_accepted += 1
            if np.max(np.abs(y)) > opts.blow_up_threshold:
                termination = Termination("blow_up", t)
                break
            factor = 0.9 * err_norm ** -0.2 if err_norm > 0 else 5.0
            h = h * min(5.0, max(0.2, factor))
        else:
            h = h * max(0.2, 0.9 * err_norm ** -0.2 if np.isfinite(err_norm) else 0.2)
    else:
        termination = Termination("step_failure", t)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        interp=np.array(interp) if interp else np.zeros((0, y.size, 4)),
        termination=termination,
        field=field,
    )


def dense_eval(traj: Trajectory, t) -> StateVector:
    """Continuous interpolant, exact at node times."""
    t = float(t)
    times = traj.times
    direction = 1.0 if times[-1] >= times[0] else -1.0
    lo, hi = (times[0], times[-1]) if direction > 0 else (times[-1], times[0])
    pad = 1e-12 * (1.0 + abs(lo) + abs(hi))
    if t < lo - pad or t > hi + pad:
        raise OutOfSpan(f"t={t} outside covered interval [{lo}, {hi}]")
    t = min(max(t, lo), hi)
    if direction > 0:
        idx = int(np.searchsorted(times, t, side="right") - 1)
    else:
        idx = int(np.searchsorted(-times, -t, side="right") - 1)
    idx = min(max(idx, 0), len(times) - 2)
    ta, tb = times[idx], times[idx + 1]
    if t == ta or tb == ta:
        return StateVector(traj.states[idx])
    if t == tb:
        return StateVector(traj.states[idx + 1])
    s = (t - ta) / (tb - ta)
    powers = np.array([s, s * s, s ** 3, s ** 4])
    return StateVector(traj.states[idx] + traj.interp[idx] @ powers)


def integrate_matrix_ode(coefficient, path: Contour, Y0, opts: IntegratorOptions | None = None):
    """Transport dY/dz = coefficient(z) Y along a contour.

    Returns the 2x2 fundamental solution at the end of the path with
    Y(start) = Y0.  Raises PoleOnPath when the coefficient norm exceeds the
    blow-up threshold anywhere the integrator samples.
    """
    opts = opts or IntegratorOptions()
    Y = np.asarray(Y0, dtype=complex).reshape(2, 2)

    for seg in path.segments:
        def field(s, yflat, seg=seg):
            z = seg.point(s)
            B = np.asarray(coefficient(z), dtype=complex)
            if not np.all(np.isfinite(B)) or np.max(np.abs(B)) > opts.blow_up_threshold:
                raise PoleOnPath(f"coefficient blows up at z={z}")
            return (seg.velocity(s) * (B @ yflat.reshape(2, 2))).ravel()

        traj = integrate(field, Y.ravel(), (0.0, 1.0), opts)
        if not traj.termination.completed:
            raise PoleOnPath(
                f"transport did not cover a segment (termination {traj.termination.kind})"
            )
        Y = traj.states[-1].reshape(2, 2)
    return Y


def trajectory_to_csv(traj: Trajectory, target=None) -> str:
    """CSV export with header t,re(y_0),im(y_0),...; 17 significant digits."""
    dim = traj.states.shape[1]
    header = "t," + ",".join(f"re(y_{k}),im(y_{k})" for k in range(dim))
    buf = io.StringIO()
    buf.write(header + "\n")
    for t, row in zip(traj.times, traj.states):
        cells = [f"{t:.17g}"]
        for v in row:
            cells.append(f"{v.real:.17g}")
            cells.append(f"{v.imag:.17g}")
        buf.write(",".join(cells) + "\n")
    text = buf.getvalue()
    if target is not None:
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", encoding="utf-8") as fh:
                fh.write(text)
    return text
