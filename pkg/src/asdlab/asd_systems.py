"""SU(2)-invariant anti-self-dual metric flows and their reductions.

The diagonal flow evolves (w1, w2, w3, a1, a2, a3); the non-diagonal flow
adds frame-rotation rates (x1, x2, x3).  Entries may be complex: the split
signature (+,+,-,-) is realized by states with one real w and two imaginary
w's (real a's), which the flow preserves.

The xi-equations are instantiated from one cyclic template; the printed
sources of this system carry two index typos that break the cyclic symmetry,
and the symmetric pattern is the one certified anti-self-dual by the
twistor-side residual tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import ode_engine
from .ode_engine import IntegratorOptions, Trajectory, dense_eval, integrate
from .painleve import PainleveKind, PainleveParams
from .series import Jet

__all__ = [
    "DiagonalState",
    "NonDiagonalState",
    "Family",
    "DegenerateW",
    "DegenerateAlpha",
    "diagonal_rhs",
    "nondiagonal_rhs",
    "diagonal_field",
    "nondiagonal_field",
    "integrate_diagonal",
    "integrate_nondiagonal",
    "first_integral_k",
    "state_taylor",
    "ReducedData",
    "reduce_to_pvi",
    "finite_difference_qpp",
    "detect_family",
    "FrameRotation",
    "reconstruct_frame_rotation",
    "MetricCoefficients",
    "metric_coefficients",
]

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
_COINCIDENCE_TOL = 1e-12


class DegenerateW(ValueError):
    """Two w-coefficients coincide (the xi-equations lose their leading factor)."""


class DegenerateAlpha(ValueError):
    """Two auxiliary functions coincide (first-integral denominator vanishes)."""


@dataclass(frozen=True)
class DiagonalState:
    w: tuple
    a: tuple
    t: float = 0.0

    def __post_init__(self):
        w = tuple(complex(v) for v in self.w)
        a = tuple(complex(v) for v in self.a)
        if len(w) != 3 or len(a) != 3:
            raise ValueError("need three w's and three a's")
        vals = np.array(w + a)
        if not np.all(np.isfinite(vals)):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "a", a)

    def to_array(self):
        return np.array(self.w + self.a, dtype=complex)

    @classmethod
    def from_array(cls, arr, t=0.0):
        arr = np.asarray(arr, dtype=complex)
        return cls(w=tuple(arr[:3]), a=tuple(arr[3:6]), t=t)


@dataclass(frozen=True)
class NonDiagonalState:
    w: tuple
    a: tuple
    xi: tuple
    t: float = 0.0

    def __post_init__(self):
        w = tuple(complex(v) for v in self.w)
        a = tuple(complex(v) for v in self.a)
        xi = tuple(complex(v) for v in self.xi)
        if len(w) != 3 or len(a) != 3 or len(xi) != 3:
            raise ValueError("need three w's, a's and xi's")
        vals = np.array(w + a + xi)
        if not np.all(np.isfinite(vals)):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "xi", xi)

    def to_array(self):
        return np.array(self.w + self.a + self.xi, dtype=complex)

    @classmethod
    def from_array(cls, arr, t=0.0):
        arr = np.asarray(arr, dtype=complex)
        return cls(w=tuple(arr[:3]), a=tuple(arr[3:6]), xi=tuple(arr[6:9]), t=t)


def _diag_rates(y):
    """Six time-derivatives; works on anything with ring arithmetic."""
    w1, w2, w3, a1, a2, a3 = y
    return [
        -w2 * w3 + w1 * (a2 + a3),
        -w3 * w1 + w2 * (a3 + a1),
        -w1 * w2 + w3 * (a1 + a2),
        -a2 * a3 + a1 * (a2 + a3),
        -a3 * a1 + a2 * (a3 + a1),
        -a1 * a2 + a3 * (a1 + a2),
    ]


def _check_w_distinct(w):
    scale = max(1.0, max(abs(v) ** 2 for v in w))
    for i, j, k in _CYCLIC:
        if abs(w[j] ** 2 - w[k] ** 2) <= _COINCIDENCE_TOL * scale:
            raise DegenerateW(f"w_{j+1}^2 and w_{k+1}^2 coincide within tolerance")


def _nondiag_rates(y, check=True):
    """Nine time-derivatives of (w, a, xi), cyclic template throughout."""
    w = y[0:3]
    a = y[3:6]
    xi = y[6:9]
    if check:
        _check_w_distinct(w)
    u = [xi[i] / (w[j] * w[k]) for i, j, k in _CYCLIC]
    wsq = [v * v for v in w]
    dw = [-w[j] * w[k] + w[i] * (a[j] + a[k]) for i, j, k in _CYCLIC]
    da = []
    for i, j, k in _CYCLIC:
        da.append(
            -a[j] * a[k] + a[i] * (a[j] + a[k])
            + 0.25 * (wsq[j] - wsq[k]) ** 2 * u[i] ** 2
            + 0.25 * (wsq[k] - wsq[i]) * (3 * wsq[i] + wsq[k]) * u[j] ** 2
            + 0.25 * (wsq[j] - wsq[i]) * (3 * wsq[i] + wsq[j]) * u[k] ** 2
        )
    dxi = []
    for i, j, k in _CYCLIC:
        # the u_i-bracket is a_j(w_j^2 + 3w_k^2) - a_k(w_k^2 + 3w_j^2): the only
        # form covariant under swapping (j,k), certified by the twistor-side
        # integrability residual
        du_i = (
            u[j] * u[k] * (-2 * wsq[j] * wsq[k] + wsq[k] * wsq[i] + wsq[i] * wsq[j])
            + u[i] * (a[j] * wsq[j] - a[k] * wsq[k] + 3 * a[j] * wsq[k] - 3 * a[k] * wsq[j])
        ) / (wsq[j] - wsq[k])
        dxi.append(du_i * w[j] * w[k] + u[i] * (dw[j] * w[k] + w[j] * dw[k]))
    return dw + da + dxi


def diagonal_rhs(s: DiagonalState) -> DiagonalState:
    """Time-derivative of a diagonal flow state, packaged as a state."""
    d = _diag_rates(list(s.to_array()))
    return DiagonalState(w=tuple(d[:3]), a=tuple(d[3:]), t=s.t)


def nondiagonal_rhs(s: NonDiagonalState) -> NonDiagonalState:
    d = _nondiag_rates(list(s.to_array()))
    return NonDiagonalState(w=tuple(d[:3]), a=tuple(d[3:6]), xi=tuple(d[6:9]), t=s.t)


def diagonal_field(t, y):
    return np.array(_diag_rates(list(y)), dtype=complex)


def nondiagonal_field(t, y):
    return np.array(_nondiag_rates(list(y)), dtype=complex)


def integrate_diagonal(state: DiagonalState, span, opts: IntegratorOptions | None = None):
    return integrate(diagonal_field, state.to_array(), span, opts)


def integrate_nondiagonal(state: NonDiagonalState, span, opts: IntegratorOptions | None = None):
    _check_w_distinct(state.w)
    return integrate(nondiagonal_field, state.to_array(), span, opts)


def _check_a_distinct(a):
    for i in range(3):
        for j in range(i + 1, 3):
            scale = max(1.0, abs(a[i]), abs(a[j]))
            if abs(a[i] - a[j]) <= _COINCIDENCE_TOL * scale:
                raise DegenerateAlpha(f"a_{i+1} and a_{j+1} coincide within tolerance")


def first_integral_k(s) -> complex:
    """Conserved quantity of the diagonal flow (rational in the state)."""
    if isinstance(s, np.ndarray):
        w, a = s[:3], s[3:6]
    else:
        w, a = s.w, s.a
    _check_a_distinct(a)
    num = (a[0] * (w[1] ** 2 - w[2] ** 2)
           + a[1] * (w[2] ** 2 - w[0] ** 2)
           + a[2] * (w[0] ** 2 - w[1] ** 2))
    den = 8.0 * (a[0] - a[1]) * (a[1] - a[2]) * (a[2] - a[0])
    return num / den


def state_taylor(y0, order, system="diagonal"):
    """Taylor coefficients of the flow solution through y0, exact recursion.

    Returns an array of shape (dim, order + 1): column m holds the u^m
    coefficients of the local solution y(t0 + u).
    """
    y0 = np.asarray(y0, dtype=complex)
    rates = _diag_rates if system == "diagonal" else (
        lambda y: _nondiag_rates(y, check=False))
    if system == "nondiagonal":
        _check_w_distinct(y0[:3])
    dim = y0.size
    coeffs = np.zeros((dim, order + 1), dtype=complex)
    coeffs[:, 0] = y0
    for m in range(order):
        yj = [Jet(coeffs[i, : m + 1]) for i in range(dim)]
        f = rates(yj)
        for i in range(dim):
            fi = f[i]
            cm = fi.c[m] if isinstance(fi, Jet) and fi.c.size > m else (
                fi.c[-1] * 0 if isinstance(fi, Jet) else complex(fi))
            coeffs[i, m + 1] = cm / (m + 1)
    return coeffs


@dataclass(frozen=True)
class ReducedData:
    """Samples of the reduced variables (x, q, dq/dx) along a trajectory."""

    times: np.ndarray
    x: np.ndarray
    q: np.ndarray
    qp: np.ndarray
    k: complex
    branch: int
    dropped: dict = field(default_factory=dict)

    def __len__(self):
        return self.x.size


def _reduction_jets(arr, sqrt2k, order=2):
    """Jets of (x, q) at one state; raises on degenerate configurations."""
    coeffs = state_taylor(arr, order)
    w = [Jet(coeffs[i]) for i in range(3)]
    a = [Jet(coeffs[3 + i]) for i in range(3)]
    x = (a[1] - a[0]) / (a[1] - a[2])
    wsq = [v * v for v in w]
    q_num = w[1] * (a[0] - a[1]) * (
        w[1] * (wsq[0] - wsq[2]) + (2.0 * sqrt2k) * w[0] * w[2] * (a[0] - a[2]))
    q_den = (wsq[0] * (wsq[1] - wsq[2]) * a[0]
             + wsq[1] * (wsq[2] - wsq[0]) * a[1]
             + wsq[2] * (wsq[0] - wsq[1]) * a[2])
    return x, q_num, q_den


def reduce_to_pvi(traj: Trajectory, branch: int = +1, n_samples: int = 41,
                  times=None):
    """Reduce a diagonal flow trajectory to Painleve VI data.

    Returns (ReducedData, PainleveParams).  Samples where the chain rule
    degenerates (stationary x), where x hits a fixed singularity, or where
    the q-denominator vanishes are dropped and reported in `dropped`.
    """
    if branch not in (+1, -1):
        raise ValueError("branch must be +1 or -1")
    if times is None:
        times = np.linspace(traj.t_start, traj.t_end, n_samples + 2)[1:-1]
    y_first = dense_eval(traj, times[0]).entries
    _check_a_distinct(y_first[3:6])
    _check_w_distinct(y_first[:3])
    k = first_integral_k(y_first)
    sqrt2k = branch * np.sqrt(complex(2.0 * k))

    kept_t, xs, qs, qps = [], [], [], []
    dropped = {"stationary_x": [], "fixed_singularity": [], "q_denominator": []}
    for t in times:
        arr = dense_eval(traj, t).entries
        _check_a_distinct(arr[3:6])
        _check_w_distinct(arr[:3])
        x, q_num, q_den = _reduction_jets(arr, sqrt2k)
        x0 = x.c[0]
        scale_den = max(1.0, max(abs(v) for v in arr) ** 6)
        if abs(q_den.c[0]) <= 1e-12 * scale_den:
            dropped["q_denominator"].append(float(t))
            continue
        if min(abs(x0), abs(x0 - 1.0)) <= 1e-8 * (1.0 + abs(x0)):
            dropped["fixed_singularity"].append(float(t))
            continue
        xdot = x.c[1]
        if abs(xdot) <= 1e-10 * (1.0 + abs(x0)):
            dropped["stationary_x"].append(float(t))
            continue
        q = q_num / q_den
        kept_t.append(float(t))
        xs.append(x0)
        qs.append(q.c[0])
        qps.append(q.c[1] / xdot)

    params = PainleveParams(
        kind=PainleveKind.VI,
        alpha=(sqrt2k - 1.0) ** 2 / 2.0,
        beta=k,
        gamma=-k,
        delta=(1.0 + 2.0 * k) / 2.0,
    )
    data = ReducedData(
        times=np.array(kept_t), x=np.array(xs), q=np.array(qs),
        qp=np.array(qps), k=k, branch=branch, dropped=dropped,
    )
    return data, params


def _xq_at(traj, t, sqrt2k):
    x, q_num, q_den = _reduction_jets(dense_eval(traj, t).entries, sqrt2k)
    return x.c[0], x.c[1], (q_num / q_den).c[0]


def finite_difference_qpp(traj: Trajectory, t0: float, k: complex, branch: int,
                          h: float = 1e-4):
    """Independent second derivative of q with respect to x.

    Inverts x(t) = x0 +- h by Newton iteration on the dense output and takes
    a central difference; shares nothing with the analytic chain rule used
    by the reduction itself.
    """
    sqrt2k = branch * np.sqrt(complex(2.0 * k))
    x0, xdot0, q0 = _xq_at(traj, t0, sqrt2k)
    step = h * max(1.0, abs(x0))

    def invert(target):
        t = t0 + (target - x0).real / xdot0.real if xdot0.real != 0 else t0
        for _ in range(60):
            x, xdot, _ = _xq_at(traj, t, sqrt2k)
            delta = (x - target) / xdot
            t = t - delta.real
            if abs(delta) < 1e-14 * (1.0 + abs(t)):
                break
        return t

    t_plus = invert(x0 + step)
    t_minus = invert(x0 - step)
    _, _, q_plus = _xq_at(traj, t_plus, sqrt2k)
    _, _, q_minus = _xq_at(traj, t_minus, sqrt2k)
    return (q_plus - 2.0 * q0 + q_minus) / step ** 2


class Family(str, Enum):
    GENERIC = "Generic"
    DIAGONAL = "Diagonal"
    ATIYAH_HITCHIN = "AtiyahHitchin"
    BGPP = "BGPP"


def detect_family(s, tol: float = 1e-10) -> Family:
    """Classify a state by its invariant locus."""
    xi = getattr(s, "xi", (0.0, 0.0, 0.0))
    if max(abs(complex(v)) for v in xi) > tol:
        return Family.GENERIC
    w = np.array([complex(v) for v in s.w])
    a = np.array([complex(v) for v in s.a])
    scale = max(1.0, float(np.max(np.abs(w))), float(np.max(np.abs(a))))
    if np.max(np.abs(a - w)) <= tol * scale:
        return Family.ATIYAH_HITCHIN
    if np.max(np.abs(a)) <= tol:
        return Family.BGPP
    return Family.DIAGONAL


@dataclass(frozen=True)
class FrameRotation:
    """Orthogonal frame-rotation samples R(t) along a non-diagonal flow."""

    times: np.ndarray
    matrices: np.ndarray  # shape (n, 3, 3), real orthogonal, det +1

    def orthogonality_defect(self):
        eye = np.eye(3)
        return max(float(np.max(np.abs(R.T @ R - eye))) for R in self.matrices)


def _xi_matrix(xi):
    x1, x2, x3 = xi
    return np.array([
        [0.0, x3, -x2],
        [-x3, 0.0, x1],
        [x2, -x1, 0.0],
    ])


def reconstruct_frame_rotation(traj: Trajectory, R0=None, times=None,
                               opts: IntegratorOptions | None = None) -> FrameRotation:
    """Integrate dR/dt = Xi(t) R along a non-diagonal trajectory.

    Output samples are polar-projected back onto the orthogonal group, which
    keeps R^T R = I to well below the 1e-8 contract.
    """
    if R0 is None:
        R0 = np.eye(3)
    R0 = np.asarray(R0, dtype=float)
    if np.max(np.abs(R0.T @ R0 - np.eye(3))) > 1e-10:
        raise ValueError("R0 must be orthogonal")
    if times is None:
        times = np.linspace(traj.t_start, traj.t_end, 33)

    def field(t, rflat):
        xi = dense_eval(traj, t).entries[6:9]
        if np.max(np.abs(xi.imag)) > 1e-9 * (1.0 + np.max(np.abs(xi))):
            raise ValueError("frame rotation needs real rotation rates")
        return (_xi_matrix(xi.real) @ rflat.reshape(3, 3).astype(complex)).ravel()

    mats = []
    R = R0.astype(complex)
    t_prev = float(times[0])
    mats.append(_polar_project(R.real))
    for t in times[1:]:
        if t != t_prev:
            sub = integrate(field, R.ravel(), (t_prev, float(t)), opts)
            R = sub.states[-1].reshape(3, 3)
        mats.append(_polar_project(R.real))
        t_prev = float(t)
    return FrameRotation(times=np.asarray(times, dtype=float),
                         matrices=np.array(mats))


def _polar_project(R):
    U, _, Vt = np.linalg.svd(R)
    P = U @ Vt
    if np.linalg.det(P) < 0:
        U[:, -1] = -U[:, -1]
        P = U @ Vt
    return P


@dataclass(frozen=True)
class MetricCoefficients:
    """Scale factors (a, b, c) with bc = w1, ca = w2, ab = w3 and signature."""

    a: complex
    b: complex
    c: complex
    signature: str
    gram: tuple  # diagonal metric coefficients (dt^2, s1^2, s2^2, s3^2)

    @property
    def riemannian(self):
        return self.signature == "riemannian"


def metric_coefficients(s) -> MetricCoefficients:
    w = [complex(v) for v in (s.w if hasattr(s, "w") else s)]
    if any(v == 0 for v in w):
        raise ValueError("metric coefficients need nonzero w's")
    asq = w[1] * w[2] / w[0]
    a = np.sqrt(asq)
    b = w[2] / a
    c = w[1] / a
    gram = (w[0] * w[1] * w[2], asq, w[2] * w[0] / w[1], w[0] * w[1] / w[2])
    tol = 1e-10 * max(1.0, max(abs(g) for g in gram))
    if any(abs(complex(g).imag) > tol for g in gram):
        signature = "complex"
    else:
        negatives = sum(1 for g in gram if complex(g).real < 0)
        signature = {0: "riemannian", 2: "split", 4: "negative_definite"}.get(
            negatives, "lorentzian")
    return MetricCoefficients(a=complex(a), b=complex(b), c=complex(c),
                              signature=signature, gram=gram)
