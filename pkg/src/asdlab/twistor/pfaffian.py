"""Pfaffian (1,0)-forms of the twistor lift and the anti-self-duality residual.

A flow state is turned into an orthonormal coframe germ (coefficients as
jets in t), the connection forms are obtained from the first structure
equation by a linear solve over jets, and the three (1,0)-forms are
assembled.  The vertical form's connection slots admit three index
conventions ("readings"); the default is the one under which anti-self-dual
flow data is certified integrable and flat by the numerical tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import asd_systems
from ..series import Jet, ZPolyJet, solve_linear_jets
from .forms import (BASIS, DT, DZ, S1, S2, S3, InvariantForm, exterior_derivative,
                    form_norm, one_form, wedge)

__all__ = [
    "FrameGerm",
    "PfaffianTriple",
    "StructureEquationViolated",
    "DegenerateTriple",
    "READINGS",
    "frame_germ",
    "solve_connection",
    "pfaffian_forms",
    "triple_from_state",
    "asd_residual",
]

READINGS = ("cyclic", "symmetric", "printed")

_TWO_FORM_KEYS = tuple(
    (i, j) for i in range(5) for j in range(i + 1, 5)
)


class StructureEquationViolated(ValueError):
    """Frame and connection do not satisfy the first structure equation."""


class DegenerateTriple(ValueError):
    """The three Pfaffian forms are linearly dependent at a sample point."""


@dataclass(frozen=True)
class FrameGerm:
    """Orthonormal coframe with jet coefficients along a flow germ.

    forms[i] is e^i as an InvariantForm; xi holds the frame-rotation rate
    jets (all zero for diagonal metrics); coeffs[i][m] is the f^m-component
    jet of e^i over the coordinate coframe (dt, s1, s2, s3).
    """

    forms: tuple
    coeffs: tuple
    xi: tuple
    nu: int


def _jet_from_row(row):
    return Jet(np.asarray(row, dtype=complex))


def frame_germ(state, order: int = 3) -> FrameGerm:
    """Orthonormal coframe germ for a (non-)diagonal state.

    Scale factors are a = sqrt(w2 w3 / w1) (principal branch), b = w3 / a,
    c = w2 / a, so the products bc = w1, ca = w2, ab = w3 hold exactly even
    for the split reality class with imaginary w's.
    """
    if isinstance(state, asd_systems.NonDiagonalState):
        coeffs = asd_systems.state_taylor(state.to_array(), order, system="nondiagonal")
        xi = tuple(_jet_from_row(coeffs[6 + i]) for i in range(3))
    else:
        arr = state.to_array() if hasattr(state, "to_array") else np.asarray(state, dtype=complex)
        coeffs = asd_systems.state_taylor(arr[:6], order)
        xi = tuple(_jet_from_row(np.zeros(order + 1)) for _ in range(3))
    w = [_jet_from_row(coeffs[i]) for i in range(3)]
    a = (w[1] * w[2] / w[0]).sqrt()
    b = w[2] / a
    c = w[1] / a
    lam = (a * b * c, a, b, c)
    nu = order + 1
    frame_coeffs = []
    frame_forms = []
    for i, l in enumerate(lam):
        row = [None, None, None, None]
        row[i] = l
        frame_coeffs.append(tuple(row))
        frame_forms.append(one_form({i: l}))
    return FrameGerm(forms=tuple(frame_forms), coeffs=tuple(frame_coeffs),
                     xi=xi, nu=nu)


def solve_connection(frame: FrameGerm):
    """Connection forms from de^i + omega^i_j ^ e^j = 0, omega antisymmetric.

    Returns a dict {(i, j): InvariantForm} for i < j; omega^j_i = -omega^i_j.
    The 24 unknown coefficient jets are solved order by order in t.
    """
    nu = frame.nu
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    unknown = {(p, m): k for k, (p, m) in enumerate(
        ((p, m) for p in pairs for m in range(4)))}
    n = len(unknown)

    eq_keys = [(i, kk) for i in range(4) for kk in
               ((a, b) for a in range(4) for b in range(a + 1, 4))]
    eq_index = {ek: r for r, ek in enumerate(eq_keys)}
    A = np.zeros((len(eq_keys), n, nu), dtype=complex)
    bvec = np.zeros((len(eq_keys), nu), dtype=complex)

    zero = Jet(np.zeros(nu, dtype=complex))
    E = [[frame.coeffs[i][m] if frame.coeffs[i][m] is not None else zero
          for m in range(4)] for i in range(4)]

    for i in range(4):
        de = exterior_derivative(frame.forms[i], xi=frame.xi)
        for key, c in de.terms.items():
            if DZ in key:
                raise ValueError("frame forms must not involve dz")
            r = eq_index[(i, key)]
            cj = c.eval_z(0.0)
            bvec[r, : cj.c.size] -= cj.c[:nu]
        for j in range(4):
            if j == i:
                continue
            p = (min(i, j), max(i, j))
            sgn = 1.0 if i < j else -1.0
            for m in range(4):
                col = unknown[(p, m)]
                for nb in range(4):
                    ej = E[j][nb]
                    if not np.any(ej.c):
                        continue
                    if m == nb:
                        continue
                    key = (min(m, nb), max(m, nb))
                    wsign = 1.0 if m < nb else -1.0
                    r = eq_index[(i, key)]
                    A[r, col, : ej.c.size] += sgn * wsign * ej.c[:nu]

    x = solve_linear_jets(A, bvec)
    omega = {}
    for p in pairs:
        coeffs = {}
        for m in range(4):
            cj = Jet(x[unknown[(p, m)]])
            if np.any(np.abs(cj.c) > 0):
                coeffs[m] = cj
        omega[p] = one_form(coeffs) if coeffs else InvariantForm(1, {})
    return omega


def _structure_residual(frame: FrameGerm, omega) -> float:
    worst = 0.0
    for i in range(4):
        res = exterior_derivative(frame.forms[i], xi=frame.xi)
        for j in range(4):
            if j == i:
                continue
            p = (min(i, j), max(i, j))
            om = omega[p] if i < j else -omega[p]
            res = res + wedge(om, frame.forms[j])
        worst = max(worst, res.max_abs(0.0))
    return worst


def _omega_get(omega, i, j):
    if i < j:
        return omega[(i, j)]
    return -omega[(j, i)]


@dataclass(frozen=True)
class PfaffianTriple:
    """The three (1,0)-forms of the twistor lift along a flow germ."""

    theta1: InvariantForm
    theta2: InvariantForm
    theta3: InvariantForm
    frame: FrameGerm = field(repr=False, default=None)
    reading: str = "cyclic"

    @property
    def forms(self):
        return (self.theta1, self.theta2, self.theta3)


def pfaffian_forms(frame: FrameGerm, omega, reading: str = "cyclic",
                   enforce_structure: bool = True, tol: float = 1e-10) -> PfaffianTriple:
    """Assemble the (1,0)-forms from a coframe and its connection forms.

    reading selects the index convention for the vertical form's connection
    slots: "cyclic" (default, the convention certified by the flatness
    tests), "symmetric" (slots shifted by one cycle, constant term mirroring
    the z^2 term), and "printed" (like symmetric but with the constant term's
    first slot degraded to omega^0_1, kept only for comparison tests).
    """
    if reading not in READINGS:
        raise ValueError(f"unknown reading {reading!r}")
    if enforce_structure:
        res = _structure_residual(frame, omega)
        if res > tol:
            raise StructureEquationViolated(
                f"first structure equation violated by {res:.3e} (tol {tol:.1e})")

    e0, e1, e2, e3 = frame.forms
    nu = frame.nu
    z = ZPolyJet.z_monomial(1, nu)
    half = 0.5
    i_ = 1j

    theta1 = z * (e1 + i_ * e2) - (e0 + i_ * e3)
    theta2 = z * (e0 - i_ * e3) + (e1 - i_ * e2)

    s_comb = [
        _omega_get(omega, 0, 1) - _omega_get(omega, 2, 3),
        _omega_get(omega, 0, 2) - _omega_get(omega, 3, 1),
        _omega_get(omega, 0, 3) - _omega_get(omega, 1, 2),
    ]
    zsq = z * z
    if reading == "cyclic":
        quad, lin = s_comb[0], s_comb[1]
        cross = s_comb[2]
        const = (half * quad) - (half * i_) * lin
    elif reading == "symmetric":
        quad, lin = s_comb[2], s_comb[0]
        cross = s_comb[1]
        const = (half * quad) - (half * i_) * lin
    else:  # printed
        quad, lin = s_comb[2], s_comb[0]
        cross = s_comb[1]
        const_a = _omega_get(omega, 0, 1) - _omega_get(omega, 1, 2)
        const_b = _omega_get(omega, 0, 1) - _omega_get(omega, 2, 3)
        const = half * const_a - (half * i_) * const_b
    theta3 = (one_form({DZ: ZPolyJet.const(1.0, nu)})
              + (half * zsq) * quad + (half * i_ * zsq) * lin
              - (i_ * z) * cross + const)

    return PfaffianTriple(theta1=theta1, theta2=theta2, theta3=theta3,
                          frame=frame, reading=reading)


def triple_from_state(state, order: int = 3, reading: str = "cyclic") -> PfaffianTriple:
    """Frame, connection and Pfaffian triple straight from a flow state."""
    frame = frame_germ(state, order=order)
    omega = solve_connection(frame)
    return pfaffian_forms(frame, omega, reading=reading)


def asd_residual(triple: PfaffianTriple, z_samples, rtol_dependence: float = 1e-10) -> float:
    """Integrability defect of the Pfaffian system at the given z-samples.

    For each sample, d(theta_i) is decomposed against the ideal generated by
    the triple (least squares over the 2-form basis); the relative remainder
    is the residual.  Zero for anti-self-dual data.
    """
    xi = triple.frame.xi if triple.frame is not None else None
    thetas = triple.forms
    dthetas = [exterior_derivative(th, xi=xi) for th in thetas]

    generators = []
    for th in thetas:
        for m in range(5):
            basis_form = one_form({m: ZPolyJet.const(1.0, 1)})
            generators.append(wedge(th, basis_form))

    worst = 0.0
    for z0 in np.atleast_1d(z_samples):
        T = np.array([th.vector(z0, [(m,) for m in range(5)]) for th in thetas])
        smin = np.linalg.svd(T, compute_uv=False)[-1]
        smax = np.linalg.svd(T, compute_uv=False)[0]
        if smin <= rtol_dependence * max(smax, 1.0):
            raise DegenerateTriple(f"Pfaffian forms linearly dependent at z={z0}")
        Gmat = np.array([g.vector(z0, _TWO_FORM_KEYS) for g in generators]).T
        for dth in dthetas:
            target = dth.vector(z0, _TWO_FORM_KEYS)
            coef, *_ = np.linalg.lstsq(Gmat, target, rcond=None)
            rem = target - Gmat @ coef
            scale = max(1.0, float(np.linalg.norm(target)))
            worst = max(worst, float(np.linalg.norm(rem)) / scale)
    return worst
