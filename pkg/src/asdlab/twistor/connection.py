"""From the Pfaffian triple to the rational connection of the linear problem.

The triple decomposes over (dz, dt, s1, s2, s3); inverting the 3x3 block and
assembling the traceless 2x2 matrix of one-forms Sigma = -B1 dz - B2 dt gives
B1 = P1/G, B2 = P2/G with polynomial numerators and G = det A of degree four.
Everything carries jets in t, so d/dt of the connection is exact and the
zero-curvature residual dSigma + Sigma^Sigma is evaluated pointwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..series import Jet, ZPolyJet
from .forms import DT, DZ, S1
from .pfaffian import PfaffianTriple

__all__ = [
    "DiagonalDegeneration",
    "InvariantDecomposition",
    "decompose_triple",
    "ConnectionBundle",
    "build_connection",
    "flatness_residual",
    "Pole",
    "RationalConnection",
    "rational_connection",
    "reality_defect",
    "pole_jet",
]

# Normalization of the su(2) assembly: with ds_i = s_j ^ s_k (verified to hold
# exactly for the decomposition's s-forms), dSigma + Sigma^Sigma = 0 forces the
# prefactor kappa = -1/2 on [[i s1, -s3 + i s2], [s3 + i s2, -i s1]].
_KAPPA = -0.5


class DiagonalDegeneration(ValueError):
    """det A vanishes identically: the metric sits in the BGPP family."""


@dataclass(frozen=True)
class InvariantDecomposition:
    """Coefficients of the triple over dz, dt and the three invariant forms."""

    v: tuple            # three ZPolyJet dt-coefficients
    A: tuple            # 3x3 tuple-of-tuples of ZPolyJet s-coefficients
    nu: int

    def recombine_defect(self, triple: PfaffianTriple, z_probe=(0.41 + 0.17j,)) -> float:
        """Max coefficient mismatch when the decomposition is reassembled."""
        worst = 0.0
        for i, th in enumerate(triple.forms):
            for z0 in z_probe:
                got = {
                    DT: self.v[i].value(z0),
                    S1: self.A[i][0].value(z0),
                    S1 + 1: self.A[i][1].value(z0),
                    S1 + 2: self.A[i][2].value(z0),
                    DZ: 1.0 if i == 2 else 0.0,
                }
                for key, val in got.items():
                    coeff = th.coefficient((key,))
                    have = coeff.value(z0) if coeff is not None else 0.0
                    worst = max(worst, abs(have - val))
        return worst


def _coeff_or_zero(form, idx, nu):
    c = form.coefficient((idx,))
    return c if c is not None else ZPolyJet.const(0.0, nu)


def _rotation_jets(xi, nu):
    """Jets of R(t) solving dR/dt = Xi R, R(t0) = I, Xi the skew rate matrix."""
    Xi = np.zeros((3, 3, nu), dtype=complex)
    x = [np.resize(j.c, nu) if j.c.size >= nu else
         np.concatenate([j.c, np.zeros(nu - j.c.size)]) for j in xi]
    Xi[0, 1], Xi[0, 2] = x[2], -x[1]
    Xi[1, 0], Xi[1, 2] = -x[2], x[0]
    Xi[2, 0], Xi[2, 1] = x[1], -x[0]
    R = np.zeros((3, 3, nu), dtype=complex)
    R[:, :, 0] = np.eye(3)
    for m in range(nu - 1):
        acc = np.zeros((3, 3), dtype=complex)
        for a in range(m + 1):
            acc += Xi[:, :, a] @ R[:, :, m - a]
        R[:, :, m + 1] = acc / (m + 1)
    return R


def decompose_triple(triple: PfaffianTriple) -> InvariantDecomposition:
    """Coefficients of the triple over dz, dt and the left-invariant forms.

    Non-diagonal frames expand naturally over the rotating coframe; the
    s-coefficient block is rotated back to the left-invariant basis (jets of
    R(t) with R = I at the sample time), where the s-forms close under d and
    the connection below is genuinely flat.
    """
    nu = min(
        min(c.nu for c in th.terms.values()) for th in triple.forms
    )
    dz2 = triple.theta3.coefficient((DZ,))
    if dz2 is None or abs(dz2.value(0.0) - 1.0) > 1e-12:
        raise ValueError("third form must have unit dz-coefficient")
    for th in triple.forms[:2]:
        if th.coefficient((DZ,)) is not None:
            raise ValueError("first two forms must have no dz-component")
    v = tuple(_coeff_or_zero(th, DT, nu) for th in triple.forms)
    A = [
        [_coeff_or_zero(th, S1 + m, nu) for m in range(3)]
        for th in triple.forms
    ]
    xi = triple.frame.xi if triple.frame is not None else None
    if xi is not None and any(np.any(np.abs(j.c) > 0) for j in xi):
        R = _rotation_jets(xi, nu)
        A = [
            [sum((A[i][m] * Jet(R[m, l]) for m in range(3)),
                 ZPolyJet.const(0.0, nu)) for l in range(3)]
            for i in range(3)
        ]
    A = tuple(tuple(row) for row in A)
    return InvariantDecomposition(v=v, A=A, nu=nu)


def _det3(A):
    return (A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1])
            - A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0])
            + A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]))


def _adjugate3(A):
    def minor(r, c):
        rows = [i for i in range(3) if i != r]
        cols = [j for j in range(3) if j != c]
        return (A[rows[0]][cols[0]] * A[rows[1]][cols[1]]
                - A[rows[0]][cols[1]] * A[rows[1]][cols[0]])

    adj = [[None] * 3 for _ in range(3)]
    for r in range(3):
        for c in range(3):
            m = minor(r, c)
            adj[c][r] = m if (r + c) % 2 == 0 else -m
    return tuple(tuple(row) for row in adj)


def _poly_scale(p: ZPolyJet) -> float:
    return float(np.max(np.abs(p.c))) if p.c.size else 0.0


@dataclass(frozen=True)
class ConnectionBundle:
    """B1 = P1/G and B2 = P2/G with jet-coefficient polynomial entries."""

    P1: tuple           # 2x2 of ZPolyJet, numerator of B1 (degree <= 2)
    P2: tuple           # 2x2 of ZPolyJet, numerator of B2 (degree <= 3)
    G: ZPolyJet         # det A, degree 4 in z
    decomposition: InvariantDecomposition = field(repr=False, default=None)

    def b1(self, z):
        g = self.G.value(z)
        return np.array([[p.value(z) for p in row] for row in self.P1]) / g

    def b2(self, z):
        g = self.G.value(z)
        return np.array([[p.value(z) for p in row] for row in self.P2]) / g

    def sigma(self, z):
        """Matrix coefficients (Sigma_dz, Sigma_dt) at a point."""
        return -self.b1(z), -self.b2(z)

    def b1_callable(self):
        return lambda z: self.b1(z)

    def g_poly(self):
        """Plain complex coefficient array of G at u=0, ascending powers."""
        return self.G.trim(1e-13 * max(1.0, _poly_scale(self.G))).c[:, 0].copy()

    def trace_defect(self):
        worst = 0.0
        for P in (self.P1, self.P2):
            tr = P[0][0] + P[1][1]
            worst = max(worst, _poly_scale(tr) / max(1.0, _poly_scale(P[0][0])))
        return worst


def _sigma_matrix(n1, n2, n3):
    """kappa [[i n1, -n3 + i n2], [n3 + i n2, -i n1]] over ZPolyJet."""
    i_ = 1j
    return (
        ((i_ * _KAPPA) * n1, _KAPPA * ((-1.0) * n3 + i_ * n2)),
        (_KAPPA * (n3 + i_ * n2), (-i_ * _KAPPA) * n1),
    )


def build_connection(triple: PfaffianTriple, degeneracy_tol: float = 1e-12):
    """Assemble Sigma = -B1 dz - B2 dt from a Pfaffian triple.

    Raises DiagonalDegeneration when det A vanishes identically (the BGPP
    short-circuit); callers that classify should catch it and report the
    family instead of failing.
    """
    dec = decompose_triple(triple)
    A = dec.A
    G = _det3(A)
    scale = max(_poly_scale(c) for row in A for c in row)
    if _poly_scale(G) <= degeneracy_tol * max(1.0, scale ** 3):
        raise DiagonalDegeneration("det A vanishes identically (BGPP family)")
    adj = _adjugate3(A)
    # s^z = -A^{-1} (0,0,1)^T and s^t = -A^{-1} v, cleared of the 1/G factor
    nz = tuple(-adj[i][2] for i in range(3))
    nt = tuple(
        -(adj[i][0] * dec.v[0] + adj[i][1] * dec.v[1] + adj[i][2] * dec.v[2])
        for i in range(3)
    )
    # Sigma = -B1 dz - B2 dt, so the numerators of B1, B2 flip sign
    S1m = _sigma_matrix(*nz)
    S2m = _sigma_matrix(*nt)
    P1 = tuple(tuple(-p for p in row) for row in S1m)
    P2 = tuple(tuple(-p for p in row) for row in S2m)
    gtol = 1e-12 * max(1.0, _poly_scale(G))
    ptol1 = 1e-12 * max(1.0, max(_poly_scale(p) for row in P1 for p in row))
    ptol2 = 1e-12 * max(1.0, max(_poly_scale(p) for row in P2 for p in row))
    return ConnectionBundle(
        P1=tuple(tuple(p.trim(ptol1) for p in row) for row in P1),
        P2=tuple(tuple(p.trim(ptol2) for p in row) for row in P2),
        G=G.trim(gtol),
        decomposition=dec,
    )


def flatness_residual(bundle: ConnectionBundle, z_points) -> float:
    """max over points of || dB1/dt - dB2/dz + [B1, B2] || (relative)."""
    P1, P2, G = bundle.P1, bundle.P2, bundle.G
    G_u, G_z = G.du(), G.dz()

    def mat(f):
        return [[f(P1[i][j]) for j in range(2)] for i in range(2)]

    N = [[None] * 2 for _ in range(2)]
    for i in range(2):
        for j in range(2):
            # numerator of dB1/dt - dB2/dz over G^2
            N[i][j] = (P1[i][j].du() * G - P1[i][j] * G_u
                       - P2[i][j].dz() * G + P2[i][j] * G_z)
            comm = sum(
                (P1[i][k] * P2[k][j] - P2[i][k] * P1[k][j] for k in range(2)),
                ZPolyJet.const(0.0, G.nu),
            )
            N[i][j] = N[i][j] + comm

    worst = 0.0
    for z0 in np.atleast_1d(z_points):
        g2 = bundle.G.value(z0) ** 2
        F = np.array([[N[i][j].value(z0) for j in range(2)] for i in range(2)]) / g2
        scale = max(1.0, float(np.linalg.norm(bundle.b1(z0))) *
                    float(np.linalg.norm(bundle.b2(z0))))
        worst = max(worst, float(np.linalg.norm(F)) / scale)
    return worst


@dataclass(frozen=True)
class Pole:
    """One pole with its principal-part matrices.

    coeffs[p] multiplies (z - location)^-(order - p); coeffs[-1] is the
    residue.
    """

    location: complex
    order: int
    coeffs: tuple  # tuple of 2x2 complex ndarrays

    @property
    def residue(self):
        return self.coeffs[-1]

    @property
    def leading(self):
        return self.coeffs[0]


@dataclass(frozen=True)
class RationalConnection:
    """Pole divisor and principal parts of a traceless rational 2x2 matrix."""

    poles: tuple
    signature: str = "split"

    @property
    def total_order(self):
        return sum(p.order for p in self.poles)

    def evaluate(self, z):
        out = np.zeros((2, 2), dtype=complex)
        for pole in self.poles:
            dz = z - pole.location
            for p, C in enumerate(pole.coeffs):
                out += C / dz ** (pole.order - p)
        return out

    def __call__(self, z):
        return self.evaluate(z)

    def trace_defect(self):
        worst = 0.0
        for pole in self.poles:
            for C in pole.coeffs:
                scale = max(1.0, float(np.max(np.abs(C))))
                worst = max(worst, abs(C[0, 0] + C[1, 1]) / scale)
        return worst

    def to_json_dict(self):
        return {
            "signature": self.signature,
            "poles": [
                {
                    "zeta": [p.location.real, p.location.imag],
                    "order": p.order,
                    "coeffs": [
                        [[[v.real, v.imag] for v in row] for row in C]
                        for C in p.coeffs
                    ],
                }
                for p in self.poles
            ],
        }

    @classmethod
    def from_json_dict(cls, data):
        poles = []
        for pd in data["poles"]:
            loc = complex(pd["zeta"][0], pd["zeta"][1])
            coeffs = tuple(
                np.array([[complex(v[0], v[1]) for v in row] for row in C])
                for C in pd["coeffs"]
            )
            poles.append(Pole(location=loc, order=int(pd["order"]), coeffs=coeffs))
        return cls(poles=tuple(poles), signature=data.get("signature", "split"))


def _newton_polish(coeffs, roots, sweeps=2):
    # coeffs ascending; polish each root once or twice
    dcoeffs = np.polyder(coeffs[::-1])
    for _ in range(sweeps):
        vals = np.polyval(coeffs[::-1], roots)
        dvals = np.polyval(dcoeffs, roots)
        mask = np.abs(dvals) > 1e-300
        roots = roots - np.where(mask, vals / np.where(mask, dvals, 1.0), 0.0)
    return roots


def _cluster(roots, tol):
    clusters = []
    for r in sorted(roots, key=lambda v: (v.real, v.imag)):
        for cl in clusters:
            if abs(r - cl[0] / cl[1]) <= tol:
                cl[0] += r
                cl[1] += 1
                break
        else:
            clusters.append([r, 1])
    return [(cl[0] / cl[1], cl[1]) for cl in clusters]


def _taylor_shift(poly_coeffs, center, n_terms):
    """Ascending Taylor coefficients of p(center + s) up to s^(n_terms-1)."""
    out = np.zeros(n_terms, dtype=complex)
    work = np.asarray(poly_coeffs, dtype=complex).copy()
    fact = 1.0
    for k in range(n_terms):
        if work.size == 0:
            break
        out[k] = np.polyval(work[::-1], center) / fact
        work = np.polyder(work[::-1])[::-1]
        fact *= (k + 1)
    return out


def rational_connection(bundle: ConnectionBundle, signature: str = "split",
                        merge_tol_factor: float = 1e-6) -> RationalConnection:
    """Extract the pole divisor and principal parts of B1 = P1/G.

    Roots of G come from the companion matrix with a Newton polish; roots
    closer than merge_tol_factor * (1 + max|root|) merge into multiple poles.
    Principal-part coefficients with negligible leading blocks are dropped,
    reducing the pole order (shared factors of P1 and G).
    """
    g = bundle.g_poly()
    if g.size < 2:
        raise DiagonalDegeneration("denominator polynomial is constant")
    roots = np.roots(g[::-1])
    roots = _newton_polish(g, roots)
    tol = merge_tol_factor * (1.0 + float(np.max(np.abs(roots))))
    clustered = _cluster(roots, tol)

    lead = g[-1]
    poles = []
    p_polys = [[bundle.P1[i][j].c[:, 0].copy() for j in range(2)] for i in range(2)]
    p_scale = max(1.0, max(float(np.max(np.abs(np.asarray(p)))) for row in p_polys for p in row))
    for center, mult in clustered:
        # denominator with this cluster removed, as a Taylor series at center
        denom = np.zeros(mult, dtype=complex)
        denom[0] = lead
        for other, om in clustered:
            if other == center:
                continue
            base = _taylor_shift(np.array([-other, 1.0], dtype=complex), center, mult)
            for _ in range(om):
                denom = np.convolve(denom, base)[:mult]
        coeffs = []
        for ell in range(mult):
            C = np.zeros((2, 2), dtype=complex)
            for i in range(2):
                for j in range(2):
                    num = _taylor_shift(p_polys[i][j], center, mult)
                    h = _series_div(num, denom, mult)
                    C[i, j] = h[ell]
            coeffs.append(C)
        # coeffs[ell] multiplies (z-center)^-(mult-ell); drop negligible heads
        while coeffs and float(np.max(np.abs(coeffs[0]))) <= 1e-9 * p_scale:
            coeffs.pop(0)
        if coeffs:
            poles.append(Pole(location=center, order=len(coeffs),
                              coeffs=tuple(coeffs)))
    return RationalConnection(poles=tuple(sorted(
        poles, key=lambda p: (p.location.real, p.location.imag))),
        signature=signature)


def _series_div(num, den, n):
    out = np.zeros(n, dtype=complex)
    if den[0] == 0:
        raise ZeroDivisionError("denominator series has zero constant term")
    for k in range(n):
        acc = num[k] if k < num.size else 0.0
        for j in range(1, k + 1):
            acc -= den[j] * out[k - j] if j < den.size else 0.0
        out[k] = acc / den[0]
    return out


def _involution(z, signature):
    if signature == "split":
        return np.conj(z)
    if signature == "definite":
        return -1.0 / np.conj(z)
    raise ValueError(f"unknown signature {signature!r}")


def reality_defect(conn: RationalConnection, signature: str | None = None) -> float:
    """How far the pole multiset is from closure under the reality involution.

    Returns the max over poles of the distance to the nearest image pole of
    equal order, relative to (1 + |pole|).
    """
    signature = signature or conn.signature
    worst = 0.0
    for p in conn.poles:
        target = _involution(p.location, signature)
        best = np.inf
        for q in conn.poles:
            if q.order != p.order:
                continue
            best = min(best, abs(q.location - target))
        worst = max(worst, best / (1.0 + abs(target)))
    return float(worst)


def pole_jet(bundle: ConnectionBundle, location: complex, order: int) -> Jet:
    """Jet in t of a pole location, via Newton iteration on d^(m-1)G/dz^(m-1).

    A pole of order m is a simple root of the (m-1)-st z-derivative of G, so
    implicit differentiation is well posed there.
    """
    g = bundle.G
    for _ in range(order - 1):
        g = g.dz()
    gp = g.dz()
    nu = g.nu
    eta = Jet(np.concatenate([[complex(location)], np.zeros(nu - 1)]))
    for _ in range(nu + 4):
        num = g.subs_z(eta)
        den = gp.subs_z(eta)
        eta = eta - num / den
    return eta
