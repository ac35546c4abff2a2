"""Pole-configuration classification of the rational connection.

Conjugate-pair reality sorts the four poles (with multiplicity) of B1 into
two definite cases and five split cases; each case carries local exponent
data that fixes the Painleve kind and parameter tuple, and a geometric
interpretation tag (hermitian structure / null-surface families) per the
multiplicity pattern of real or conjugate poles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..painleve import PainleveKind, PainleveParams
from .connection import RationalConnection, reality_defect

__all__ = [
    "RealityViolation",
    "UnclassifiableConfiguration",
    "DegenerateTrace",
    "PoleConfig",
    "Interpretation",
    "classify_poles",
    "local_exponents",
    "painleve_parameters",
    "geometric_interpretation",
    "classification_report",
    "REAL_TOL_FACTOR",
    "MERGE_TOL_FACTOR",
]

MERGE_TOL_FACTOR = 1e-6
REAL_TOL_FACTOR = 1e-8


class RealityViolation(ValueError):
    """Pole multiset is not closed under the signature's involution."""


class UnclassifiableConfiguration(ValueError):
    """Pole multiplicities do not realize any enumerated case."""


class DegenerateTrace(ValueError):
    """An exponent formula's trace denominator vanishes."""


class Interpretation(str, Enum):
    GENERIC = "Generic"
    HERMITIAN = "HermitianStructure"
    ONE_NULL_FAMILY = "OneNullSurfaceFamily"
    TWO_NULL_FAMILIES = "TwoNullSurfaceFamilies"


@dataclass(frozen=True)
class PoleConfig:
    signature: str
    case: str
    exponents: dict
    roles: dict = field(default_factory=dict)   # role name -> Pole
    margins: dict = field(default_factory=dict)

    def __post_init__(self):
        split_only = {"c", "d", "e"}
        if self.signature == "definite" and self.case in split_only:
            raise ValueError(f"case {self.case} cannot occur with definite signature")


def _is_real(z, tol_factor=REAL_TOL_FACTOR):
    return abs(z.imag) <= tol_factor * (1.0 + abs(z))


def _theta_from_square(sq):
    theta = np.sqrt(complex(sq))
    if theta.real < 0 or (theta.real == 0 and theta.imag < 0):
        theta = -theta
    return theta


def _tr(M):
    return M[0, 0] + M[1, 1]


def _pair_up(poles, signature, tol):
    """Group poles into involution orbits; returns list of (pole, partner)."""
    if signature == "split":
        image = lambda z: np.conj(z)
    else:
        image = lambda z: -1.0 / np.conj(z)
    used = set()
    pairs = []
    for i, p in enumerate(poles):
        if i in used:
            continue
        target = image(p.location)
        best, best_d = None, np.inf
        for j, q in enumerate(poles):
            if j in used or j == i or q.order != p.order:
                continue
            d = abs(q.location - target)
            if d < best_d:
                best, best_d = j, d
        if best is not None and best_d <= tol * (1.0 + abs(target)):
            used.update((i, best))
            pairs.append((p, poles[best]))
        else:
            used.add(i)
            pairs.append((p, None))
    return pairs


def _margins(conn, signature):
    locs = [p.location for p in conn.poles]
    seps = [abs(a - b) for i, a in enumerate(locs) for b in locs[i + 1:]]
    scale = 1.0 + max(abs(v) for v in locs)
    return {
        "min_pole_separation": min(seps) if seps else np.inf,
        "merge_tolerance": MERGE_TOL_FACTOR * scale,
        "reality_defect": reality_defect(conn, signature),
        "min_imag_over_real_tol": min(
            (abs(p.location.imag) / (REAL_TOL_FACTOR * (1.0 + abs(p.location)))
             for p in conn.poles), default=np.inf),
        "trace_defect": conn.trace_defect(),
    }


def classify_poles(conn: RationalConnection, signature: str | None = None) -> PoleConfig:
    """Assign the enumerated case for the pole configuration of B1."""
    signature = signature or conn.signature
    if signature not in ("split", "definite"):
        raise ValueError(f"unknown signature {signature!r}")
    total = conn.total_order
    if total != 4:
        raise UnclassifiableConfiguration(
            f"pole orders total {total}, expected 4")
    defect = reality_defect(conn, signature)
    if defect > 10 * MERGE_TOL_FACTOR:
        raise RealityViolation(
            f"pole set not closed under the {signature} involution "
            f"(defect {defect:.3e})")
    orders = sorted(p.order for p in conn.poles)
    margins = _margins(conn, signature)

    if signature == "definite":
        if orders == [1, 1, 1, 1]:
            return _definite_a(conn, margins)
        if orders == [2, 2]:
            return _definite_b(conn, margins)
        raise UnclassifiableConfiguration(
            f"pole orders {orders} not realizable with definite reality")

    if orders == [1, 1, 1, 1]:
        return _split_a(conn, margins)
    if orders == [1, 1, 2]:
        return _split_b(conn, margins)
    if orders == [2, 2]:
        reals = [p for p in conn.poles if _is_real(p.location)]
        if len(reals) == 2:
            return _split_d(conn, margins)
        if len(reals) == 0:
            return _split_c(conn, margins)
        raise RealityViolation(
            "one real and one non-real double pole cannot be conjugation-closed")
    if orders == [4]:
        return _split_e(conn, margins)
    raise UnclassifiableConfiguration(
        f"pole orders {orders} excluded by conjugate-pair reality "
        "(the (3,1) degeneration never occurs)")


def _simple_pair_representatives(conn, signature):
    tol = 10 * MERGE_TOL_FACTOR
    pairs = _pair_up(conn.poles, signature, tol)
    reps = []
    for p, q in pairs:
        if q is None:
            reps.append(p)
            continue
        if signature == "split":
            rep = p if p.location.imag > q.location.imag else q
        else:
            rep = p if abs(p.location) < abs(q.location) else q
        reps.append(rep)
    reps.sort(key=lambda p: (p.location.real, p.location.imag))
    return reps


def _definite_a(conn, margins):
    reps = _simple_pair_representatives(conn, "definite")
    if len(reps) != 2:
        raise RealityViolation("four simple poles must form two antipodal pairs")
    th0 = _theta_from_square(2.0 * _tr(reps[0].residue @ reps[0].residue))
    th1 = _theta_from_square(2.0 * _tr(reps[1].residue @ reps[1].residue))
    return PoleConfig(signature="definite", case="a",
                      exponents={"theta0": th0, "theta1": th1},
                      roles={"zeta0": reps[0], "zeta1": reps[1]},
                      margins=margins)


def _definite_b(conn, margins):
    p, q = conn.poles
    rep = p if abs(p.location) <= abs(q.location) else q
    A2 = rep.coeffs[0]
    C = -1j * rep.residue if len(rep.coeffs) > 1 else np.zeros((2, 2), dtype=complex)
    trC2 = _tr(C @ C)
    if abs(trC2) <= 1e-12:
        raise DegenerateTrace("tr C^2 vanishes in the definite double-pole case")
    theta = _theta_from_square(2.0 * _tr(A2 @ C) ** 2 / trC2)
    return PoleConfig(signature="definite", case="b",
                      exponents={"theta": theta},
                      roles={"zeta": rep}, margins=margins)


def _split_a(conn, margins):
    reps = _simple_pair_representatives(conn, "split")
    if len(reps) != 2:
        raise RealityViolation("four simple poles must form two conjugate pairs")
    if any(_is_real(r.location) for r in reps):
        margins = dict(margins, real_simple_poles=True)
    th0 = _theta_from_square(2.0 * _tr(reps[0].residue @ reps[0].residue))
    th1 = _theta_from_square(2.0 * _tr(reps[1].residue @ reps[1].residue))
    return PoleConfig(signature="split", case="a",
                      exponents={"theta0": th0, "theta1": th1},
                      roles={"zeta0": reps[0], "zeta1": reps[1]},
                      margins=margins)


def _split_b(conn, margins):
    double = next(p for p in conn.poles if p.order == 2)
    simples = [p for p in conn.poles if p.order == 1]
    if not _is_real(double.location):
        raise RealityViolation("the double pole of the split (2,1,1) case must be real")
    rep = max(simples, key=lambda p: p.location.imag)
    A2 = rep.residue
    C = double.coeffs[0]
    trC2 = _tr(C @ C)
    if abs(trC2) <= 1e-12:
        raise DegenerateTrace("tr C^2 vanishes in the split (2,1,1) case")
    th0 = _theta_from_square(2.0 * _tr(A2 @ A2))
    M = A2 - A2.conj().T
    th_inf = _theta_from_square(2.0 * _tr(M @ C) ** 2 / trC2)
    return PoleConfig(signature="split", case="b",
                      exponents={"theta0": th0, "theta_inf": th_inf},
                      roles={"eta": double, "zeta1": rep}, margins=margins)


def _split_c(conn, margins):
    rep = max(conn.poles, key=lambda p: p.location.imag)
    A3 = rep.coeffs[0]
    C = -1j * rep.residue if len(rep.coeffs) > 1 else np.zeros((2, 2), dtype=complex)
    trC2 = _tr(C @ C)
    if abs(trC2) <= 1e-12:
        raise DegenerateTrace("tr C^2 vanishes in the split double-pair case")
    theta = _theta_from_square(2.0 * _tr(A3 @ C) ** 2 / trC2)
    return PoleConfig(signature="split", case="c",
                      exponents={"theta": theta},
                      roles={"zeta": rep}, margins=margins)


def _split_d(conn, margins):
    p0, p1 = sorted(conn.poles, key=lambda p: p.location.real)
    C1 = p0.coeffs[0]
    C2 = p0.residue if len(p0.coeffs) > 1 else np.zeros((2, 2), dtype=complex)
    C3 = p1.coeffs[0]
    trC22 = _tr(C2 @ C2)
    if abs(trC22) <= 1e-12:
        raise DegenerateTrace("tr C2^2 vanishes in the split two-real-double case")
    th1 = _theta_from_square(2.0 * _tr(C1 @ C2) ** 2 / trC22)
    th2 = _theta_from_square(2.0 * _tr(C2 @ C3) ** 2 / trC22)
    return PoleConfig(signature="split", case="d",
                      exponents={"theta1": th1, "theta2": th2},
                      roles={"eta0": p0, "eta1": p1}, margins=margins)


def _split_e(conn, margins):
    pole = conn.poles[0]
    if not _is_real(pole.location):
        raise RealityViolation("the quadruple pole of the split (4) case must be real")
    coeffs = list(pole.coeffs)
    while len(coeffs) < 4:
        coeffs.append(np.zeros((2, 2), dtype=complex))
    C1, C2, C3 = coeffs[0], coeffs[1], coeffs[2]
    if abs(np.linalg.det(C1)) <= 1e-12 * max(1.0, float(np.max(np.abs(C1))) ** 2):
        raise UnclassifiableConfiguration(
            "leading quadruple coefficient is singular; excluded by reality")
    alpha = 0.5 * (1.0 + _tr(C2 @ C3))
    return PoleConfig(signature="split", case="e",
                      exponents={"alpha": alpha},
                      roles={"eta": pole}, margins=margins)


def local_exponents(conn: RationalConnection, pole, config: PoleConfig | None = None):
    """Exponent datum attached to one pole under its case's formula."""
    if config is None:
        config = classify_poles(conn)
    for name, role_pole in config.roles.items():
        if abs(role_pole.location - pole.location) <= 1e-9 * (1.0 + abs(pole.location)):
            if config.case in ("a",):
                return config.exponents["theta0" if name == "zeta0" else "theta1"]
            if config.case == "b" and config.signature == "split":
                return config.exponents["theta0" if name == "zeta1" else "theta_inf"]
            if config.case == "b":
                return config.exponents["theta"]
            if config.case == "c":
                return config.exponents["theta"]
            if config.case == "d":
                return config.exponents["theta1" if name == "eta0" else "theta2"]
            return config.exponents["alpha"]
    raise ValueError("pole does not belong to the connection's divisor")


def painleve_parameters(config: PoleConfig):
    """Painleve kind and parameter tuple dictated by the pole case."""
    e = config.exponents
    if config.case == "a":
        th0, th1 = e["theta0"], e["theta1"]
        return PainleveKind.VI, PainleveParams(
            kind=PainleveKind.VI,
            alpha=0.5 * (th0 - 1.0) ** 2,
            beta=0.5 * np.conj(th0) ** 2,
            gamma=-0.5 * th1 ** 2,
            delta=0.5 * (1.0 + np.conj(th1) ** 2),
        )
    if config.case == "b" and config.signature == "split":
        th0, thi = e["theta0"], e["theta_inf"]
        s = th0 + np.conj(th0)
        return PainleveKind.V, PainleveParams(
            kind=PainleveKind.V,
            alpha=0.5 * (s + thi) ** 2,
            beta=-0.5 * (s - thi) ** 2,
            gamma=1.0 - th0 + np.conj(th0),
            delta=0.5,
        )
    if config.case in ("b", "c"):
        th = e["theta"]
        return PainleveKind.III, PainleveParams(
            kind=PainleveKind.III,
            alpha=4.0 * th, beta=4.0 * (1.0 + np.conj(th)),
            gamma=4.0, delta=-4.0,
        )
    if config.case == "d":
        th1, th2 = e["theta1"], e["theta2"]
        return PainleveKind.III, PainleveParams(
            kind=PainleveKind.III,
            alpha=4.0 * th1, beta=4.0 * (1.0 + th2),
            gamma=4.0, delta=-4.0,
        )
    if config.case == "e":
        return PainleveKind.II, PainleveParams(
            kind=PainleveKind.II, alpha=e["alpha"])
    raise ValueError(f"unknown case {config.case!r}")


_INTERPRETATION = {
    ("split", "a"): Interpretation.GENERIC,
    ("split", "b"): Interpretation.ONE_NULL_FAMILY,
    ("split", "c"): Interpretation.HERMITIAN,
    ("split", "d"): Interpretation.TWO_NULL_FAMILIES,
    ("split", "e"): Interpretation.ONE_NULL_FAMILY,
    ("definite", "a"): Interpretation.GENERIC,
    ("definite", "b"): Interpretation.HERMITIAN,
}


def geometric_interpretation(config: PoleConfig) -> Interpretation:
    """Hermitian-structure / null-surface tag, a pure function of the case."""
    return _INTERPRETATION[(config.signature, config.case)]


def _cnum(z):
    z = complex(z)
    return [z.real, z.imag]


def classification_report(conn: RationalConnection, signature: str | None = None) -> dict:
    """Full machine-readable classification record."""
    config = classify_poles(conn, signature)
    kind, params = painleve_parameters(config)
    interp = geometric_interpretation(config)
    return {
        "signature": config.signature,
        "case": config.case,
        "kind": kind.value,
        "exponents": {k: _cnum(v) for k, v in config.exponents.items()},
        "params": params.to_json_dict(),
        "interpretation": interp.value,
        "poles": [
            {"zeta": _cnum(p.location), "order": p.order} for p in conn.poles
        ],
        "roles": {k: _cnum(p.location) for k, p in config.roles.items()},
        "margins": {k: (float(v) if not isinstance(v, bool) else v)
                    for k, v in config.margins.items()},
    }
