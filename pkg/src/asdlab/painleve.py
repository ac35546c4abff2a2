"""The six Painleve equations as residual oracles and first-order systems.

Conventions: the independent variable is x throughout (the third equation is
sometimes printed with a stray d/dt in its first-derivative term; here it is
d/dx, the standard form).  Parameters are complex; kinds that use fewer than
four parameters keep the unused slots at zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "PainleveKind",
    "PainleveParams",
    "PainlevePoint",
    "SingularPoint",
    "rhs",
    "as_first_order",
    "residual",
    "fixed_singularities",
    "FixedSingularities",
    "to_rhs_convention",
]


class SingularPoint(ValueError):
    """Evaluation requested at a fixed singularity of the equation."""


class PainleveKind(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"
    VI = "VI"


_ARITY = {
    PainleveKind.I: 0,
    PainleveKind.II: 1,
    PainleveKind.III: 4,
    PainleveKind.IV: 2,
    PainleveKind.V: 4,
    PainleveKind.VI: 4,
}

# Slot names in declaration order; arity-k kinds use the first k slots.
_SLOTS = ("alpha", "beta", "gamma", "delta")


@dataclass(frozen=True)
class PainleveParams:
    kind: PainleveKind
    alpha: complex = 0.0
    beta: complex = 0.0
    gamma: complex = 0.0
    delta: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PainleveKind(self.kind))
        for name in _SLOTS:
            object.__setattr__(self, name, complex(getattr(self, name)))
        arity = _ARITY[self.kind]
        for name in _SLOTS[arity:]:
            if getattr(self, name) != 0:
                raise ValueError(
                    f"kind {self.kind.value} uses {arity} parameter(s); {name} must stay 0"
                )

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta)

    def to_json_dict(self):
        out = {"kind": self.kind.value}
        for name in _SLOTS:
            v = getattr(self, name)
            out[name] = [v.real, v.imag]
        return out

    @classmethod
    def from_json_dict(cls, data):
        vals = {}
        for name in _SLOTS:
            v = data.get(name, 0.0)
            vals[name] = complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        return cls(kind=PainleveKind(data["kind"]), **vals)


def to_rhs_convention(params: PainleveParams) -> PainleveParams:
    """Bridge between the two common sign conventions for the sixth equation.

    Flow-side parameter dictionaries are quoted with the opposite sign of the
    squared local exponents in the beta/gamma/delta slots; relative to the
    right-hand side implemented by :func:`rhs` this flips (beta, gamma) and
    reflects delta about 1/2.  The map is an involution and leaves kinds
    other than VI untouched.
    """
    if params.kind is not PainleveKind.VI:
        return params
    return PainleveParams(
        kind=PainleveKind.VI,
        alpha=params.alpha,
        beta=-params.beta,
        gamma=-params.gamma,
        delta=1.0 - params.delta,
    )


@dataclass(frozen=True)
class PainlevePoint:
    x: complex
    q: complex
    qp: complex

    def __post_init__(self):
        object.__setattr__(self, "x", complex(self.x))
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "qp", complex(self.qp))


def _check_point(kind: PainleveKind, p: PainlevePoint, tol=0.0):
    x, q = p.x, p.q
    def bad(v, where):
        raise SingularPoint(f"kind {kind.value}: {where} hits a singular value")
    if kind in (PainleveKind.III, PainleveKind.V, PainleveKind.VI):
        if abs(x) <= tol:
            bad(x, "x=0")
    if kind is PainleveKind.VI and abs(x - 1) <= tol:
        bad(x, "x=1")
    if kind in (PainleveKind.III, PainleveKind.IV) and abs(q) <= tol:
        bad(q, "q=0")
    if kind is PainleveKind.V and (abs(q) <= tol or abs(q - 1) <= tol):
        bad(q, "q in {0,1}")
    if kind is PainleveKind.VI:
        if abs(q) <= tol or abs(q - 1) <= tol or abs(q - x) <= tol:
            bad(q, "q in {0,1,x}")


def rhs(kind, params: PainleveParams, p: PainlevePoint) -> complex:
    """Value of d2q/dx2 for the given kind at the given point."""
    kind = PainleveKind(kind)
    if params.kind != kind:
        raise ValueError("parameter record is for a different kind")
    _check_point(kind, p)
    x, q, qp = p.x, p.q, p.qp
    a, b, g, d = params.as_tuple()

    if kind is PainleveKind.I:
        return 6 * q * q + x
    if kind is PainleveKind.II:
        return 2 * q ** 3 + x * q + a
    if kind is PainleveKind.III:
        return (qp * qp / q - qp / x
                + (a * q * q + b) / x + g * q ** 3 + d / q)
    if kind is PainleveKind.IV:
        return (qp * qp / (2 * q) + 1.5 * q ** 3 + 4 * x * q * q
                + 2 * (x * x - a) * q + b / q)
    if kind is PainleveKind.V:
        return ((1 / (2 * q) + 1 / (q - 1)) * qp * qp - qp / x
                + (q - 1) ** 2 / (x * x) * (a * q + b / q)
                + g * q / x + d * q * (q + 1) / (q - 1))
    # kind VI
    return (0.5 * (1 / q + 1 / (q - 1) + 1 / (q - x)) * qp * qp
            - (1 / x + 1 / (x - 1) + 1 / (q - x)) * qp
            + q * (q - 1) * (q - x) / (x * x * (x - 1) ** 2)
            * (a + b * x / (q * q) + g * (x - 1) / ((q - 1) ** 2)
               + d * x * (x - 1) / ((q - x) ** 2)))


def as_first_order(kind, params: PainleveParams):
    """Vector field (q, qp) -> (qp, rhs) suitable for the ODE engine."""
    kind = PainleveKind(kind)

    def field(x, y):
        q, qp = y
        qpp = rhs(kind, params, PainlevePoint(x, q, qp))
        return np.array([qp, qpp], dtype=complex)

    return field


def residual(kind, params: PainleveParams, samples) -> float:
    """max over samples of |qpp - rhs| / (1 + |qpp|); 0 for exact solutions.

    Each sample is (x, q, qp, qpp) with qpp supplied by the caller (analytic
    where available, central finite differences otherwise).
    """
    kind = PainleveKind(kind)
    worst = 0.0
    for x, q, qp, qpp in samples:
        predicted = rhs(kind, params, PainlevePoint(x, q, qp))
        worst = max(worst, abs(qpp - predicted) / (1.0 + abs(qpp)))
    return worst


@dataclass(frozen=True)
class FixedSingularities:
    finite: frozenset
    infinity: bool


_FIXED = {
    PainleveKind.I: FixedSingularities(frozenset(), True),
    PainleveKind.II: FixedSingularities(frozenset(), True),
    PainleveKind.III: FixedSingularities(frozenset({0j}), True),
    PainleveKind.IV: FixedSingularities(frozenset(), True),
    PainleveKind.V: FixedSingularities(frozenset({0j}), True),
    PainleveKind.VI: FixedSingularities(frozenset({0j, 1 + 0j}), True),
}


def fixed_singularities(kind) -> FixedSingularities:
    """Fixed x-singularities of the equation, with infinity flagged."""
    return _FIXED[PainleveKind(kind)]
