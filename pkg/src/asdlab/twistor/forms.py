"""Exterior algebra of invariant forms over the basis (dt, s1, s2, s3, dz).

Coefficients are polynomials in z with jet-in-t entries (ZPolyJet), so the
exterior derivative is exact: d/dz acts on the polynomial part, d/dt on the
jets.  The invariant one-forms obey ds1 = s2^s3 (cyclically); a non-diagonal
frame adds rotation-rate torsion, supplied as three jets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..series import Jet, ZPolyJet

__all__ = ["BASIS", "DT", "S1", "S2", "S3", "DZ", "InvariantForm",
           "one_form", "wedge", "exterior_derivative", "form_norm"]

BASIS = ("dt", "s1", "s2", "s3", "dz")
DT, S1, S2, S3, DZ = range(5)
_CYCLIC = ((1, 2, 3), (2, 3, 1), (3, 1, 2))


def _perm_sign_and_sort(indices):
    idx = list(indices)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx[:-1], idx[1:]):
        if a == b:
            return 0, tuple(idx)
    return sign, tuple(idx)


@dataclass
class InvariantForm:
    """Sum of coefficient * basis monomial terms of a fixed degree."""

    degree: int
    terms: dict = field(default_factory=dict)  # tuple(sorted indices) -> ZPolyJet

    def copy(self):
        return InvariantForm(self.degree, dict(self.terms))

    def _merge(self, key, coeff):
        if key in self.terms:
            self.terms[key] = self.terms[key] + coeff
        else:
            self.terms[key] = coeff

    def __add__(self, other):
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        out = self.copy()
        for key, c in other.terms.items():
            out._merge(key, c)
        return out

    def __neg__(self):
        return InvariantForm(self.degree, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return InvariantForm(self.degree,
                             {k: c * scalar for k, c in self.terms.items()})

    __rmul__ = __mul__

    def coefficient(self, key):
        key = tuple(key) if isinstance(key, (tuple, list)) else (key,)
        return self.terms.get(key)

    def eval_coeffs(self, z0):
        """Complex value of every stored coefficient at (z0, u=0)."""
        return {k: c.value(z0) for k, c in self.terms.items()}

    def vector(self, z0, keys):
        return np.array([
            self.terms[k].value(z0) if k in self.terms else 0.0 for k in keys
        ], dtype=complex)

    def max_abs(self, z0):
        vals = [abs(c.value(z0)) for c in self.terms.values()]
        return max(vals) if vals else 0.0


def one_form(coeffs):
    """Build a 1-form from {basis index: coefficient} (ZPolyJet/Jet/number)."""
    terms = {}
    nu = max((c.nu for c in coeffs.values() if isinstance(c, ZPolyJet)),
             default=max((c.c.size for c in coeffs.values() if isinstance(c, Jet)),
                         default=1))
    for idx, c in coeffs.items():
        if isinstance(c, ZPolyJet):
            zc = c
        elif isinstance(c, Jet):
            zc = ZPolyJet.from_jet(c)
        else:
            zc = ZPolyJet.const(c, nu)
        terms[(idx,)] = zc
    return InvariantForm(1, terms)


def wedge(a: InvariantForm, b: InvariantForm) -> InvariantForm:
    out = InvariantForm(a.degree + b.degree, {})
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            sign, key = _perm_sign_and_sort(ka + kb)
            if sign == 0:
                continue
            out._merge(key, (ca * cb) if sign > 0 else -(ca * cb))
    return out


def _dbasis(idx, xi, nu):
    """Exterior derivative of a basis 1-form as an InvariantForm."""
    out = InvariantForm(2, {})
    if idx in (DT, DZ):
        return out
    pos = idx - 1  # invariant-form number 0,1,2 for s1,s2,s3
    i, j, k = _CYCLIC[pos]
    out._merge((min(j, k), max(j, k)),
               ZPolyJet.const(1.0 if j < k else -1.0, nu))
    if xi is not None:
        # ds_i picks up Xi_{i l} dt ^ s_l with Xi the skew rotation-rate matrix
        x1, x2, x3 = xi
        row = {1: ((2, x3), (3, _neg(x2))),
               2: ((1, _neg(x3)), (3, x1)),
               3: ((1, x2), (2, _neg(x1)))}[idx]
        for col, rate in row:
            cj = rate if isinstance(rate, Jet) else Jet(np.array([complex(rate)]))
            out._merge((DT, col), ZPolyJet.from_jet(cj))
    return out


def _neg(x):
    return -x if isinstance(x, Jet) else -complex(x)


def exterior_derivative(form: InvariantForm, xi=None) -> InvariantForm:
    """d on invariant forms; xi (three jets) adds non-diagonal frame torsion."""
    out = InvariantForm(form.degree + 1, {})
    for key, c in form.terms.items():
        du = c.du()
        dz = c.dz()
        for didx, dcoeff in ((DT, du), (DZ, dz)):
            if not np.any(dcoeff.c):
                continue
            sign, skey = _perm_sign_and_sort((didx,) + key)
            if sign == 0:
                continue
            out._merge(skey, dcoeff if sign > 0 else -dcoeff)
        for pos, idx in enumerate(key):
            base = _dbasis(idx, xi, c.nu)
            if not base.terms:
                continue
            rest = key[:pos] + key[pos + 1:]
            leibniz_sign = -1 if pos % 2 else 1
            for bkey, bc in base.terms.items():
                sign, skey = _perm_sign_and_sort(bkey + rest)
                if sign == 0:
                    continue
                total = sign * leibniz_sign
                term = c * bc
                out._merge(skey, term if total > 0 else -term)
    return out


def form_norm(form: InvariantForm, z0) -> float:
    """Euclidean norm of the coefficient vector at (z0, u=0)."""
    vals = [form.terms[k].value(z0) for k in form.terms]
    return float(np.linalg.norm(vals)) if vals else 0.0
