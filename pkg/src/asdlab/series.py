"""Truncated Taylor series (jets) and polynomials in z with jet coefficients.

Everything downstream of the flow integrators that needs analytic
time-derivatives (connection forms, flatness residuals, pole motion) works on
jets: finite Taylor expansions in ``u = t - t0`` around a sample time.  All
arithmetic truncates to the shortest operand, so the valid order is tracked
automatically by array length.
"""
from __future__ import annotations

import numpy as np

__all__ = ["Jet", "ZPolyJet", "jet_const", "jet_var", "solve_linear_jets"]


def _as_coeffs(x, nu=None):
    if isinstance(x, Jet):
        return x.c
    c = np.zeros(1 if nu is None else nu, dtype=complex)
    c[0] = complex(x)
    return c


class Jet:
    """Taylor expansion sum_k c[k] u^k, truncated at len(c) coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=complex)
        if self.c.ndim != 1 or self.c.size == 0:
            raise ValueError("jet needs a 1-d, non-empty coefficient array")

    @property
    def order(self):
        return self.c.size - 1

    @property
    def value(self):
        return self.c[0]

    def __repr__(self):
        return f"Jet({self.c.tolist()})"

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet(_as_coeffs(other, self.c.size))

    def __add__(self, other):
        o = self._coerce(other)
        n = min(self.c.size, o.c.size)
        return Jet(self.c[:n] + o.c[:n])

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        n = min(self.c.size, o.c.size)
        return Jet(np.convolve(self.c[:n], o.c[:n])[:n])

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        n = min(self.c.size, o.c.size)
        a, b = self.c[:n], o.c[:n]
        if b[0] == 0:
            raise ZeroDivisionError("jet division by a series with zero constant term")
        q = np.zeros(n, dtype=complex)
        for k in range(n):
            acc = a[k]
            for j in range(1, k + 1):
                acc -= b[j] * q[k - j]
            q[k] = acc / b[0]
        return Jet(q)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("jet powers must be non-negative integers")
        out = Jet(_as_coeffs(1.0, self.c.size))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def sqrt(self):
        n = self.c.size
        a = self.c
        s = np.zeros(n, dtype=complex)
        s[0] = np.sqrt(complex(a[0]))
        if s[0] == 0:
            raise ZeroDivisionError("jet sqrt at a zero constant term")
        for k in range(1, n):
            acc = a[k]
            for j in range(1, k):
                acc -= s[j] * s[k - j]
            s[k] = acc / (2 * s[0])
        return Jet(s)

    def deriv(self):
        """d/du, one order lower.  Order-0 jets differentiate to the zero jet."""
        if self.c.size == 1:
            return Jet([0.0])
        k = np.arange(1, self.c.size)
        return Jet(self.c[1:] * k)

    def truncate(self, nu):
        return Jet(self.c[:nu]) if nu < self.c.size else self

    def conj(self):
        return Jet(np.conj(self.c))


def jet_const(value, order):
    c = np.zeros(order + 1, dtype=complex)
    c[0] = complex(value)
    return Jet(c)


def jet_var(value, order):
    """Jet of the local coordinate itself: value + u."""
    c = np.zeros(order + 1, dtype=complex)
    c[0] = complex(value)
    if order >= 1:
        c[1] = 1.0
    return Jet(c)


class ZPolyJet:
    """Polynomial in z whose coefficients are jets in u: sum c[i,j] z^i u^j."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.atleast_2d(np.asarray(coeffs, dtype=complex))
        if self.c.ndim != 2 or self.c.size == 0:
            raise ValueError("need a (deg_z+1, order_u+1) coefficient array")

    @classmethod
    def from_jet(cls, jet):
        return cls(np.asarray(jet.c, dtype=complex)[None, :])

    @classmethod
    def const(cls, value, nu):
        c = np.zeros((1, nu), dtype=complex)
        c[0, 0] = complex(value)
        return cls(c)

    @classmethod
    def z_monomial(cls, power, nu, coeff=1.0):
        c = np.zeros((power + 1, nu), dtype=complex)
        c[power, 0] = complex(coeff)
        return cls(c)

    @property
    def nz(self):
        return self.c.shape[0]

    @property
    def nu(self):
        return self.c.shape[1]

    def __repr__(self):
        return f"ZPolyJet(deg_z={self.nz - 1}, nu={self.nu})"

    def _coerce(self, other):
        if isinstance(other, ZPolyJet):
            return other
        if isinstance(other, Jet):
            return ZPolyJet.from_jet(other)
        if isinstance(other, (int, float, complex, np.number)):
            return ZPolyJet.const(other, self.nu)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        nz = max(self.nz, o.nz)
        nu = min(self.nu, o.nu)
        out = np.zeros((nz, nu), dtype=complex)
        out[: self.nz] += self.c[:, :nu]
        out[: o.nz] += o.c[:, :nu]
        return ZPolyJet(out)

    __radd__ = __add__

    def __neg__(self):
        return ZPolyJet(-self.c)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        nu = min(self.nu, o.nu)
        nz = self.nz + o.nz - 1
        out = np.zeros((nz, nu), dtype=complex)
        for i in range(self.nz):
            for k in range(o.nz):
                out[i + k] += np.convolve(self.c[i, :nu], o.c[k, :nu])[:nu]
        return ZPolyJet(out)

    __rmul__ = __mul__

    def dz(self):
        if self.nz == 1:
            return ZPolyJet(np.zeros((1, self.nu), dtype=complex))
        k = np.arange(1, self.nz)[:, None]
        return ZPolyJet(self.c[1:] * k)

    def du(self):
        if self.nu == 1:
            return ZPolyJet(np.zeros((self.nz, 1), dtype=complex))
        k = np.arange(1, self.nu)[None, :]
        return ZPolyJet(self.c[:, 1:] * k)

    def eval_z(self, z0):
        """Evaluate the z-polynomial at a number, leaving a jet in u."""
        acc = np.zeros(self.nu, dtype=complex)
        for i in range(self.nz - 1, -1, -1):
            acc = acc * z0 + self.c[i]
        return Jet(acc)

    def subs_z(self, zjet):
        """Substitute a jet for z (used to restrict forms to a moving pole)."""
        nu = min(self.nu, zjet.c.size)
        acc = jet_const(0.0, nu - 1)
        zj = zjet.truncate(nu)
        for i in range(self.nz - 1, -1, -1):
            acc = acc * zj + Jet(self.c[i, :nu])
        return acc

    def value(self, z0):
        """Plain complex value at (z0, u=0)."""
        return complex(self.eval_z(z0).c[0])

    def trim(self, tol=0.0):
        nz = self.nz
        while nz > 1 and np.all(np.abs(self.c[nz - 1]) <= tol):
            nz -= 1
        return ZPolyJet(self.c[:nz])


def solve_linear_jets(A, b):
    """Solve A(u) x(u) = b(u) order by order in u.

    A has shape (n, n, nu), b has shape (n, nu); the u^0 block of A must be
    invertible.  Returns x of shape (n, nu).
    """
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n, _, nu = A.shape
    x = np.zeros((n, nu), dtype=complex)
    lu = np.linalg.inv(A[:, :, 0])
    for k in range(nu):
        rhs = b[:, k].copy()
        for j in range(1, k + 1):
            rhs -= A[:, :, j] @ x[:, k - j]
        x[:, k] = lu @ rhs
    return x
