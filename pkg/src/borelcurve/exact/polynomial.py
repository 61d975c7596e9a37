"""Dense univariate polynomials over the Gaussian rationals.

Used for the z-dependence of ODE coefficients and everything built on
top of them.  The degree of the zero polynomial is -inf so that degree
comparisons behave in formulas like deg(p*q) = deg p + deg q.
"""

from __future__ import annotations

from fractions import Fraction
from math import inf

from .gaussrat import GaussianRational, ZERO, ONE, _coerce

NEG_INF = -inf


def _as_coeff(x):
    c = _coerce(x)
    if c is NotImplemented:
        raise TypeError(f"cannot use {type(x).__name__} as polynomial coefficient")
    return c


class Poly:
    """Polynomial sum(c[k] * z**k) with GaussianRational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(), _trusted=False):
        if isinstance(coeffs, Poly):
            self.coeffs = coeffs.coeffs
            return
        if _trusted:
            self.coeffs = coeffs
            return
        cs = [c if isinstance(c, GaussianRational) else _as_coeff(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs = tuple(cs)

    @staticmethod
    def const(x):
        x = _as_coeff(x)
        return Poly((x,)) if not x.is_zero() else Poly(())

    @staticmethod
    def parse(items):
        """Build from a list of "p/q" strings / ints / [re, im] pairs (low order first)."""
        return Poly([GaussianRational.parse(it) for it in items])

    # -- queries ------------------------------------------------------

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    def is_zero(self):
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __getitem__(self, k):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return ZERO

    def leading(self):
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __eq__(self, other):
        if not isinstance(other, Poly):
            try:
                other = Poly.const(other)
            except TypeError:
                return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "Poly(0)"
        parts = [f"({c!r})z^{k}" if k else f"({c!r})" for k, c in enumerate(self.coeffs) if c]
        return "Poly(" + " + ".join(parts) + ")"

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self[k] + other[k] for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Poly(tuple(-c for c in self.coeffs), _trusted=True)

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self[k] - other[k] for k in range(n)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        if self.is_zero() or other.is_zero():
            return Poly(())
        a, b = self.coeffs, other.coeffs
        out = [ZERO] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai.is_zero():
                continue
            for j, bj in enumerate(b):
                out[i + j] = out[i + j] + ai * bj
        return Poly(out)

    __rmul__ = __mul__

    def scale(self, c):
        c = _as_coeff(c)
        if c.is_zero():
            return Poly(())
        return Poly(tuple(a * c for a in self.coeffs), _trusted=True)

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative polynomial power")
        out = Poly((ONE,))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def shift(self, k):
        """Multiply by z**k."""
        if self.is_zero() or k == 0:
            return self if k >= 0 else self
        return Poly((ZERO,) * k + self.coeffs, _trusted=True)

    def divmod(self, other):
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(self.coeffs) - len(other.coeffs)
        if dq < 0:
            return Poly(()), self
        inv_lead = other.leading().inverse()
        quot = [ZERO] * (dq + 1)
        for k in range(dq, -1, -1):
            c = rem[k + len(other.coeffs) - 1] * inv_lead
            quot[k] = c
            if not c.is_zero():
                for j, oc in enumerate(other.coeffs):
                    rem[k + j] = rem[k + j] - c * oc
        return Poly(quot), Poly(rem)

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def exact_div(self, other):
        q, r = self.divmod(other)
        if not r.is_zero():
            raise ArithmeticError("exact_div with nonzero remainder")
        return q

    def monic(self):
        if self.is_zero():
            return self
        return self.scale(self.leading().inverse())

    def derivative(self):
        if len(self.coeffs) <= 1:
            return Poly(())
        return Poly([self.coeffs[k] * k for k in range(1, len(self.coeffs))])

    # -- evaluation / expansion ---------------------------------------

    def __call__(self, z):
        """Horner evaluation; exact for GaussianRational/int/Fraction z, numeric otherwise."""
        if isinstance(z, (GaussianRational, int, Fraction)):
            z = _as_coeff(z)
            acc = ZERO
            for c in reversed(self.coeffs):
                acc = acc * z + c
            return acc
        return self.eval_numeric(z)

    def eval_numeric(self, z):
        """Horner evaluation in whatever numeric ring z lives in (complex, mpmath, ...)."""
        one = z * 0 + 1  # multiplicative unit of z's ring
        acc = z * 0
        for c in reversed(self.coeffs):
            acc = acc * z + (one * c.a + (one * 1j) * c.b) / c.den
        return acc

    def taylor_shift(self, z0):
        """Coefficients of p(z0 + t) as a polynomial in t (exact z0)."""
        z0 = _as_coeff(z0)
        out = Poly(())
        for c in reversed(self.coeffs):
            out = out * Poly((z0, ONE)) + Poly.const(c)
        return out

    def valuation_at(self, z0):
        """Order of the zero of p at z = z0 (exact); inf degree-style sentinel for p=0."""
        if self.is_zero():
            return inf
        shifted = self.taylor_shift(z0).coeffs
        for k, c in enumerate(shifted):
            if not c.is_zero():
                return k
        return inf

    # -- gcd ----------------------------------------------------------

    def gcd(self, other):
        a, b = self, other
        while not b.is_zero():
            r = a % b
            # monic-normalize each remainder: gcd is defined up to units and
            # this keeps coefficient growth in check
            a, b = b, (r.monic() if not r.is_zero() else r)
        return a.monic() if not a.is_zero() else a

    def rational_roots(self):
        """All roots in Q(i) with multiplicity, plus the root-free residual.

        Exact squarefree decomposition first, so multiple roots never degrade
        the numeric candidate pass; every candidate is verified exactly.
        """
        import numpy as np

        if self.is_zero():
            raise ValueError("zero polynomial")
        if self.degree == 0:
            return [], Poly(self.coeffs, _trusted=True)
        _, factors = squarefree_decomposition(self)
        roots = []
        residual = Poly((self.leading(),))
        for fac, mult in factors:
            p = fac
            while p.degree >= 1:
                cand = None
                arr = np.array([complex(c) for c in p.coeffs][::-1], dtype=complex)
                for r in np.roots(arr):
                    fr = _rationalize(r)
                    if fr is not None and p(fr).is_zero():
                        cand = fr
                        break
                if cand is None:
                    break
                roots.extend([cand] * mult)
                p = p.exact_div(Poly((-cand, ONE)))
            residual = residual * p ** mult
        return roots, residual


def _rationalize(x, max_den=10**6):
    """Nearest small-denominator Gaussian rational to complex x, or None."""
    fr = Fraction(x.real).limit_denominator(max_den)
    fi = Fraction(x.imag).limit_denominator(max_den)
    if abs(fr - x.real) < 1e-9 and abs(fi - x.imag) < 1e-9:
        return GaussianRational.from_fraction(fr, fi)
    return None


def squarefree_decomposition(p: Poly):
    """Yun's algorithm: returns (unit, [(a_1, 1), (a_2, 2), ...]) with
    p = unit * prod a_k^k, a_k monic squarefree and pairwise coprime."""
    if p.is_zero():
        raise ValueError("zero polynomial")
    unit = p.leading()
    p = p.monic()
    if p.degree == 0:
        return unit, []
    dp = p.derivative()
    a = p.gcd(dp)
    b = p.exact_div(a)
    c = dp.exact_div(a)
    d = c - b.derivative()
    out = []
    k = 1
    while b.degree >= 1:
        ak = b.gcd(d)
        if ak.degree >= 1:
            out.append((ak, k))
            b = b.exact_div(ak)
        c2 = d.exact_div(ak) if ak.degree >= 1 else d
        d = c2 - b.derivative()
        k += 1
    return unit, out


def square_split(p: Poly):
    """Write p = h**2 * g with g of minimal degree (g squarefree up to the unit).

    Returns (h, g); h monic, g carries the unit.
    """
    unit, factors = squarefree_decomposition(p)
    h = Poly((ONE,))
    g = Poly.const(unit)
    for a, k in factors:
        h = h * a ** (k // 2)
        if k % 2:
            g = g * a
    return h, g


def integrate_poly(p: Poly):
    """Antiderivative with zero constant term."""
    return Poly([ZERO] + [p.coeffs[k] / GaussianRational(k + 1) for k in range(len(p.coeffs))])


X = Poly((ZERO, ONE))
