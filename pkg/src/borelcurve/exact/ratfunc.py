"""Rational functions of z over the Gaussian rationals.

Invariants: denominator nonzero and monic, gcd(num, den) = 1.  These
carry germ coefficients, curve coefficients, and sector chains, so the
reduction discipline here is what keeps the whole exact pipeline from
blowing up.
"""

from __future__ import annotations

from fractions import Fraction
from math import inf

from .gaussrat import GaussianRational, ZERO, ONE
from .polynomial import Poly, X, _as_coeff


class RatFunc:
    """num(z)/den(z), reduced, with monic den."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, _reduced=False):
        if isinstance(num, RatFunc) and den is None:
            self.num, self.den = num.num, num.den
            return
        num = num if isinstance(num, Poly) else Poly.const(num)
        if den is None:
            den = Poly((ONE,))
        elif not isinstance(den, Poly):
            den = Poly.const(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if _reduced:
            self.num, self.den = num, den
            return
        if num.is_zero():
            self.num, self.den = Poly(()), Poly((ONE,))
            return
        g = num.gcd(den)
        if g.degree >= 1:
            num = num.exact_div(g)
            den = den.exact_div(g)
        lead = den.leading()
        if lead != ONE:
            inv = lead.inverse()
            num = num.scale(inv)
            den = den.scale(inv)
        self.num, self.den = num, den

    @staticmethod
    def const(x):
        return RatFunc(Poly.const(x))

    # -- queries ------------------------------------------------------

    def is_zero(self):
        return self.num.is_zero()

    def __bool__(self):
        return not self.is_zero()

    def is_polynomial(self):
        return self.den.degree == 0

    def as_poly(self):
        if not self.is_polynomial():
            raise ValueError("not a polynomial")
        return self.num

    def __eq__(self, other):
        other = _as_ratfunc(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        if self.den.degree == 0:
            return f"RatFunc({self.num!r})"
        return f"RatFunc({self.num!r} / {self.den!r})"

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        other = _as_ratfunc(other)
        if other is NotImplemented:
            return NotImplemented
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, _reduced=True)

    def __sub__(self, other):
        other = _as_ratfunc(other)
        if other is NotImplemented:
            return NotImplemented
        return RatFunc(self.num * other.den - other.num * self.den, self.den * other.den)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_ratfunc(other)
        if other is NotImplemented:
            return NotImplemented
        # cross-reduce before multiplying to limit intermediate degree
        g1 = self.num.gcd(other.den)
        g2 = other.num.gcd(self.den)
        n1 = self.num.exact_div(g1) if g1.degree >= 1 else self.num
        d2 = other.den.exact_div(g1) if g1.degree >= 1 else other.den
        n2 = other.num.exact_div(g2) if g2.degree >= 1 else other.num
        d1 = self.den.exact_div(g2) if g2.degree >= 1 else self.den
        num = n1 * n2
        den = d1 * d2
        if den.is_zero():
            raise ZeroDivisionError
        lead = den.leading() if not den.is_zero() else ONE
        if not num.is_zero() and lead != ONE:
            inv = lead.inverse()
            num, den = num.scale(inv), den.scale(inv)
        return RatFunc(num, den, _reduced=True)

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero rational function")
        num, den = self.den, self.num
        lead = den.leading()
        if lead != ONE:
            inv = lead.inverse()
            num, den = num.scale(inv), den.scale(inv)
        return RatFunc(num, den, _reduced=True)

    def __truediv__(self, other):
        other = _as_ratfunc(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _as_ratfunc(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = RF_ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def derivative(self):
        n, d = self.num, self.den
        if d.degree == 0:
            return RatFunc(n.derivative().scale(d.leading().inverse()))
        return RatFunc(n.derivative() * d - n * d.derivative(), d * d)

    # -- evaluation / expansion ---------------------------------------

    def __call__(self, z):
        if isinstance(z, (GaussianRational, int, Fraction)):
            z = _as_coeff(z)
            dv = self.den(z)
            if dv.is_zero():
                raise ZeroDivisionError(f"pole of rational function at {z!r}")
            return self.num(z) / dv
        return self.num.eval_numeric(z) / self.den.eval_numeric(z)

    def valuation_at(self, z0):
        """Order of vanishing at z0: negative for a pole, +inf for the zero function."""
        if self.is_zero():
            return inf
        return self.num.valuation_at(z0) - self.den.valuation_at(z0)

    def series_at(self, z0, n_terms, lead_order=None):
        """Laurent expansion at z0: returns (k0, [c_0, c_1, ...]) meaning
        sum(c_j * (z - z0)**(k0 + j)).

        If lead_order is given, the expansion is reported starting at that
        order (zero-padded as needed); it must not exceed the true valuation.
        """
        num = self.num.taylor_shift(z0)
        den = self.den.taylor_shift(z0)
        vn = 0
        ncs = list(num.coeffs)
        while ncs and ncs[0].is_zero():
            ncs.pop(0)
            vn += 1
        vd = 0
        dcs = list(den.coeffs)
        while dcs and dcs[0].is_zero():
            dcs.pop(0)
            vd += 1
        if not ncs:
            k0 = 0 if lead_order is None else lead_order
            return k0, [ZERO] * n_terms
        k0 = vn - vd
        if lead_order is not None:
            if lead_order > k0:
                raise ValueError("lead_order exceeds true leading order")
            pad = k0 - lead_order
        else:
            pad = 0
        # series division ncs / dcs to n_terms
        want = n_terms - pad
        inv0 = dcs[0].inverse()
        out = []
        rem = list(ncs[: want + len(dcs)])
        if len(rem) < want + len(dcs):
            rem += [ZERO] * (want + len(dcs) - len(rem))
        for j in range(max(want, 0)):
            c = (rem[j] if j < len(rem) else ZERO) * inv0
            out.append(c)
            if not c.is_zero():
                for t in range(1, len(dcs)):
                    if j + t < len(rem):
                        rem[j + t] = rem[j + t] - c * dcs[t]
        return (k0 - pad), [ZERO] * pad + out

    def poles(self):
        """Denominator zero structure: list of (root in Q(i), order) for the
        rational roots, plus the residual factor with no rational roots."""
        roots, residual = self.den.rational_roots()
        counted = {}
        for r in roots:
            counted[r] = counted.get(r, 0) + 1
        return [(r, m) for r, m in counted.items()], residual


def _as_ratfunc(x):
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, (GaussianRational, int, Fraction)):
        return RatFunc.const(x)
    if isinstance(x, Poly):
        return RatFunc(x)
    return NotImplemented


RF_ZERO = RatFunc(Poly(()))
RF_ONE = RatFunc(Poly((ONE,)))
RF_Z = RatFunc(X)
