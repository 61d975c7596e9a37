"""Dense polynomials in the Borel variable w over RatFunc(z).

The coefficient ring is a field, so divmod and gcd work exactly; that is
all the Sylvester/Bareiss resultant machinery needs.
"""

from __future__ import annotations

from math import comb, inf

from .gaussrat import GaussianRational
from .ratfunc import RatFunc, RF_ZERO, RF_ONE, _as_ratfunc


class WPoly:
    """sum(c[l] * w**l) with RatFunc coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(), _trusted=False):
        if isinstance(coeffs, WPoly):
            self.coeffs = coeffs.coeffs
            return
        if _trusted:
            self.coeffs = coeffs
            return
        cs = []
        for c in coeffs:
            if not isinstance(c, RatFunc):
                c2 = _as_ratfunc(c)
                if c2 is NotImplemented:
                    raise TypeError(f"bad WPoly coefficient {c!r}")
                c = c2
            cs.append(c)
        while cs and cs[-1].is_zero():
            cs.pop()
        self.coeffs = tuple(cs)

    @staticmethod
    def const(c):
        c = _as_ratfunc(c)
        return WPoly((c,))

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else -inf

    def is_zero(self):
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __getitem__(self, l):
        if 0 <= l < len(self.coeffs):
            return self.coeffs[l]
        return RF_ZERO

    def __eq__(self, other):
        if not isinstance(other, WPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __repr__(self):
        if not self.coeffs:
            return "WPoly(0)"
        return "WPoly(" + " + ".join(f"({c!r})w^{l}" for l, c in enumerate(self.coeffs)) + ")"

    def __add__(self, other):
        if not isinstance(other, WPoly):
            other = WPoly.const(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return WPoly([self[l] + other[l] for l in range(n)])

    def __neg__(self):
        return WPoly(tuple(-c for c in self.coeffs), _trusted=True)

    def __sub__(self, other):
        if not isinstance(other, WPoly):
            other = WPoly.const(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return WPoly([self[l] - other[l] for l in range(n)])

    def __mul__(self, other):
        if not isinstance(other, WPoly):
            other = WPoly.const(other)
        if self.is_zero() or other.is_zero():
            return WPoly(())
        out = [RF_ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, ai in enumerate(self.coeffs):
            if ai.is_zero():
                continue
            for j, bj in enumerate(other.coeffs):
                if not bj.is_zero():
                    out[i + j] = out[i + j] + ai * bj
        return WPoly(out)

    __rmul__ = __mul__

    def scale(self, c):
        c = _as_ratfunc(c)
        return WPoly(tuple(a * c for a in self.coeffs), _trusted=True) if c else WPoly(())

    def divmod(self, other):
        if other.is_zero():
            raise ZeroDivisionError("WPoly division by zero")
        rem = list(self.coeffs)
        dq = len(self.coeffs) - len(other.coeffs)
        if dq < 0:
            return WPoly(()), self
        inv_lead = other.coeffs[-1].inverse()
        quot = [RF_ZERO] * (dq + 1)
        for k in range(dq, -1, -1):
            c = rem[k + len(other.coeffs) - 1] * inv_lead
            quot[k] = c
            if not c.is_zero():
                for j, oc in enumerate(other.coeffs):
                    rem[k + j] = rem[k + j] - c * oc
        return WPoly(quot), WPoly(rem)

    def exact_div(self, other):
        q, r = self.divmod(other)
        if not r.is_zero():
            raise ArithmeticError("WPoly exact_div with nonzero remainder")
        return q

    def derivative(self):
        if len(self.coeffs) <= 1:
            return WPoly(())
        return WPoly([self.coeffs[l] * l for l in range(1, len(self.coeffs))])

    def derivative_z(self):
        return WPoly([c.derivative() for c in self.coeffs])

    def shift_w(self, w0):
        """Coefficients of p(w0 + u) as a WPoly in u; w0 is a RatFunc of z."""
        w0 = _as_ratfunc(w0)
        n = len(self.coeffs)
        out = [RF_ZERO] * n
        pw = [RF_ONE]  # powers of w0
        for _ in range(1, n):
            pw.append(pw[-1] * w0)
        for l, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            for t in range(l + 1):
                out[t] = out[t] + c * pw[l - t] * comb(l, t)
        return WPoly(out)

    def eval_w(self, w_value):
        """Evaluate in w at an exact RatFunc/GaussianRational value; stays exact."""
        w_value = _as_ratfunc(w_value)
        acc = RF_ZERO
        for c in reversed(self.coeffs):
            acc = acc * w_value + c
        return acc

    def numeric_coeffs(self, z):
        """Complex (or mpmath) coefficient list at fixed numeric z, low order first."""
        return [c(z) for c in self.coeffs]


def bareiss_determinant(mat, ring_one):
    """Fraction-free Bareiss determinant over an integral domain.

    mat: square list-of-lists whose entries support +,-,*,exact_div.
    ring_one: multiplicative identity of the entry ring.
    """
    n = len(mat)
    if n == 0:
        return ring_one
    m = [row[:] for row in mat]
    sign = 1
    prev = ring_one
    for k in range(n - 1):
        if m[k][k].is_zero():
            piv = next((r for r in range(k + 1, n) if not m[r][k].is_zero()), None)
            if piv is None:
                zero = m[k][k]
                return zero  # a zero entry of the right type
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                m[i][j] = num.exact_div(prev)
        prev = m[k][k]
    det = m[n - 1][n - 1]
    return -det if sign < 0 else det
