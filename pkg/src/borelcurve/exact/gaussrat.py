"""Exact Gaussian-rational numbers (a + b*i)/den with integer a, b, den.

All coefficient arithmetic in the exact layer runs over this field.  A
single shared denominator keeps multiplication down to three integer
products plus one gcd, which matters once germ recursions reach degree
several hundred.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd


class GaussianRational:
    """Element of Q(i), stored as (a + b*i)/den with den > 0 and gcd(a,b,den)=1."""

    __slots__ = ("a", "b", "den")

    def __init__(self, a=0, b=0, den=1, _normalized=False):
        if isinstance(a, GaussianRational):
            self.a, self.b, self.den = a.a, a.b, a.den
            return
        if isinstance(a, Fraction) or isinstance(b, Fraction) or isinstance(den, Fraction):
            fa, fb, fd = Fraction(a), Fraction(b), Fraction(den)
            common = fa.denominator * fb.denominator * fd.denominator
            a = int(fa * common)
            b = int(fb * common)
            den = int(fd * common)
            _normalized = False
        if _normalized:
            self.a, self.b, self.den = a, b, den
            return
        if den == 0:
            raise ZeroDivisionError("GaussianRational with zero denominator")
        if den < 0:
            a, b, den = -a, -b, -den
        g = gcd(gcd(abs(a), abs(b)), den)
        if g > 1:
            a //= g
            b //= g
            den //= g
        self.a, self.b, self.den = a, b, den

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_fraction(re, im=0):
        re = Fraction(re)
        im = Fraction(im)
        den = re.denominator * im.denominator // gcd(re.denominator, im.denominator)
        return GaussianRational(
            re.numerator * (den // re.denominator),
            im.numerator * (den // im.denominator),
            den,
        )

    @staticmethod
    def parse(text):
        """Parse "3", "-3/4", or a [re, im] pair of such strings."""
        if isinstance(text, (list, tuple)):
            if len(text) != 2:
                raise ValueError(f"expected [re, im] pair, got {text!r}")
            return GaussianRational.from_fraction(Fraction(str(text[0])), Fraction(str(text[1])))
        return GaussianRational.from_fraction(Fraction(str(text)))

    # -- queries ------------------------------------------------------

    @property
    def re(self) -> Fraction:
        return Fraction(self.a, self.den)

    @property
    def im(self) -> Fraction:
        return Fraction(self.b, self.den)

    def is_zero(self):
        return self.a == 0 and self.b == 0

    def is_real(self):
        return self.b == 0

    def __bool__(self):
        return not self.is_zero()

    def __complex__(self):
        return complex(self.a / self.den, self.b / self.den)

    def __hash__(self):
        return hash((self.a, self.b, self.den))

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.a == other.a and self.b == other.b and self.den == other.den

    def __repr__(self):
        if self.b == 0:
            return f"{self.a}/{self.den}" if self.den != 1 else f"{self.a}"
        return f"({self.a}{self.b:+}i)/{self.den}" if self.den != 1 else f"({self.a}{self.b:+}i)"

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(
            self.a * other.den + other.a * self.den,
            self.b * other.den + other.b * self.den,
            self.den * other.den,
        )

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.a, -self.b, self.den, _normalized=True)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(
            self.a * other.den - other.a * self.den,
            self.b * other.den - other.b * self.den,
            self.den * other.den,
        )

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(
            self.a * other.a - self.b * other.b,
            self.a * other.b + self.b * other.a,
            self.den * other.den,
        )

    __rmul__ = __mul__

    def inverse(self):
        n = self.a * self.a + self.b * self.b
        if n == 0:
            raise ZeroDivisionError("inverse of zero GaussianRational")
        return GaussianRational(self.den * self.a, -self.den * self.b, n)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("GaussianRational powers must be integers")
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self):
        return GaussianRational(self.a, -self.b, self.den, _normalized=True)


def _coerce(x):
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, int):
        return GaussianRational(x, 0, 1, _normalized=True)
    if isinstance(x, Fraction):
        return GaussianRational(x.numerator, 0, x.denominator, _normalized=True)
    return NotImplemented


def _isqrt_exact(n):
    from math import isqrt

    if n < 0:
        return None
    r = isqrt(n)
    return r if r * r == n else None


def _fraction_sqrt(fr: Fraction):
    pn = _isqrt_exact(fr.numerator)
    pd = _isqrt_exact(fr.denominator)
    if pn is None or pd is None:
        return None
    return Fraction(pn, pd)


def sqrt_exact(x: "GaussianRational"):
    """A square root of x inside Q(i), or None if there is none.

    Picks the root with re > 0, or re == 0 and im >= 0.
    """
    a, b = x.re, x.im
    if b == 0:
        if a >= 0:
            r = _fraction_sqrt(a)
            return None if r is None else GaussianRational.from_fraction(r)
        r = _fraction_sqrt(-a)
        return None if r is None else GaussianRational.from_fraction(0, r)
    n2 = a * a + b * b
    n = _fraction_sqrt(n2)
    if n is None:
        return None
    p2 = (a + n) / 2
    p = _fraction_sqrt(p2)
    if p is None or p == 0:
        return None
    q = b / (2 * p)
    cand = GaussianRational.from_fraction(p, q)
    if cand * cand == x:
        return cand if (cand.re > 0 or (cand.re == 0 and cand.im >= 0)) else -cand
    return None


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


def gr(re, im=0):
    """Shorthand constructor accepting ints, Fractions, or "p/q" strings."""
    return GaussianRational.from_fraction(Fraction(str(re)), Fraction(str(im)))
