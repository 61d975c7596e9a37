"""Bivariate curve polynomials P_z(w, phi) with RatFunc(z) coefficients.

A curve is stored as a phi-power table of WPoly entries.  The origin
branch value (the germ the curve was grown from, for inhomogeneous
problems) travels with the curve because downstream sheet bookkeeping
is defined relative to it.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .gaussrat import GaussianRational, ONE
from .polynomial import Poly
from .ratfunc import RatFunc, RF_ZERO, RF_ONE, _as_ratfunc
from .wpoly import WPoly, bareiss_determinant


class DegenerateCurveError(ValueError):
    pass


class CurvePoly:
    """P(w, phi) = sum_k a_k(w, z) phi**k, a_k a WPoly; a_D not identically 0."""

    def __init__(self, a, origin_value=None, label=""):
        a = [c if isinstance(c, WPoly) else WPoly(c) for c in a]
        while a and a[-1].is_zero():
            a.pop()
        if len(a) < 2:
            raise DegenerateCurveError("curve must have positive phi-degree")
        self.a = tuple(a)
        self.origin_value = origin_value  # RatFunc: distinguished branch phi(0, z), or None
        self.label = label

    @property
    def degree(self):
        return len(self.a) - 1

    @property
    def w_degrees(self):
        return [c.degree if not c.is_zero() else -1 for c in self.a]

    def __eq__(self, other):
        if not isinstance(other, CurvePoly):
            return NotImplemented
        return self.a == other.a

    def __repr__(self):
        return f"CurvePoly(D={self.degree}, d_k={self.w_degrees}, label={self.label!r})"

    # -- calculus -------------------------------------------------------

    def partial_phi(self):
        return [self.a[k].scale(GaussianRational(k)) for k in range(1, len(self.a))]

    def partial_w(self):
        return [c.derivative() for c in self.a]

    def partial_z(self):
        return [c.derivative_z() for c in self.a]

    def shift_w(self, w0):
        """The curve with w replaced by w0 + u (w0 a RatFunc of z); returns raw table."""
        return [c.shift_w(w0) for c in self.a]

    # -- evaluation -----------------------------------------------------

    def phi_poly_at(self, w, z):
        """Numeric coefficients [a_0(w,z), ..., a_D(w,z)] of the fiber polynomial."""
        return [_eval_wpoly(c, w, z) for c in self.a]

    def eval(self, w, z, phi):
        acc = 0j
        for c in reversed(self.a):
            acc = acc * phi + _eval_wpoly(c, w, z)
        return acc

    def eval_exact(self, w, z, phi):
        """Exact evaluation at GaussianRational points."""
        wv = _as_ratfunc(w)
        acc = GaussianRational(0)
        for c in reversed(self.a):
            acc = acc * phi + c.eval_w(wv)(z)
        return acc

    def phi_derivs_at(self, w, z, phi):
        """(P, P_phi, P_w, P_z) at a numeric point; for implicit differentiation."""
        P = 0j
        Pphi = 0j
        for k in range(self.degree, -1, -1):
            ak = _eval_wpoly(self.a[k], w, z)
            P = P * phi + ak
            if k >= 1:
                Pphi = Pphi * phi + k * ak
        Pw = 0j
        for c in reversed(self.partial_w()):
            Pw = Pw * phi + _eval_wpoly(c, w, z)
        Pz = 0j
        for c in reversed(self.partial_z()):
            Pz = Pz * phi + _eval_wpoly(c, w, z)
        return P, Pphi, Pw, Pz

    # -- discriminant ----------------------------------------------------

    def discriminant_w(self):
        """Res_phi(P, dP/dphi) / a_D as a WPoly in w.

        Zero set in w (for fixed z) = ramification locus of the projection
        to the w-plane, up to the poles/branch-at-infinity locus a_D = 0.
        """
        D = self.degree
        if D < 2:
            raise DegenerateCurveError("discriminant needs phi-degree >= 2")
        p = list(self.a)
        q = self.partial_phi()
        n, m = D, D - 1
        size = n + m
        zero = WPoly(())
        rows = []
        # Sylvester matrix: m rows of p, n rows of q (phi-coefficients, high first)
        p_hi = list(reversed(p))
        q_hi = list(reversed(q))
        for r in range(m):
            row = [zero] * size
            for j, c in enumerate(p_hi):
                row[r + j] = c
            rows.append(row)
        for r in range(n):
            row = [zero] * size
            for j, c in enumerate(q_hi):
                row[r + j] = c
            rows.append(row)
        res = bareiss_determinant(rows, WPoly((RF_ONE,)))
        if res.is_zero():
            return res
        return res.exact_div(self.a[-1])

    # -- normalization ----------------------------------------------------

    def normalized(self):
        """Scale so the first nonzero scalar coefficient in lex (k, l, j) order is 1.

        The kernel-vector solve determines curves only up to overall scale;
        this pins a representative.  For curves whose phi^0 w^0 entry is a
        nonzero constant (all the worked examples) this is just "constant
        term = 1".
        """
        for c in self.a:
            for rf in c.coeffs:
                if rf.is_zero():
                    continue
                for coef in rf.num.coeffs:
                    if not coef.is_zero():
                        inv = coef.inverse()
                        return CurvePoly(
                            [w.scale(inv) for w in self.a],
                            origin_value=self.origin_value,
                            label=self.label,
                        )
        raise DegenerateCurveError("zero curve cannot be normalized")

    # -- serialization -----------------------------------------------------

    def to_json_dict(self):
        def ser_poly(p: Poly):
            return [[str(c.re), str(c.im)] for c in p.coeffs]

        return {
            "D": self.degree,
            "d_k": self.w_degrees,
            "a": [
                [{"num": ser_poly(rf.num), "den": ser_poly(rf.den)} for rf in c.coeffs]
                for c in self.a
            ],
            "origin_value": None
            if self.origin_value is None
            else {"num": ser_poly(self.origin_value.num), "den": ser_poly(self.origin_value.den)},
            "label": self.label,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @staticmethod
    def from_json_dict(d):
        def de_poly(items):
            return Poly([GaussianRational.from_fraction(Fraction(re), Fraction(im)) for re, im in items])

        def de_rf(obj):
            return RatFunc(de_poly(obj["num"]), de_poly(obj["den"]))

        a = [WPoly([de_rf(entry) for entry in row]) for row in d["a"]]
        ov = d.get("origin_value")
        return CurvePoly(
            a,
            origin_value=None if ov is None else de_rf(ov),
            label=d.get("label", ""),
        )

    @staticmethod
    def load(path):
        with open(path) as fh:
            return CurvePoly.from_json_dict(json.load(fh))


def _eval_wpoly(c: WPoly, w, z):
    acc = 0j if isinstance(z, complex) else (z * 0)
    for rf in reversed(c.coeffs):
        acc = acc * w + rf(z)
    return acc
