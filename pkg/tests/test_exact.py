"""Exact arithmetic layer: round-trip properties and the discriminant
examples that gate everything downstream."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from borelcurve.exact import (CurvePoly, DegenerateCurveError, GaussianRational,
                              Poly, RatFunc, WPoly)
from borelcurve.exact.gaussrat import gr, sqrt_exact, I, ONE, ZERO
from borelcurve.exact.polynomial import square_split, squarefree_decomposition
from borelcurve.systems import cubic_curve, running_curve


small_rationals = st.fractions(min_value=-50, max_value=50, max_denominator=40)


@st.composite
def gaussians(draw):
    return GaussianRational.from_fraction(draw(small_rationals), draw(small_rationals))


@st.composite
def polys(draw):
    return Poly(draw(st.lists(gaussians(), max_size=5)))


class TestGaussianRational:
    @given(gaussians(), gaussians())
    def test_add_sub_round_trip(self, a, b):
        assert (a + b) - b == a

    @given(gaussians(), gaussians())
    def test_mul_div_round_trip(self, a, b):
        if not b.is_zero():
            assert (a * b) / b == a

    @given(gaussians())
    def test_conjugate_norm(self, a):
        n = a * a.conjugate()
        assert n.im == 0 and n.re >= 0

    def test_parse(self):
        assert gr("3/4", "-1/2") == GaussianRational(3, -2, 4)
        assert GaussianRational.parse(["2", "0"]) == GaussianRational(2)

    @pytest.mark.parametrize("x,root", [
        (gr(4), gr(2)), (gr(-4), gr(0, 2)), (gr("9/16"), gr("3/4")),
        (gr(0, 2), gr(1, 1)), (gr(-2), None), (gr(2), None),
    ])
    def test_sqrt_exact(self, x, root):
        s = sqrt_exact(x)
        if root is None:
            assert s is None
        else:
            assert s * s == x


class TestPoly:
    @given(polys(), polys())
    def test_divmod(self, a, b):
        if b.is_zero():
            return
        q, r = a.divmod(b)
        assert q * b + r == a
        assert r.is_zero() or r.degree < b.degree

    @given(polys(), polys())
    def test_gcd_divides(self, a, b):
        if a.is_zero() or b.is_zero():
            return
        g = a.gcd(b)
        if g.is_zero():
            return
        assert (a % g).is_zero() and (b % g).is_zero()

    def test_zero_degree_sentinel(self):
        assert Poly(()).degree == float("-inf")

    def test_squarefree(self):
        p = Poly.parse(["1", "1"]) ** 2 * Poly.parse(["-2", "1"])
        unit, factors = squarefree_decomposition(p)
        assert sorted(k for _, k in factors) == [1, 2]
        h, g = square_split(p)
        assert h == Poly.parse(["1", "1"])
        assert g == Poly.parse(["-2", "1"])

    def test_rational_roots_multiplicity(self):
        p = Poly.parse(["0", "1"]) ** 3 * Poly.parse(["-1", "1"])
        roots, res = p.rational_roots()
        assert sorted(roots, key=str) == sorted([ZERO, ZERO, ZERO, ONE], key=str)
        assert res.degree == 0


class TestRatFunc:
    @given(polys(), polys(), polys())
    def test_field_round_trip(self, a, b, c):
        if b.is_zero() or c.is_zero():
            return
        x = RatFunc(a, b)
        y = RatFunc(b, c)
        assert (x + y) - y == x
        if not y.is_zero():
            assert (x * y) / y == x

    def test_reduction_invariants(self):
        r = RatFunc(Poly.parse(["1", "2", "1"]), Poly.parse(["1", "1"]))
        assert r.is_polynomial() and r.num == Poly.parse(["1", "1"])
        r2 = RatFunc(Poly.parse(["2"]), Poly.parse(["0", "2"]))
        assert r2.den.leading() == ONE  # monic denominator

    def test_series_at_pole(self):
        r = RatFunc(Poly.parse(["1"]), Poly.parse(["0", "0", "1"]))
        k0, cs = r.series_at(gr(0), 3)
        assert k0 == -2 and cs[0] == ONE

    def test_valuation(self):
        r = RatFunc(Poly.parse(["0", "0", "3"]), Poly.parse(["-1", "1"]))
        assert r.valuation_at(gr(0)) == 2
        assert r.valuation_at(gr(1)) == -1


class TestCurve:
    def test_discriminant_running(self):
        # zero set {w = z^2/2}: disc proportional to (chi2-chi1)(w-chi1)
        disc = running_curve().discriminant_w()
        assert disc.degree == 1
        z = gr(2)
        root = -(disc[0](z)) / disc[1](z)
        assert root == gr(2)  # z^2/2 at z=2

    def test_discriminant_sqrt_normal_form(self):
        # phi^2 - w: disc proportional to w, branch point at the origin
        from borelcurve.exact.ratfunc import RF_ONE
        curve = CurvePoly([WPoly([RatFunc(Poly(())), -RF_ONE]), WPoly(()), WPoly([RF_ONE])])
        disc = curve.discriminant_w()
        assert disc.degree == 1 and disc[0].is_zero()

    def test_discriminant_cubic_zero_set(self):
        disc = cubic_curve().discriminant_w()
        # zero set {chi1, chi2} with chi_{1,2} = (-1+3z -+ 2 z^{3/2})/3 at z=4
        import numpy as np
        from borelcurve.roots import aberth_roots
        roots = sorted(aberth_roots(disc.numeric_coeffs(4.0 + 0j)), key=lambda w: w.real)
        expect = sorted([(-1 + 12 - 16) / 3, (-1 + 12 + 16) / 3])
        assert max(abs(r - e) for r, e in zip(roots, expect)) < 1e-9

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateCurveError):
            CurvePoly([WPoly([RatFunc(Poly.parse(["1"]))])])

    def test_json_round_trip(self, tmp_path):
        c = running_curve()
        p = tmp_path / "c.json"
        c.save(p)
        c2 = CurvePoly.load(p)
        assert c2 == c and c2.origin_value == c.origin_value

    def test_normalized_scalar(self):
        c = running_curve()
        scaled = CurvePoly([wp.scale(gr(-7, 3)) for wp in c.a], origin_value=c.origin_value)
        assert scaled.normalized() == c.normalized()
