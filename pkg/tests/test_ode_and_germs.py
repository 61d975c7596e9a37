"""ODE model, characteristic roots, singulants, and the germ recursions."""

from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from borelcurve.exact import Poly, RatFunc
from borelcurve.exact.gaussrat import gr
from borelcurve.ode import (OdeSpec, Singulant, TurningPointOnPathError,
                            characteristic_roots, integrate_singulant,
                            quadratic_singulant_forms)
from borelcurve.borelpde import (origin_sequence_mp, perturbative_germ,
                                 perturbative_germ_d2, sector_recursion, to_borel_pde)
from borelcurve.systems import cubic_ode, pearcey_ode, running_ode
from borelcurve.acceptance import running_phi0_closed_form


class TestCharacteristicRoots:
    def test_running(self):
        roots, deg = characteristic_roots(running_ode(), 2.0 + 0j)
        assert not deg
        assert np.allclose(sorted(r.real for r in roots), [1, 2], atol=1e-12)

    def test_pearcey_origin(self):
        roots, _ = characteristic_roots(pearcey_ode(), 0j)
        vals = sorted(roots, key=lambda r: r.imag)
        assert np.allclose(vals, [-1j, 0, 1j], atol=1e-12)

    def test_cubic_at_4(self):
        # quadratic formula oracle: roots of x^2 - 2x + (1-z) at z=4
        roots, _ = characteristic_roots(cubic_ode(), 4.0 + 0j)
        assert np.allclose(sorted(r.real for r in roots), [-1, 3], atol=1e-12)

    def test_vieta(self):
        ode = running_ode()
        for z in (1.7 + 0.3j, -2.1 + 1j):
            roots, _ = characteristic_roots(ode, z)
            assert abs(sum(roots) - ode.P[1].eval_numeric(z)) < 1e-10
            assert abs(np.prod(roots) - ode.P[0].eval_numeric(z)) < 1e-10


class TestSingulants:
    def test_closed_forms(self):
        A, C, g, h = quadratic_singulant_forms(running_ode())
        s1 = Singulant(running_ode(), 1, closed=(A, C, g, +1)).with_constant(gr(0), gr(0))
        assert s1.chi_rational() == RatFunc(Poly.parse(["0", "0", "1/2"]))
        s2 = Singulant(running_ode(), 2, closed=(A, C, g, -1)).with_constant(gr(1), gr("1/2"))
        assert s2.chi_rational() == RatFunc(Poly.parse(["-1/2", "1"]))

    def test_cubic_sqrt_part(self):
        A, C, g, h = quadratic_singulant_forms(cubic_ode())
        # chi_- = z - (2/3) z^(3/2) - 1/3 once anchored at z=1
        s = Singulant(cubic_ode(), 1, closed=(A, C, g, -1)).with_constant(gr(1), gr(0))
        assert s.constant == gr("-1/3")
        assert abs(s.chi_numeric(4.0 + 0j) - (4 - 2 / 3 * 8 - 1 / 3)) < 1e-12

    def test_integrate_closed_form(self):
        A, C, g, _ = quadratic_singulant_forms(running_ode())
        s1 = Singulant(running_ode(), 1, closed=(A, C, g, +1)).with_constant(gr(0), gr(0))
        val = integrate_singulant(s1, [0j, 2.0 + 0j])
        assert abs(val - 2.0) < 1e-12

    def test_integrate_numeric_path_independence(self):
        ode = running_ode()
        s = Singulant(ode, 1, base_point=0j, base_value=0j, root_selector=0.0 + 0j)
        up = integrate_singulant(s, [0j, 1 + 0.8j, 2.0 + 0j])
        down = integrate_singulant(s, [0j, 1 - 0.8j, 2.0 + 0j])
        # both paths avoid the z=1 turning point but are NOT homotopic around
        # it for the pair; for this polynomial singulant both give z^2/2
        assert abs(up - 2.0) < 1e-9 and abs(down - 2.0) < 1e-9

    def test_turning_point_reroute_error(self):
        ode = running_ode()
        s = Singulant(ode, 1, base_point=0j, base_value=0j, root_selector=0.0 + 0j)
        with pytest.raises(TurningPointOnPathError):
            integrate_singulant(s, [0j, 2.0 + 0j])  # straight through z=1

    def test_constant_path(self):
        A, C, g, _ = quadratic_singulant_forms(running_ode())
        s1 = Singulant(running_ode(), 1, closed=(A, C, g, +1)).with_constant(gr(0), gr(0))
        assert abs(integrate_singulant(s1, [1.5 + 0j, 1.5 + 0j]) - 1.125) < 1e-12


class TestBorelPde:
    def test_operator_triples(self):
        pde = to_borel_pde(running_ode())
        assert pde.triples == ((2, 0, Poly.parse(["1"])),
                               (1, 1, Poly.parse(["1", "1"])),
                               (0, 2, Poly.parse(["0", "1"])))
        assert pde.initial_value == RatFunc(Poly.parse(["-1"]), Poly.parse(["0", "1"]))

    def test_first_order_trivial(self):
        ode = OdeSpec(d=1, P=(Poly.parse(["1"]),), R=Poly.parse(["1"]))
        pde = to_borel_pde(ode)
        assert pde.triples == ((1, 0, Poly.parse(["1"])), (0, 1, Poly.parse(["1"])))

    def test_pearcey_operator(self):
        pde = to_borel_pde(pearcey_ode())
        orders = [(a, b) for a, b, _ in pde.triples]
        assert orders == [(3, 0), (2, 1), (1, 2), (0, 3)]

    def test_germ_first_coefficients(self):
        germ = perturbative_germ(to_borel_pde(running_ode()), 3)
        assert germ.coeffs[0] == RatFunc(Poly.parse(["-1"]), Poly.parse(["0", "1"]))
        assert germ.coeffs[1] == RatFunc(Poly.parse(["-1", "-1"]), Poly.parse(["0", "0", "0", "1"]))

    def test_germ_closed_form_prefix(self):
        germ = perturbative_germ(to_borel_pde(running_ode()), 10)
        for k in range(11):
            assert germ.coeffs[k] == running_phi0_closed_form(k)

    def test_two_recursions_agree(self):
        pde = to_borel_pde(running_ode())
        g1 = perturbative_germ(pde, 8)
        g2 = perturbative_germ_d2(pde, 8)
        assert all(g1.coeffs[k] == g2.coeffs[k] for k in range(9))

    def test_mp_sequence_matches_exact(self):
        ode = running_ode()
        germ = perturbative_germ(to_borel_pde(ode), 25)
        z0 = mp.mpc(1.5, 0.5)
        seq = origin_sequence_mp(ode, z0, 25, dps=40)
        exact = germ.sequence_at(z0, 25, dps=40)
        assert max(abs(a - b) for a, b in zip(seq, exact)) < mp.mpf(10) ** (-35)

    def test_pole_report(self):
        # P_0 zero at a requested sample -> ZeroDivisionError carries the pole
        germ = perturbative_germ(to_borel_pde(running_ode()), 4)
        with pytest.raises(ZeroDivisionError):
            germ.coeffs[0](gr(0))


class TestSectorRecursion:
    def test_running_chains(self):
        ode = running_ode()
        pde = to_borel_pde(ode)
        A, C, g, _ = quadratic_singulant_forms(ode)
        s1 = Singulant(ode, 1, closed=(A, C, g, +1)).with_constant(gr(0), gr(0))
        sec = sector_recursion(pde, s1, 5)
        # u_l proportional to (-2)^l Gamma(l+1/2)/Gamma(1/2) (1-z)^(-2l-1), so
        # u_{l+1}/u_l = -(2l+1)/(1-z)^2
        z = gr(3)
        for l in range(5):
            ratio = sec.chain[l + 1](z) / sec.chain[l](z)
            assert ratio == gr(Fraction(-(2 * l + 1), 4))

    def test_homogeneous_substitution(self):
        # u_0 solves u' (2 chi' - P1) + u chi'' = 0 with chi = z^2/2
        ode = running_ode()
        pde = to_borel_pde(ode)
        A, C, g, _ = quadratic_singulant_forms(ode)
        s1 = Singulant(ode, 1, closed=(A, C, g, +1)).with_constant(gr(0), gr(0))
        sec = sector_recursion(pde, s1, 2)
        u0 = sec.chain[0]
        a = RatFunc(Poly.parse(["-1", "1"]))   # 2z - (1+z)
        assert (u0.derivative() * a + u0).is_zero()

    def test_constant_sector(self):
        ode = running_ode()
        pde = to_borel_pde(ode)
        A, C, g, _ = quadratic_singulant_forms(ode)
        s2 = Singulant(ode, 2, closed=(A, C, g, -1)).with_constant(gr(1), gr("1/2"))
        sec = sector_recursion(pde, s2, 4)
        assert sec.chain[0] == RatFunc(Poly.parse(["1"]))
        assert all(u.is_zero() for u in sec.chain[1:])

    def test_resolved_sector_coefficients(self):
        ode = running_ode()
        pde = to_borel_pde(ode)
        A, C, g, _ = quadratic_singulant_forms(ode)
        s1 = Singulant(ode, 1, closed=(A, C, g, +1)).with_constant(gr(0), gr(0))
        sec = sector_recursion(pde, s1, 3).with_constants([1, 0, 0, 0])
        assert sec.y_coeff(2) == sec.chain[2]
