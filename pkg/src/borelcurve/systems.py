"""Built-in example systems: the quadratic-curve workhorse, the cubic-curve
companion, and the Pearcey equation with its quartic curve."""

from __future__ import annotations

from .exact import CurvePoly, Poly, RatFunc, WPoly
from .exact.gaussrat import gr
from .ode import OdeSpec


def running_ode() -> OdeSpec:
    """eps^2 y'' + eps (1+z) y' + z y = -eps."""
    return OdeSpec(d=2, P=(Poly.parse(["0", "1"]), Poly.parse(["1", "1"])),
                   R=Poly.parse(["-1"]), label="running")


def cubic_ode() -> OdeSpec:
    """eps^2 y'' + 2 eps y' + (1-z) y = eps (cubic-curve companion)."""
    return OdeSpec(d=2, P=(Poly.parse(["1", "-1"]), Poly.parse(["2"])),
                   R=Poly.parse(["1"]), label="cubic")


def pearcey_ode() -> OdeSpec:
    """eps^3 y''' + eps y' + z y = 0."""
    return OdeSpec(d=3, P=(Poly.parse(["0", "1"]), Poly.parse(["1"]), Poly.parse(["0"])),
                   R=Poly.parse(["0"]), label="pearcey")


def running_curve() -> CurvePoly:
    """4(w - z^2/2)(w - z + 1/2) phi^2 - 4(w - z^2/2) phi + 1."""
    P = Poly.parse
    a2 = WPoly([RatFunc(P(["0", "0", "-1", "2"])), RatFunc(P(["2", "-4", "-2"])),
                RatFunc(P(["4"]))])
    a1 = WPoly([RatFunc(P(["0", "0", "2"])), RatFunc(P(["-4"]))])
    a0 = WPoly([RatFunc(P(["1"]))])
    return CurvePoly([a0, a1, a2],
                     origin_value=RatFunc(P(["-1"]), P(["0", "1"])), label="running")


def cubic_curve() -> CurvePoly:
    """The degree-3 curve of the cubic companion, normalized a_0 = 1."""
    P = Poly.parse
    a3 = WPoly([RatFunc(P(["-1", "6", "-9", "4"])), RatFunc(P(["-6", "18"])),
                RatFunc(P(["-9"]))])
    a1 = WPoly([RatFunc(P(["0", "-3"]))])
    a0 = WPoly([RatFunc(P(["1"]))])
    return CurvePoly([a0, a1, WPoly(()), a3],
                     origin_value=RatFunc(P(["1"]), P(["1", "-1"])), label="cubic")


def pearcey_curve() -> CurvePoly:
    """Quartic Borel curve of the Pearcey equation, from the saddle
    representation y = int exp(-(t^4/4 + t^2/2 - z t)/eps) dt:

        (64w^3+32w^2+72wz^2+4w+27z^4+2z^2) phi^4 - (8w+18z^2+2) phi^2
            + 8z phi - 1 = 0.

    Its leading-coefficient roots are the Pearcey singulants (they satisfy
    (chi')^3 + chi' + z = 0 identically) and their collision locus is
    z^2 (27 z^2 + 4)^3, with turning points at +-2i/(3 sqrt 3).
    """
    P = Poly.parse
    a4 = WPoly([RatFunc(P(["0", "0", "2", "0", "27"])), RatFunc(P(["4", "0", "72"])),
                RatFunc(P(["32"])), RatFunc(P(["64"]))])
    a2 = WPoly([RatFunc(P(["-2", "0", "-18"])), RatFunc(P(["-8"]))])
    a1 = WPoly([RatFunc(P(["0", "8"]))])
    a0 = WPoly([RatFunc(P(["-1"]))])
    return CurvePoly([a0, a1, a2, WPoly(()), a4], origin_value=None, label="pearcey")


BUILTIN_ODES = {"running": running_ode, "cubic": cubic_ode, "pearcey": pearcey_ode}
BUILTIN_CURVES = {"running": running_curve, "cubic": cubic_curve, "pearcey": pearcey_curve}
