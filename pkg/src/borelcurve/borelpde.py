"""Borel-plane PDE and the exact germ / sector recursions.

The Borel operator of  sum eps^i P_i y^(i) = eps R  is

    B = d_z^d + P_{d-1} d_z^{d-1} d_w + ... + P_0 d_w^d,

acting on the germ phi(w, z) with initial data phi(0, z) = R/P_0-branch.
The perturbative germ recursion is exact over RatFunc; exponential
sectors (d=2) are solved as chains u_0, u_1, ... so that

    y_k(z) = sum_l C_{k-l} u_l(z)

with the integration constants C left symbolic until matching fixes them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath as mp
import numpy as np

from .exact import GaussianRational, Poly, RatFunc
from .exact.gaussrat import ONE, ZERO, sqrt_exact
from .exact.linalg import rref
from .ode import OdeSpec, Singulant, quadratic_singulant_forms


@dataclass(frozen=True)
class BorelPde:
    """Operator triples (z-order, w-order, coefficient Poly)."""

    ode: OdeSpec
    triples: tuple

    @property
    def initial_value(self):
        """phi(0, z) = R/P_0, the distinguished origin branch."""
        return RatFunc(self.ode.R, self.ode.P[0])


def to_borel_pde(ode: OdeSpec) -> BorelPde:
    triples = [(ode.d, 0, Poly.const(1))]
    for i in range(ode.d - 1, -1, -1):
        triples.append((i, ode.d - i, ode.P[i]))
    return BorelPde(ode=ode, triples=tuple(triples))


class Germ:
    """Singular germ data at a Borel singularity.

    Coefficient k of the expansion (w-chi)^(-alpha) * sum Phi_k (w-chi)^k is
    sqrt(sqrt_scale) * coeffs[k], with sqrt_scale an exact Gaussian rational
    whose principal square root fixes the branch.  alpha may be negative for
    branch germs that vanish at the singular point.
    """

    def __init__(self, index, alpha, nu, coeffs, sqrt_scale=ONE, singulant=None, label=""):
        self.index = index
        self.alpha = Fraction(alpha)
        self.nu = nu
        self.coeffs = list(coeffs)
        self.sqrt_scale = GaussianRational(sqrt_scale)
        self.singulant = singulant
        self.label = label

    @property
    def order(self):
        return len(self.coeffs) - 1

    def scale_numeric(self):
        return complex(np.sqrt(complex(self.sqrt_scale)))

    def coeff_numeric(self, k, z):
        return self.scale_numeric() * complex(self.coeffs[k](z))

    def coeff_exact(self, k, z):
        """Exact value times the formal sqrt tag (only valid when tag is 1)."""
        if self.sqrt_scale != ONE:
            raise ValueError("germ carries an irrational scale; use coeff_numeric")
        return self.coeffs[k](z)

    def sequence_at(self, z0, K=None, dps=50):
        """[Phi_k(z0)] as mpmath complex numbers at dps digits.

        Working precision is boosted per coefficient by its integer bit
        size: exact numerators can carry enormous nearly-cancelling
        coefficients, and Horner at fixed precision would shred them.
        """
        K = self.order if K is None else min(K, self.order)
        out = []
        for k in range(K + 1):
            rf = self.coeffs[k]
            bits = 0
            for p in (rf.num, rf.den):
                for c in p.coeffs:
                    bits = max(bits, abs(c.a).bit_length(), abs(c.b).bit_length(),
                               c.den.bit_length())
            extra = int(bits * 0.302) + 4 * max(int(rf.num.degree if rf.num.coeffs else 0), 1)
            with mp.workdps(dps + extra + 15):
                z = mp.mpc(z0)
                scale = mp.sqrt(_to_mpc(self.sqrt_scale))
                val = scale * rf.num.eval_numeric(z) / rf.den.eval_numeric(z)
            with mp.workdps(dps):
                out.append(+val)
        return out

    def dump_csv(self, path):
        """Exact-mode germ dump: k, num(z), den(z), scale."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["k", "num", "den", "scale"])
            scale = f"sqrt({self.sqrt_scale!r})"
            for k, rf in enumerate(self.coeffs):
                wr.writerow([k, _poly_str(rf.num), _poly_str(rf.den), scale])


def _poly_str(p: Poly):
    return " ".join(f"{c.re}{'+' if c.im >= 0 else ''}{c.im}i" for c in p.coeffs) or "0"


def _to_mpc(g: GaussianRational):
    return mp.mpc(mp.mpf(g.a) / g.den, mp.mpf(g.b) / g.den)


# -- perturbative germ --------------------------------------------------


def perturbative_germ(pde: BorelPde, K: int) -> Germ:
    """Exact origin germ Phi_0..Phi_K from the physical recursion.

    y_0 = R/P_0,  y_k = -(1/P_0) sum_{i=1}^{min(d,k)} P_i y_{k-i}^{(i)},
    Phi_k = y_k / k!.  Exact for any d with polynomial coefficients.
    """
    ode = pde.ode
    if K < 2:
        raise ValueError("K >= 2 required")
    if ode.homogeneous:
        raise ValueError("homogeneous problem has no distinguished perturbative germ")
    invP0 = RatFunc(Poly.const(1), ode.P[0])
    ys = [RatFunc(ode.R, ode.P[0])]
    derivs = {0: [ys[0]]}  # derivs[k][j] = j-th derivative of y_k
    for k in range(1, K + 1):
        acc = RatFunc(Poly(()))
        for i in range(1, min(ode.d, k) + 1):
            dl = derivs[k - i]
            while len(dl) <= i:
                dl.append(dl[-1].derivative())
            if i < ode.d:
                acc = acc + RatFunc(ode.P[i]) * dl[i]
            else:
                acc = acc + dl[i]
        ys.append(-invP0 * acc)
        derivs[k] = [ys[k]]
    fact = Fraction(1)
    coeffs = []
    for k, y in enumerate(ys):
        if k > 0:
            fact *= k
        coeffs.append(y * GaussianRational(Fraction(1, fact)))
    return Germ(index=0, alpha=0, nu=None, coeffs=coeffs, label="origin")


def perturbative_germ_d2(pde: BorelPde, K: int) -> Germ:
    """The d=2 Borel-plane recursion, kept as an independent route:

    Phi_0 = R/P_0, Phi_1 = -(P_1/P_0) Phi_0',
    Phi_k = -(Phi_{k-2}'' + (k-1) P_1 Phi_{k-1}') / (k (k-1) P_0).
    """
    ode = pde.ode
    if ode.d != 2:
        raise ValueError("d = 2 only")
    P0, P1 = ode.P[0], ode.P[1]
    invP0 = RatFunc(Poly.const(1), P0)
    phis = [RatFunc(ode.R, P0)]
    phis.append(-RatFunc(P1) * invP0 * phis[0].derivative())
    for k in range(2, K + 1):
        val = phis[k - 2].derivative().derivative() + RatFunc(P1) * phis[k - 1].derivative() * GaussianRational(k - 1)
        phis.append(-invP0 * val * GaussianRational(Fraction(1, k * (k - 1))))
    return Germ(index=0, alpha=0, nu=None, coeffs=phis, label="origin")


def origin_sequence_mp(ode: OdeSpec, z0, K, dps=50):
    """[Phi_k(z0)] for k <= K at dps digits via truncated-Taylor recursion.

    Runs the physical recursion in the ring of Taylor series about z0, so a
    few hundred coefficients at 50 digits cost seconds rather than the
    exact-rational blowup.  Series lose one order per k; the buffer covers it.
    """
    M = K + ode.d + 4
    with mp.workdps(dps + 10):
        z0 = mp.mpc(z0)

        def poly_series(p: Poly):
            # Taylor coefficients of p(z0 + t) to length M, by Horner shift
            out = [mp.mpc(0)] * M
            for c in reversed([_to_mpc(c) for c in p.coeffs]):
                new = [mp.mpc(0)] * M
                for m in range(M):
                    v = out[m] * z0
                    if m > 0:
                        v += out[m - 1]
                    new[m] = v
                new[0] += c
                out = new
            return out

        def series_mul(a, b, n):
            out = [mp.mpc(0)] * n
            for i, ai in enumerate(a[:n]):
                if ai == 0:
                    continue
                for j, bj in enumerate(b[: n - i]):
                    out[i + j] += ai * bj
            return out

        def series_divide(num, den, n):
            # num/den as series; den[0] != 0; den short (polynomial Taylor), so
            # the recurrence costs O(deg(den) * n)
            nz = [t for t, v in enumerate(den) if t > 0 and v != 0 and t < n]
            inv0 = 1 / den[0]
            out = [mp.mpc(0)] * n
            for m in range(n):
                s = num[m] if m < len(num) else mp.mpc(0)
                for t in nz:
                    if t > m:
                        break
                    s -= den[t] * out[m - t]
                out[m] = s * inv0
            return out

        def series_deriv(a):
            return [a[m] * m for m in range(1, len(a))]

        P_series = [poly_series(p) for p in ode.P]
        R_series = poly_series(ode.R)
        ys = [series_divide(R_series, P_series[0], M)]
        for k in range(1, K + 1):
            n = M - k
            acc = [mp.mpc(0)] * n
            for i in range(1, min(ode.d, k) + 1):
                di = ys[k - i]
                for _ in range(i):
                    di = series_deriv(di)
                pi = series_mul(P_series[i], di, n) if i < ode.d else di[:n]
                for m in range(min(n, len(pi))):
                    acc[m] += pi[m]
            ys.append([-v for v in series_divide(acc, P_series[0], n)])
        out = []
        fact = mp.mpf(1)
        for k in range(K + 1):
            if k > 0:
                fact *= k
            out.append(+ys[k][0] / fact)
    return out


# -- exponential sectors (d = 2) -----------------------------------------


class SectorRecursionError(RuntimeError):
    pass


@dataclass
class SectorSeries:
    """Exponential sector with unresolved integration constants.

    y_k(z) = sum_{l=0}^{k} C_{k-l} * u_l(z); the chain u_l is exact.  beta is
    the epsilon-offset exponent (fixed to the germ alpha by the inner-outer
    consistency condition).  C[k] is None while symbolic.
    """

    index: int
    singulant: Singulant
    chain: list            # u_0 .. u_K as RatFunc
    beta: Fraction = Fraction(0)
    C: list = field(default_factory=list)

    @property
    def order(self):
        return len(self.chain) - 1

    def resolved(self):
        return all(c is not None for c in self.C)

    def y_coeff(self, k):
        """y_k as RatFunc; requires resolved constants."""
        if not self.resolved():
            raise ValueError("integration constants unresolved")
        acc = RatFunc(Poly(()))
        for l in range(k + 1):
            c = self.C[k - l]
            if not (isinstance(c, GaussianRational) and c.is_zero()):
                acc = acc + RatFunc.const(c) * self.chain[l]
        return acc

    def with_constants(self, values):
        vals = [GaussianRational(v) if not isinstance(v, GaussianRational) else v for v in values]
        return SectorSeries(self.index, self.singulant, list(self.chain), self.beta, list(vals))


def _rational_homogeneous_solution(a: RatFunc, b: RatFunc):
    """Rational H with H' a + H b = 0, i.e. H'/H = -b/a, as prod (z-rho)^m.

    Works when -b/a has only simple rational poles with integer residues.
    Returns None otherwise.
    """
    r = -b / a
    if r.is_zero():
        return RatFunc.const(1)
    pole_list, residual = r.poles()
    if residual.degree >= 1:
        return None
    num_deg = r.num.degree
    den_deg = r.den.degree
    if num_deg >= den_deg:
        return None  # polynomial part integrates to non-log terms
    H = RatFunc.const(1)
    recon = RatFunc(Poly(()))
    dden = r.den.derivative()
    for rho, order in pole_list:
        if order != 1:
            return None
        res = r.num(rho) / dden(rho)
        fr = res.re
        if res.im != 0 or fr.denominator != 1:
            return None
        m = int(fr)
        factor = RatFunc(Poly((-rho, ONE)))
        H = H * factor ** m
        recon = recon + RatFunc.const(GaussianRational(m)) / factor
    if recon != r:
        return None
    return H


def _particular_solution(a: RatFunc, b: RatFunc, rhs: RatFunc, pole_points, degree_bound):
    """Rational u with u' a + u b = rhs, by bounded-degree linear ansatz.

    u = N(z) / prod (z - rho)^M over the allowed pole points; N unknown.
    Returns None if no solution exists within the bounds.
    """
    if rhs.is_zero():
        return RatFunc(Poly(()))
    # allowed pole orders: start from the orders suggested by rhs and a
    for extra in (0, 2):
        D = Poly((ONE,))
        for rho in pole_points:
            m = max(0, -rhs.valuation_at(rho)) + extra
            if m:
                D = D * Poly((-rho, ONE)) ** m
        for deg_n in (degree_bound, 2 * degree_bound + 4):
            Dr = RatFunc(D)
            Dp = RatFunc(D.derivative())
            # (N' D - N D') a + N b D = rhs D^2   (all polynomial after clearing)
            unknowns = deg_n + 1
            # build coefficient polynomials for each unknown basis monomial
            basis_exprs = []
            for j in range(unknowns):
                Nj = Poly([ZERO] * j + [ONE])
                expr = (RatFunc(Nj.derivative()) * Dr - RatFunc(Nj) * Dp) * a + RatFunc(Nj) * b * Dr
                basis_exprs.append(expr)
            rhs_expr = rhs * Dr * Dr
            # common denominator
            dens = [e.den for e in basis_exprs] + [rhs_expr.den]
            common = dens[0]
            for d in dens[1:]:
                g = common.gcd(d)
                common = common * d.exact_div(g)
            polys = [e.num * common.exact_div(e.den) for e in basis_exprs]
            rp = rhs_expr.num * common.exact_div(rhs_expr.den)
            max_len = max([p.degree for p in polys if not p.is_zero()] + [rp.degree, 0]) + 1
            rows = []
            for t in range(int(max_len)):
                row = {j: polys[j][t] for j in range(unknowns) if not polys[j][t].is_zero()}
                if not rp[t].is_zero():
                    row[unknowns] = -rp[t]
                if row:
                    rows.append(row)
            pivots, reduced = rref(rows, unknowns + 1)
            if unknowns in pivots:
                continue  # inconsistent: enlarge
            sol = [ZERO] * unknowns
            for pcol, row in zip(pivots, reduced):
                sol[pcol] = -row.get(unknowns, ZERO)
            cand = RatFunc(Poly(sol), D)
            if cand.derivative() * a + cand * b == rhs:
                return cand
    return None


def sector_recursion(pde: BorelPde, sing: Singulant, K: int) -> SectorSeries:
    """Exact d=2 sector chain for the singulant's recursion ODEs:

        u_0' (2 chi' - P1) + u_0 chi'' = 0
        u_l' (2 chi' - P1) + u_l chi'' = u_{l-1}''

    Raises SectorRecursionError when chi' is not rational or the rational
    ansatz fails; callers then use numeric mode.
    """
    ode = pde.ode
    if ode.d != 2:
        raise SectorRecursionError("exact sector chains implemented for d = 2")
    if sing.closed is None:
        raise SectorRecursionError("singulant lacks closed form")
    A, C, g, sgn = sing.closed
    # chi' must be rational: sqrt part constant-square or absent
    if C is not None and not C.is_zero() and g.degree >= 1:
        raise SectorRecursionError("chi' irrational (sqrt part); use numeric sector mode")
    gs = sqrt_exact(g[0]) if (C is not None and not C.is_zero()) else ZERO
    if gs is None:
        raise SectorRecursionError("sqrt part not exact in Q(i)")
    chip = RatFunc(A.derivative() + C.derivative().scale(GaussianRational(sgn) * gs)) if (C is not None and not C.is_zero()) else RatFunc(A.derivative())
    a = chip * GaussianRational(2) - RatFunc(ode.P[1])
    b = chip.derivative()
    if a.is_zero():
        raise SectorRecursionError("degenerate sector: 2 chi' = P1 identically")
    H = _rational_homogeneous_solution(a, b)
    if H is None:
        raise SectorRecursionError("no rational homogeneous solution; use numeric sector mode")
    pole_points = [rho for rho, _ in RatFunc(Poly.const(1), a.num).poles()[0]]
    pole_points += [rho for rho, _ in H.poles()[0]] if not H.is_polynomial() else []
    pole_points = list(dict.fromkeys(pole_points))
    degree_bound = int(max(ode.P[0].degree, ode.P[1].degree, 1)) + K
    chain = [H]
    for l in range(1, K + 1):
        rhs = chain[l - 1].derivative().derivative()
        u = _particular_solution(a, b, rhs, pole_points, degree_bound)
        if u is None:
            raise SectorRecursionError(f"rational ansatz failed at chain index {l}")
        chain.append(u)
    return SectorSeries(index=sing.index, singulant=sing, chain=chain, C=[None] * (K + 1))
