"""Curve discovery: find an algebraic curve satisfied by the Borel germ.

Substituting the known germ phi(w, z) into an unknown-coefficient curve
P(w, phi) = sum a_k(w, z) phi^k makes every w-order coefficient LINEAR in
the unknown scalar z-coefficients of the a_k^(l), so each candidate shape
is an exact nullspace computation.  Shapes are scanned in the grading
(D, total w-degree, z-degree bound) until a shape has a one-dimensional
kernel whose curve survives verification at twice the solve depth.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .exact import CurvePoly, GaussianRational, Poly, RatFunc, WPoly
from .exact.gaussrat import ONE, ZERO, gr
from .exact.linalg import nullspace, rref
from .borelpde import Germ, perturbative_germ, to_borel_pde
from .ode import OdeSpec


@dataclass(frozen=True)
class AnsatzShape:
    D: int
    d_k: tuple  # w-degree bound per phi power, length D+1
    m: int      # z-degree bound of each a_k^(l)

    def __post_init__(self):
        if self.D < 1 or self.m < 0 or any(d < 0 for d in self.d_k):
            raise ValueError("invalid shape")
        if len(self.d_k) != self.D + 1:
            raise ValueError("d_k must have length D+1")

    @staticmethod
    def uniform(D, d, m):
        return AnsatzShape(D, (d,) * (D + 1), m)

    @property
    def n_unknowns(self):
        return sum(d + 1 for d in self.d_k) * (self.m + 1)

    def columns(self):
        """Unknown index order: lexicographic in (k, l, j)."""
        cols = []
        for k, dk in enumerate(self.d_k):
            for l in range(dk + 1):
                for j in range(self.m + 1):
                    cols.append((k, l, j))
        return cols


class GermPowers:
    """Cache of w-series powers of a germ, symbolic and at sample points."""

    def __init__(self, coeffs):
        self.coeffs = list(coeffs)  # RatFunc list, w-order 0..len-1
        self._sym = {1: list(coeffs)}
        self._scalar = {}

    def extend(self, germ_coeffs):
        if len(germ_coeffs) > len(self.coeffs):
            self.coeffs = list(germ_coeffs)
            self._sym = {1: list(germ_coeffs)}
            self._scalar = {}

    def symbolic(self, k, n_orders):
        """(phi^k)_n for n < n_orders, as RatFunc."""
        if n_orders > len(self.coeffs):
            raise ValueError("germ order too small for requested expansion depth")
        if k == 0:
            out = [RatFunc.const(1)] + [RatFunc(Poly(()))] * (n_orders - 1)
            return out
        have = self._sym.get(k)
        if have is not None and len(have) >= n_orders:
            return have[:n_orders]
        prev = self.symbolic(k - 1, n_orders)
        base = self.coeffs
        out = []
        for n in range(n_orders):
            acc = RatFunc(Poly(()))
            for t in range(n + 1):
                a = prev[t]
                b = base[n - t]
                if a.is_zero() or b.is_zero():
                    continue
                acc = acc + a * b
            out.append(acc)
        self._sym[k] = out
        return out

    def at_sample(self, z_s, k, n_orders):
        """(phi^k)_n(z_s) scalars for n < n_orders."""
        key = (z_s, 1)
        if key not in self._scalar:
            self._scalar[key] = [c(z_s) for c in self.coeffs]
        if k == 0:
            return [ONE] + [ZERO] * (n_orders - 1)
        kk = (z_s, k)
        have = self._scalar.get(kk)
        if have is not None and len(have) >= n_orders:
            return have[:n_orders]
        prev = self.at_sample(z_s, k - 1, n_orders)
        base = self._scalar[(z_s, 1)]
        out = []
        for n in range(n_orders):
            acc = ZERO
            for t in range(n + 1):
                acc = acc + prev[t] * base[n - t]
            out.append(acc)
        self._scalar[kk] = out
        return out


@dataclass
class ConsistencySystem:
    shape: AnsatzShape
    N: int
    rows: list
    ncols: int
    columns: list

    def kernel(self):
        return nullspace(self.rows, self.ncols)

    @property
    def kernel_dimension(self):
        return len(self.kernel())


def consistency_system(germ: Germ, shape: AnsatzShape, N: int, powers=None) -> ConsistencySystem:
    """Exact homogeneous system from orders w^0..w^N of P(w, phi(w,z)).

    Each w-order is a rational function of z; clearing its denominator and
    equating every z-power to zero gives the rows.  Underdetermination is
    visible as kernel dimension > 1.
    """
    if powers is None:
        powers = GermPowers(germ.coeffs)
    cols = shape.columns()
    col_of = {c: i for i, c in enumerate(cols)}
    sym = {k: powers.symbolic(k, N + 1) for k in range(shape.D + 1)}
    rows = []
    for b in range(N + 1):
        # terms t_{k,l} = (phi^k)_{b-l}; common denominator across the order
        terms = {}
        den_lcm = Poly((ONE,))
        for k, dk in enumerate(shape.d_k):
            for l in range(min(dk, b) + 1):
                rf = sym[k][b - l]
                if rf.is_zero():
                    continue
                terms[(k, l)] = rf
                g = den_lcm.gcd(rf.den)
                den_lcm = den_lcm * rf.den.exact_div(g)
        if not terms:
            continue
        by_power = {}
        for (k, l), rf in terms.items():
            poly = rf.num * den_lcm.exact_div(rf.den)
            for j in range(shape.m + 1):
                col = col_of[(k, l, j)]
                for t, c in enumerate(poly.coeffs):
                    if c.is_zero():
                        continue
                    by_power.setdefault(t + j, {})[col] = by_power.get(t + j, {}).get(col, ZERO) + c
        for t, row in sorted(by_power.items()):
            row = {c: v for c, v in row.items() if not v.is_zero()}
            if row:
                rows.append(row)
    return ConsistencySystem(shape=shape, N=N, rows=rows, ncols=len(cols), columns=cols)


def _sampled_kernel(powers: GermPowers, shape: AnsatzShape, N: int, samples):
    """Fast kernel estimate from exact z-samples (superset of the true kernel)."""
    cols = shape.columns()
    col_of = {c: i for i, c in enumerate(cols)}
    rows = []
    for z_s in samples:
        sk = {k: powers.at_sample(z_s, k, N + 1) for k in range(shape.D + 1)}
        zpow = [z_s ** j if j else ONE for j in range(shape.m + 1)]
        for b in range(N + 1):
            row = {}
            for k, dk in enumerate(shape.d_k):
                for l in range(min(dk, b) + 1):
                    v = sk[k][b - l]
                    if v.is_zero():
                        continue
                    for j in range(shape.m + 1):
                        col = col_of[(k, l, j)]
                        row[col] = row.get(col, ZERO) + v * zpow[j]
            row = {c: v for c, v in row.items() if not v.is_zero()}
            if row:
                rows.append(row)
    return nullspace(rows, len(cols)), cols


def curve_from_vector(shape: AnsatzShape, cols, vec, origin_value=None, label=""):
    table = []
    for k, dk in enumerate(shape.d_k):
        wco = []
        for l in range(dk + 1):
            zco = [ZERO] * (shape.m + 1)
            for j in range(shape.m + 1):
                zco[j] = vec[cols.index((k, l, j))]
            wco.append(RatFunc(Poly(zco)))
        table.append(WPoly(wco))
    return CurvePoly(table, origin_value=origin_value, label=label)


def verify_curve_on_germ(curve: CurvePoly, powers: GermPowers, order: int) -> bool:
    """Residual of P(w, phi) vanishes identically through w^order (exact)."""
    sym = {k: powers.symbolic(k, order + 1) for k in range(curve.degree + 1)}
    for b in range(order + 1):
        acc = RatFunc(Poly(()))
        for k, wp in enumerate(curve.a):
            for l, rf in enumerate(wp.coeffs):
                if rf.is_zero() or l > b:
                    continue
                term = rf * sym[k][b - l]
                acc = acc + term
        if not acc.is_zero():
            return False
    return True


class CurveNotFound(Exception):
    def __init__(self, profile):
        super().__init__("no algebraic curve found within the shape budget")
        self.profile = profile


_DEFAULT_SAMPLES = tuple(
    gr(s) for s in ("2", "3", "-2", "5/2", "7/3", "-5/3", "4", "-7/2", "9/4", "11/5", "6", "-4")
)


def find_curve(ode: OdeSpec, max_D=4, max_dk=4, max_m=6, germ_order=None, samples=None):
    """Search shapes graded by (D, sum d_k, m) for a curve carrying the germ.

    Returns (curve, report).  The accepted curve has a one-dimensional
    kernel at its shape and zero symbolic residual through twice the solve
    depth; raises CurveNotFound with the per-shape rank profile otherwise.
    """
    if ode.homogeneous:
        raise ValueError("curve search needs the inhomogeneous perturbative germ")
    pde = to_borel_pde(ode)
    samples = list(samples or _DEFAULT_SAMPLES)
    # exclude samples at P_0 zeros (germ poles)
    samples = [s for s in samples if not ode.P[0](s).is_zero()]
    profile = []
    germ_cache = {}

    def germ_to(order):
        if not germ_cache or germ_cache["order"] < order:
            germ_cache["germ"] = perturbative_germ(pde, order)
            germ_cache["order"] = order
            germ_cache["powers"] = GermPowers(germ_cache["germ"].coeffs)
        return germ_cache["powers"]

    for D in range(1, max_D + 1):
        for d in range(0, max_dk + 1):
            for m in range(0, max_m + 1):
                shape = AnsatzShape.uniform(D, d, m)
                U = shape.n_unknowns
                # enough w-orders that the sampled equations overdetermine
                N = max(8, U // max(1, len(samples)) + 4, d + 2)
                if germ_order is not None:
                    N = min(N, germ_order // 2)
                powers = germ_to(2 * N)
                kern, cols = _sampled_kernel(powers, shape, N, samples)
                profile.append({"shape": (D, d, m), "N": N, "kernel_dim_sampled": len(kern)})
                if len(kern) != 1:
                    continue
                curve = curve_from_vector(
                    shape, cols, kern[0],
                    origin_value=RatFunc(ode.R, ode.P[0]),
                    label=f"{ode.label or 'ode'}-curve",
                )
                try:
                    curve = curve.normalized()
                except Exception:
                    continue
                if not verify_curve_on_germ(curve, powers, 2 * N):
                    profile[-1]["verified"] = False
                    continue
                # exact symbolic kernel dimension check at the accepted shape
                sym_system = consistency_system(germ_cache["germ"], shape, N, powers=powers)
                dim = len(sym_system.kernel())
                profile[-1]["kernel_dim_exact"] = dim
                if dim != 1:
                    continue
                report = {"shape": (D, d, m), "N": N, "profile": profile}
                return curve, report
    raise CurveNotFound(profile)
