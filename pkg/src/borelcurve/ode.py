"""The physical problem class and singulant machinery.

An OdeSpec is the singularly perturbed linear problem

    sum_{i=0}^{d} eps^i P_i(z) y^(i)(z) = eps R(z),    P_d = 1.

Singulants chi(z) are antiderivatives of characteristic roots; their
additive constants are deliberately unresolved at construction (the
inner-outer link selection fixes them later).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import GaussianRational, Poly, RatFunc
from .exact.gaussrat import sqrt_exact, ZERO, ONE
from .exact.polynomial import integrate_poly, square_split
from .roots import aberth_roots, match_roots, sort_stable


class TurningPointOnPathError(RuntimeError):
    pass


@dataclass(frozen=True)
class OdeSpec:
    d: int
    P: tuple  # P_0 .. P_{d-1}, each a Poly; P_d == 1 implicitly
    R: Poly
    label: str = ""

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if len(self.P) != self.d:
            raise ValueError(f"need exactly d={self.d} coefficient polynomials P_0..P_{self.d-1}")
        if self.P[0].is_zero():
            raise ValueError("P_0 must not be identically zero")
        object.__setattr__(self, "P", tuple(Poly(p) for p in self.P))
        object.__setattr__(self, "R", Poly(self.R))

    @property
    def homogeneous(self):
        return self.R.is_zero()

    # -- characteristic symbol ---------------------------------------

    def characteristic_coeffs(self, z):
        """Monic characteristic polynomial for chi', low order first, at numeric z.

        Singularity transport of the Borel operator gives sum_i P_i (-chi')^i = 0;
        normalizing to a monic polynomial in x = chi' yields coefficients
        (-1)^(d-i) P_i(z) (for d=2 this is the familiar x^2 - P_1 x + P_0).
        """
        out = []
        for i, p in enumerate(self.P):
            s = 1 if (self.d - i) % 2 == 0 else -1
            out.append(s * p.eval_numeric(z))
        out.append(1.0 + 0j)
        return out

    def characteristic_discriminant(self, z):
        """Discriminant of the characteristic polynomial at numeric z (degeneracy gauge)."""
        cs = np.array(self.characteristic_coeffs(z))
        r = np.roots(cs[::-1])
        out = 1.0 + 0j
        for i in range(len(r)):
            for j in range(i + 1, len(r)):
                out *= (r[i] - r[j]) ** 2
        return out

    # -- serialization -------------------------------------------------

    def to_json_dict(self):
        def ser(p):
            return [[str(c.re), str(c.im)] for c in p.coeffs]

        return {"d": self.d, "P": [ser(p) for p in self.P], "R": ser(self.R), "label": self.label}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @staticmethod
    def from_json_dict(obj):
        def de(items):
            out = []
            for it in items:
                if isinstance(it, (list, tuple)):
                    out.append(GaussianRational.parse(it))
                else:
                    out.append(GaussianRational.parse(str(it)))
            return Poly(out)

        return OdeSpec(
            d=int(obj["d"]),
            P=tuple(de(p) for p in obj["P"]),
            R=de(obj["R"]),
            label=obj.get("label", ""),
        )

    @staticmethod
    def load(path):
        with open(path) as fh:
            return OdeSpec.from_json_dict(json.load(fh))


def characteristic_roots(ode: OdeSpec, z, tol=1e-12):
    """The d roots of the symbol sum P_i(z) x^i + x^d at numeric z, stable order.

    Degenerate (nearly repeated) roots are reported via the returned flag
    together with the local characteristic discriminant value.
    """
    roots = aberth_roots(ode.characteristic_coeffs(z), tol=tol)
    roots = sort_stable(roots)
    degenerate = False
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < tol ** 0.5:
                degenerate = True
    return roots, degenerate


# -- closed-form singulants (d = 2) -----------------------------------


def quadratic_singulant_forms(ode: OdeSpec):
    """For d=2: exact chi'(z) = (P1 +- h(z) sqrt(g(z)))/2 and, when the
    antiderivative closes, chi(z) = A(z) +- C(z) sqrt(g(z)) + const.

    Returns (A, C, g, h) with A, C Poly (C may be None when no polynomial
    antiderivative of (h/2) sqrt(g) of the form C sqrt(g) exists).
    """
    if ode.d != 2:
        raise ValueError("closed forms implemented for d = 2")
    P1, P0 = ode.P[1], ode.P[0]
    disc = P1 * P1 - P0.scale(GaussianRational(4))
    if disc.is_zero():
        raise ValueError("degenerate characteristic symbol (identically repeated roots)")
    h, g = square_split(disc)
    A = integrate_poly(P1).scale(GaussianRational(1, 0, 2))
    # want d/dz [C sqrt(g)] = (h/2) sqrt(g)  =>  C' g + C g'/2 = (h/2) g
    C = _solve_linear_poly_ode(g, g.derivative().scale(GaussianRational(1, 0, 2)),
                               (h * g).scale(GaussianRational(1, 0, 2)))
    return A, C, g, h


def _solve_linear_poly_ode(a: Poly, b: Poly, rhs: Poly):
    """Polynomial solution C of C'a + Cb = rhs, or None."""
    # degree bound: deg C <= deg rhs - max(deg a - 1, deg b)
    lead_deg = max(a.degree - 1 if a.degree >= 1 else -1, b.degree)
    n = int(rhs.degree - lead_deg) if rhs.degree >= lead_deg else 0
    for deg_c in (n, n + 1, n + 2):
        unknowns = deg_c + 1
        rows = []
        rhs_vec = []
        max_len = int(max(rhs.degree, deg_c + max(a.degree, b.degree, 0))) + 2
        cols = [[ZERO] * max_len for _ in range(unknowns)]
        for j in range(unknowns):
            cj = Poly([ZERO] * j + [ONE])
            expr = cj.derivative() * a + cj * b
            for t in range(max_len):
                cols[j][t] = expr[t]
        # solve least-structured exact system by rref on the stacked equations
        from .exact.linalg import nullspace, rref

        rows = []
        for t in range(max_len):
            row = {j: cols[j][t] for j in range(unknowns) if not cols[j][t].is_zero()}
            row[unknowns] = -rhs[t]
            if row:
                rows.append(row)
        pivots, reduced = rref(rows, unknowns + 1)
        # consistent iff no pivot in the rhs column
        if unknowns in pivots:
            continue
        sol = [ZERO] * unknowns
        ok = True
        for pcol, row in zip(pivots, reduced):
            val = row.get(unknowns, ZERO)
            free = [c for c in row if c != pcol and c != unknowns]
            if free:
                # free variables: set them to zero, keep particular solution
                pass
            sol[pcol] = -val
        cand = Poly(sol)
        if cand.derivative() * a + cand * b == rhs:
            return cand
    return None


class Singulant:
    """chi_i(z): exponential weight of a transseries sector.

    chi'(z) is an exact root branch of the characteristic symbol; chi(z)
    itself needs an additive constant that stays None until link selection
    pins it.  Closed form (d=2): chi = A(z) + sign*C(z)*sqrt(g(z)) + const.
    """

    def __init__(self, ode, index, *, closed=None, base_point=None, base_value=None,
                 root_selector=None):
        self.ode = ode
        self.index = index
        self.closed = closed          # (A, C, g, sign) or None
        self.base_point = base_point  # complex z0 anchoring the numeric branch
        self.base_value = base_value  # chi(z0); None while the constant is unresolved
        self.root_selector = root_selector  # chi'(z0) value identifying the branch
        self.constant = None          # exact additive constant, once resolved

    # -- structure ------------------------------------------------------

    @property
    def is_origin(self):
        return self.index == 0

    def with_constant(self, z_star, value=ZERO):
        """Return a copy whose additive constant makes chi(z_star) == value (exact)."""
        if self.closed is None:
            raise ValueError("constants on numeric singulants are fixed via base_value")
        A, C, g, sign = self.closed
        if C is not None and not C(z_star).is_zero():
            gs = sqrt_exact(g(z_star)) if isinstance(z_star, GaussianRational) else None
            if gs is None:
                raise ValueError("sqrt part does not evaluate exactly at the anchor")
            cur = A(z_star) + GaussianRational(sign) * C(z_star) * gs
        else:
            cur = A(z_star)
        const = GaussianRational(value) - cur
        out = Singulant(self.ode, self.index, closed=self.closed,
                        base_point=z_star, base_value=value)
        out.constant = const
        return out

    # -- evaluation -------------------------------------------------------

    def chi_prime(self, z, branch_hint=None):
        """chi'(z); closed form when available, else matched characteristic root."""
        if self.closed is not None:
            A, C, g, sign = self.closed
            P1 = self.ode.P[1]
            h = self._h
            gz = g.eval_numeric(z)
            sq = np.sqrt(complex(gz))
            if branch_hint is not None and abs(-sq - branch_hint) < abs(sq - branch_hint):
                sq = -sq
            return (P1.eval_numeric(z) + sign * h.eval_numeric(z) * sq) / 2.0
        roots, _ = characteristic_roots(self.ode, z)
        if self.root_selector is None:
            raise ValueError("numeric singulant needs a root_selector")
        k = int(np.argmin(np.abs(roots - self.root_selector)))
        return roots[k]

    def chi_exact(self, z):
        """Exact chi(z) at GaussianRational z; needs resolved constant and exact sqrt."""
        if self.closed is None:
            raise ValueError("no closed form")
        if getattr(self, "constant", None) is None:
            raise ValueError("singulant constant unresolved")
        A, C, g, sign = self.closed
        val = A(z) + self.constant
        if C is not None and not (C(z).is_zero()):
            gs = sqrt_exact(g(z))
            if gs is None:
                raise ValueError("sqrt part not exact here")
            val = val + GaussianRational(sign) * C(z) * gs
        return val

    def chi_rational(self):
        """chi as an exact RatFunc when the sqrt part is exactly rational."""
        if self.closed is None:
            raise ValueError("no closed form")
        A, C, g, sign = self.closed
        const = getattr(self, "constant", None)
        if const is None:
            raise ValueError("singulant constant unresolved")
        poly = A
        if C is not None and not C.is_zero():
            if g.degree >= 1:
                raise ValueError("sqrt part present; chi is not rational")
            gs = sqrt_exact(g[0])
            if gs is None:
                raise ValueError("constant sqrt part not exact in Q(i)")
            poly = A + C.scale(GaussianRational(sign) * gs)
        return RatFunc(poly + Poly.const(const))

    def chi_numeric(self, z, sqrt_branch=1.0):
        """chi(z) with the closed form, principal sqrt times sqrt_branch (+-1)."""
        if self.closed is None:
            raise ValueError("no closed form; use integrate_singulant")
        A, C, g, sign = self.closed
        const = getattr(self, "constant", None)
        if const is None:
            raise ValueError("singulant constant unresolved")
        val = A.eval_numeric(z) + complex(const)
        if C is not None and not C.is_zero():
            val = val + sign * C.eval_numeric(z) * sqrt_branch * np.sqrt(complex(g.eval_numeric(z)))
        return val

    @property
    def _h(self):
        if not hasattr(self, "_h_cache"):
            _, _, _, h = quadratic_singulant_forms(self.ode)
            self._h_cache = h
        return self._h_cache


def _fail():
    raise ValueError("sqrt part not exact")


def singulant_path_values(ode, path, n_min=64, tube_tol=1e-8):
    """Continue the full characteristic-root tuple along a polyline and
    integrate each root: returns (chi_prime_values, chi_increments).

    chi_increments[i] = integral of chi_i' along the path, with the root
    indexed by its position in the stable sort at the path start.  Adaptive
    trapezoid/Simpson refinement with a shared error estimate.
    """
    pts = [complex(p) for p in path]
    if len(pts) < 2:
        d = ode.d
        start, _ = characteristic_roots(ode, pts[0] if pts else 0j)
        return start, np.zeros(d, dtype=complex)

    def roots_along(samples):
        vals = []
        prev = None
        for z in samples:
            r, _ = characteristic_roots(ode, z)
            r = np.asarray(r)
            if prev is not None:
                perm = match_roots(prev, r)
                r = r[perm]
                if np.min(np.abs(np.subtract.outer(r, r) + np.eye(len(r)) * 1e9)) < tube_tol:
                    raise TurningPointOnPathError(
                        f"characteristic roots collide within tolerance near z={z:.6g}")
            prev = r
            vals.append(r)
        return np.array(vals)

    total_prev = None
    n = n_min
    for _ in range(8):
        ts = []
        for a, b in zip(pts[:-1], pts[1:]):
            seg = np.linspace(0, 1, n + 1)
            ts.extend([(a + (b - a) * t, (b - a)) for t in seg[:-1]] )
        ts.append((pts[-1], pts[-1] - pts[-2]))
        samples = [t[0] for t in ts]
        vals = roots_along(samples)
        # composite trapezoid per segment
        total = np.zeros(ode.d, dtype=complex)
        idx = 0
        for a, b in zip(pts[:-1], pts[1:]):
            seg_vals = vals[idx: idx + n + 1] if idx + n + 1 <= len(vals) else vals[idx:]
            if len(seg_vals) < n + 1:
                seg_vals = np.vstack([seg_vals, vals[-1][None, :]])
            h = (b - a) / n
            total += h * (seg_vals[0] / 2 + seg_vals[1:-1].sum(axis=0) + seg_vals[-1] / 2)
            idx += n
        if total_prev is not None:
            err = np.max(np.abs(total - total_prev))
            scale = 1 + np.max(np.abs(total))
            if err <= 1e-11 * scale:
                return vals[-1], total
        total_prev = total
        n *= 2
    return vals[-1], total_prev


def integrate_singulant(sing: Singulant, path, tol=1e-10):
    """chi at the end of a polyline starting at the singulant's base point.

    Closed-form singulants evaluate directly (with sqrt branch continued
    along the path); numeric ones integrate chi' by adaptive quadrature.
    """
    pts = [complex(p) for p in path]
    if sing.base_value is None and getattr(sing, "constant", None) is None:
        raise ValueError("singulant constant unresolved; fix it via link selection first")
    if sing.closed is not None:
        A, C, g, sign = sing.closed
        if C is None or C.is_zero() or g.degree <= 0:
            return sing.chi_numeric(pts[-1])
        # continue sqrt(g) branch along the path
        branch = 1.0
        prev = np.sqrt(complex(g.eval_numeric(pts[0])))
        n = 200
        for a, b in zip(pts[:-1], pts[1:]):
            for t in np.linspace(0, 1, n)[1:]:
                cur = np.sqrt(complex(g.eval_numeric(a + (b - a) * t)))
                if abs(cur - prev) > abs(cur + prev):
                    branch = -branch
                    prev = -cur
                else:
                    prev = cur
        return sing.chi_numeric(pts[-1], sqrt_branch=branch)
    # numeric: integrate the matched characteristic root
    if abs(pts[0] - complex(sing.base_point)) > 1e-12:
        pts = [complex(sing.base_point)] + pts
    _, increments = singulant_path_values(sing.ode, pts)
    roots0, _ = characteristic_roots(sing.ode, pts[0])
    k = int(np.argmin(np.abs(np.asarray(roots0) - sing.root_selector)))
    return complex(sing.base_value) + increments[k]
