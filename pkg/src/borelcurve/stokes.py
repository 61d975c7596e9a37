"""Stokes geometry: turning points, naive/higher line tracing, visibility
truncation, and graph assembly.

Line loci (Laplace direction theta, default 0):

    naive  l_ij : Im[(chi_j - chi_i) e^{-i theta}] = 0, Re[...] > 0
    higher h_ijk: Im log[(chi_k - chi_i)/(chi_j - chi_i)] = 0,
                  |chi_j - chi_i| < |chi_k - chi_i|

Both are traced by predictor-corrector continuation with singulant values
carried continuously along the trace (the sqrt branch of the d=2 closed
forms is transported, never re-picked).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exact import CurvePoly, GaussianRational, Poly
from .geometry import (SingularityEntry, SingularityGraph, SingularitySet,
                       borel_singularities, singularity_graph, visibility,
                       _disc_cached)
from .ode import OdeSpec
from .roots import roots_with_multiplicity, match_roots


class SingulantField:
    """Continuously-evaluated family chi_i(z) for all graph nodes (d=2 forms)."""

    def __init__(self, singulants):
        self.singulants = dict(singulants)
        s = next(s for i, s in self.singulants.items() if i != 0)
        self.A, self.C, self.g, _ = s.closed
        self.has_sqrt = self.C is not None and not self.C.is_zero() and self.g.degree >= 1
        self.signs = {}
        self.consts = {}
        for i, sg in self.singulants.items():
            if i == 0:
                continue
            A, C, g, sgn = sg.closed
            self.signs[i] = sgn
            self.consts[i] = complex(sg.constant) if sg.constant is not None else 0.0

    def indices(self):
        return sorted(self.singulants)

    def sqrtg(self, z, ref=None):
        val = np.sqrt(complex(self.g.eval_numeric(z))) if self.g.degree >= 0 else 0j
        if ref is not None and abs(-val - ref) < abs(val - ref):
            val = -val
        return val

    def eval(self, z, ref=None):
        """dict index -> chi_i(z); ref is the previous sqrt(g) value."""
        z = complex(z)
        sq = self.sqrtg(z, ref)
        out = {0: 0j} if 0 in self.singulants else {}
        Az = self.A.eval_numeric(z)
        Cz = self.C.eval_numeric(z) if self.C is not None else 0j
        for i in self.signs:
            out[i] = Az + self.signs[i] * Cz * sq + self.consts[i]
        return out, sq

    def eval_prime(self, z, sq=None):
        z = complex(z)
        if sq is None:
            sq = self.sqrtg(z)
        ode = next(iter(self.singulants.values())).ode
        P1 = ode.P[1].eval_numeric(z)
        # chi'_i = (P1 + s_i h sqrt(g))/2 with h from the square split
        h = _field_h(self)
        hz = h.eval_numeric(z)
        out = {0: 0j} if 0 in self.singulants else {}
        for i in self.signs:
            out[i] = (P1 + self.signs[i] * hz * sq) / 2.0
        return out


def _field_h(field: SingulantField):
    h = getattr(field, "_h", None)
    if h is None:
        from .ode import quadratic_singulant_forms
        ode = next(iter(field.singulants.values())).ode
        _, _, _, h = quadratic_singulant_forms(ode)
        field._h = h
    return h


class SnapshotFactory:
    """Cheap SingularitySet snapshots: locations from the closed-form
    singulant field, kind/alpha/nu classified once at a generic probe."""

    def __init__(self, curve, field, probe=None):
        self.curve = curve
        self.field = field
        if probe is None:
            probe = 2.0 + 0.7j
        full = borel_singularities(curve, probe)
        vals, _ = field.eval(probe)
        self.meta = {}
        for i, v in vals.items():
            if i == 0:
                continue
            cands = [e for e in full.entries if e.kind != "origin"]
            if not cands:
                continue
            e = min(cands, key=lambda e: abs(e.location - v))
            self.meta[i] = e

    def at(self, z):
        vals, _ = self.field.eval(complex(z))
        entries = []
        if 0 in vals:
            from fractions import Fraction as _Fr
            entries.append(SingularityEntry(index=0, kind="origin", location=0j,
                                            alpha=_Fr(0)))
        for i, m in self.meta.items():
            entries.append(SingularityEntry(index=i, kind=m.kind, location=vals[i],
                                            alpha=m.alpha, nu=m.nu, cycle=m.cycle,
                                            residue=m.residue))
        return SingularitySet(z=complex(z), entries=entries)


@dataclass
class StokesLine:
    kind: str                   # naive | true | higher
    indices: tuple
    points: np.ndarray
    active: np.ndarray          # dominance (naive/higher) or visibility (true)
    origin_point: complex | None = None

    def as_dict(self):
        return {
            "kind": self.kind,
            "indices": list(self.indices),
            "pts": [[p.real, p.imag] for p in self.points],
            "active": [bool(a) for a in self.active],
        }


@dataclass
class TurningPoint:
    z: complex
    pair: tuple
    order: object
    kind: str   # genuine | virtual

    def as_dict(self):
        return {"z": [self.z.real, self.z.imag], "pair": list(self.pair),
                "order": None if self.order is None else str(self.order), "kind": self.kind}


@dataclass
class StokesGraphData:
    turning_points: list
    lines: list
    regions: dict
    window: tuple
    theta: float = 0.0
    comparison_loci: list = field(default_factory=list)

    def to_json_dict(self):
        return {
            "window": list(self.window),
            "theta": self.theta,
            "turning_points": [t.as_dict() for t in self.turning_points],
            "lines": [l.as_dict() for l in self.lines],
            "regions": {k: v for k, v in self.regions.items()},
            "comparison_loci": self.comparison_loci,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    def lines_of(self, kind, indices=None):
        out = [l for l in self.lines if l.kind == kind]
        if indices is not None:
            out = [l for l in out if tuple(l.indices) == tuple(indices)]
        return out


# -- turning points ---------------------------------------------------------


def turning_points(graph: SingularityGraph, window=None):
    """Genuine and virtual turning points from the singularity graph."""
    out = []
    seen = set()
    for c in graph.children:
        z = complex(c.z)
        key = (round(z.real, 10), round(z.imag, 10), c.kind)
        if key in seen:
            continue
        seen.add(key)
        pair = tuple(sorted((c.parent, c.partner))) if c.partner is not None else (c.parent,)
        if window is None or _in_window(z, window):
            out.append(TurningPoint(z=z, pair=pair, order=c.beta,
                                    kind="genuine" if c.kind == "turning" else "virtual"))
    return out


def turning_points_curve(curve: CurvePoly, window=None, tol=1e-12, max_bareiss_degree=14):
    """Curve-only turning points: z where the singular w-locus collides.

    Handles the pole / branch-at-infinity family (roots of the leading
    coefficient) and the finite branch family (roots of the w-discriminant)
    separately: each family's collision locus is the w-resultant of its
    squarefree defining polynomial with its w-derivative, an exact Bareiss
    computation when the degrees stay moderate.
    """
    out = []
    families = []
    lead = _wpoly_squarefree_numerator(curve.a[-1])
    if lead.degree and lead.degree >= 2:
        families.append(("pole-locus", lead))
    disc = _wpoly_squarefree_numerator(_disc_cached(curve))
    if disc.degree and disc.degree >= 2:
        families.append(("branch-locus", disc))
    for kind, S in families:
        S = _wpoly_squarefree(S)
        if S.degree < 2:
            continue
        if S.degree + (S.degree - 1) > 2 * max_bareiss_degree:
            continue
        det = _wpoly_resultant_w(S, S.derivative())
        if det is None or det.is_zero():
            continue
        poly = det.num
        cs = [complex(c) for c in poly.coeffs]
        try:
            # resultants of squarefree loci still carry high-multiplicity
            # roots; cluster generously, the derivative polish restores
            # the centers to full accuracy
            for root, mult in roots_with_multiplicity(cs, tol=tol, cluster_tol=2e-3):
                if window is None or _in_window(root, window):
                    out.append(TurningPoint(z=root, pair=(kind,), order=mult, kind="genuine"))
        except Exception:
            continue
    return out


def _wpoly_gcd(a, b):
    while not b.is_zero():
        a, b = b, a.divmod(b)[1]
        if not b.is_zero():
            b = b.scale(b.coeffs[-1].inverse())
    return a


def _wpoly_squarefree(S):
    from .exact.wpoly import WPoly
    d = S.derivative()
    if d.is_zero():
        return S
    g = _wpoly_gcd(S, d)
    if g.degree and g.degree >= 1:
        return S.exact_div(g)
    return S


def _wpoly_resultant_w(S, dS):
    """Res_w of two WPoly (polynomials in w over RatFunc(z)), Bareiss."""
    from .exact.wpoly import WPoly, bareiss_determinant
    from .exact.ratfunc import RF_ONE

    n, m = S.degree, dS.degree
    if n < 1 or m < 0:
        return None
    size = int(n + m)
    zero = WPoly(())
    rows = []
    s_hi = list(reversed(S.coeffs))
    d_hi = list(reversed(dS.coeffs))
    for r in range(int(m)):
        row = [zero] * size
        for j, c in enumerate(s_hi):
            row[r + j] = WPoly((c,))
        rows.append(row)
    for r in range(int(n)):
        row = [zero] * size
        for j, c in enumerate(d_hi):
            row[r + j] = WPoly((c,))
        rows.append(row)
    det = bareiss_determinant(rows, WPoly((RF_ONE,)))
    if det.is_zero():
        return None
    return det.coeffs[0]


def _wpoly_squarefree_numerator(wp):
    """WPoly with each RatFunc coefficient replaced by numerator (common den
    cleared); callers only use the w-root structure."""
    from .exact.wpoly import WPoly

    den = Poly((GaussianRational(1),))
    for c in wp.coeffs:
        g = den.gcd(c.den)
        den = den * c.den.exact_div(g)
    from .exact.ratfunc import RatFunc
    return WPoly([RatFunc(c.num * den.exact_div(c.den)) for c in wp.coeffs])


def _in_window(z, window):
    a, b, c, d = window
    return a - 1e-12 <= z.real <= b + 1e-12 and c - 1e-12 <= z.imag <= d + 1e-12


# -- tracing ---------------------------------------------------------------


class TraceState:
    def __init__(self, field, kind, indices, theta=0.0):
        self.field = field
        self.kind = kind
        self.indices = indices
        self.theta = theta
        self.rot = np.exp(-1j * theta)

    def F_and_grad(self, z, sq_ref=None, log_ref=None):
        vals, sq = self.field.eval(z, ref=sq_ref)
        prim = self.field.eval_prime(z, sq=sq)
        if self.kind == "naive":
            i, j = self.indices
            G = (vals[j] - vals[i]) * self.rot
            Gp = (prim[j] - prim[i]) * self.rot
            F = G.imag
            grad = 1j * np.conj(Gp)
            dom = G.real > 0
            aux = abs(G)
        else:
            i, j, k = self.indices
            n = vals[k] - vals[i]
            dnm = vals[j] - vals[i]
            if n == 0 or dnm == 0:
                raise ZeroDivisionError
            L = np.log(n / dnm)
            if log_ref is not None:
                two_pi = 2 * np.pi
                while L.imag - log_ref > np.pi:
                    L -= 1j * two_pi
                while L.imag - log_ref < -np.pi:
                    L += 1j * two_pi
            Lp = (prim[k] - prim[i]) / n - (prim[j] - prim[i]) / dnm
            F = L.imag
            grad = 1j * np.conj(Lp)
            dom = abs(dnm) < abs(n)
            aux = min(abs(n), abs(dnm), abs(vals[k] - vals[j]))
        return F, grad, dom, sq, aux


def trace_line(field: SingulantField, kind, indices, seed, window, theta=0.0,
               step=0.02, max_steps=6000, tol=1e-9, seed_sq=None):
    """Predictor-corrector trace of one locus branch through the seed.

    Returns a StokesLine (possibly short if the corrector cannot hold the
    locus).  The seed must lie on the locus to ~sqrt(step) accuracy.
    """
    st = TraceState(field, kind, indices, theta)
    pts_all = []
    dom_all = []

    def run(direction):
        z = complex(seed)
        sq = seed_sq
        log_ref = None
        pts = []
        doms = []
        h = step
        prev_t = None
        aux_floor = None
        for _ in range(max_steps):
            try:
                F, grad, dom, sq, aux = st.F_and_grad(z, sq_ref=sq, log_ref=log_ref)
            except (ZeroDivisionError, FloatingPointError):
                break
            gn = abs(grad)
            if gn < 1e-14:
                break
            # corrector: Newton transverse to the locus
            ok = True
            for _ in range(30):
                if abs(F) <= tol:
                    break
                z = z - F * grad / gn ** 2
                try:
                    F, grad, dom, sq, aux = st.F_and_grad(z, sq_ref=sq, log_ref=log_ref)
                except (ZeroDivisionError, FloatingPointError):
                    ok = False
                    break
                gn = abs(grad)
                if gn < 1e-14:
                    ok = False
                    break
            if not ok or abs(F) > 100 * tol:
                h /= 2
                if h < 1e-8:
                    break
                continue
            if st.kind == "higher":
                log_ref = F
            if aux_floor is None:
                aux_floor = min(1e-4, 0.5 * aux)
            pts.append(z)
            doms.append(bool(dom))
            if not _in_window(z, window):
                break
            if aux < aux_floor:
                break  # reached a coincidence of the defining singulants
            # tangent: gradient rotated a quarter turn
            t = direction * 1j * grad / gn
            if prev_t is not None and (t * np.conj(prev_t)).real < 0:
                t = -t
            prev_t = t
            # loop closure
            if len(pts) > 20 and abs(z + h * t - pts[0]) < 0.6 * h:
                pts.append(pts[0])
                doms.append(doms[0])
                break
            z = z + h * t
            h = min(step, h * 2)
        return pts, doms

    fwd_pts, fwd_dom = run(+1.0)
    bwd_pts, bwd_dom = run(-1.0)
    pts = list(reversed(bwd_pts[1:])) + fwd_pts
    doms = list(reversed(bwd_dom[1:])) + fwd_dom
    if not pts:
        pts, doms = [complex(seed)], [False]
    return StokesLine(kind=("naive" if kind == "naive" else "higher"),
                      indices=tuple(indices), points=np.array(pts),
                      active=np.array(doms, dtype=bool), origin_point=complex(seed))


def seed_points(field: SingulantField, kind, indices, center, r0=4e-3, theta=0.0, n_scan=720):
    """Locus crossings on a small circle around a turning/crossing point."""
    st = TraceState(field, kind, indices, theta)
    zs = center + r0 * np.exp(1j * np.linspace(0, 2 * np.pi, n_scan + 1))
    vals = []
    sq = None
    log_ref = None
    for z in zs:
        try:
            F, _, dom, sq, _ = st.F_and_grad(z, sq_ref=sq, log_ref=log_ref)
            if kind == "higher":
                log_ref = F
        except (ZeroDivisionError, FloatingPointError):
            vals.append((np.nan, False))
            continue
        vals.append((F, dom))
    out = []
    for t in range(n_scan):
        f1, d1 = vals[t]
        f2, d2 = vals[t + 1]
        if np.isnan(f1) or np.isnan(f2):
            continue
        if f1 == 0 or f1 * f2 < 0:
            frac = abs(f1) / (abs(f1) + abs(f2)) if (abs(f1) + abs(f2)) > 0 else 0.5
            zc = zs[t] + (zs[t + 1] - zs[t]) * frac
            out.append((zc, d1 or d2))
    return out


# -- truncation -------------------------------------------------------------


def truncate(line: StokesLine, curve: CurvePoly, sample_every=6, bisect_tol=1e-8,
             h_check=True, field=None, snapshots=None):
    """True Stokes line: visibility-masked naive line.

    Mask transitions are refined by bisection and checked to lie on the
    higher-order locus (collinearity residual small); a transition away from
    any h-locus raises a consistency failure.
    """
    if line.kind != "naive":
        raise ValueError("truncate applies to naive lines")
    i, j = line.indices
    pts = line.points
    idxs = list(range(0, len(pts), sample_every))
    if idxs and idxs[-1] != len(pts) - 1:
        idxs.append(len(pts) - 1)
    # probe slightly off the line: the defining conditions are degenerate on
    # it (collinear configurations), and visibility is a sided limit there
    if len(pts) > 1:
        tang = np.gradient(pts)
        tang = tang / np.maximum(np.abs(tang), 1e-300)
    else:
        tang = np.ones(len(pts), dtype=complex)
    lateral = 2e-3 * 1j * tang

    def vis_at(z, t_idx=None):
        off = lateral[t_idx] if t_idx is not None else 0
        snap = snapshots.at(z + off) if snapshots is not None else None
        return visibility(curve, z + off, i, j, snap=snap)

    vis = {}
    for t in idxs:
        if not line.active[t]:
            vis[t] = 0
            continue
        try:
            vis[t] = vis_at(pts[t], t)
        except Exception:
            vis[t] = 0
    mask = np.zeros(len(pts), dtype=bool)
    transitions = []
    for a, b in zip(idxs[:-1], idxs[1:]):
        mask[a:b + 1] = bool(vis[a]) if vis[a] == vis[b] else mask[a:b + 1]
        if vis[a] != vis[b]:
            za, zb = pts[a], pts[b]
            va = vis[a]
            for _ in range(60):
                zm = (za + zb) / 2
                if abs(zb - za) < bisect_tol:
                    break
                try:
                    vm = vis_at(zm, a)
                except Exception:
                    vm = 0
                if vm == va:
                    za = zm
                else:
                    zb = zm
            zc = (za + zb) / 2
            transitions.append(zc)
            # mark mask on each side of the transition
            for t in range(a, b + 1):
                frac_pt = pts[t]
                side_a = abs(frac_pt - pts[a]) < abs(frac_pt - zc)
                mask[t] = bool(va) if side_a else bool(vis[b])
    if not transitions:
        v0 = vis.get(idxs[0], 0) if idxs else 0
        mask[:] = bool(v0)
    mask &= line.active
    report = {"transitions": [(z.real, z.imag) for z in transitions], "on_h_locus": []}
    if h_check and field is not None and transitions:
        for zc in transitions:
            res = _collinearity_residual(field, zc, i, j)
            report["on_h_locus"].append(res)
            if res > 1e-3:
                report["consistency_failure"] = True
    return StokesLine(kind="true", indices=line.indices, points=pts,
                      active=mask, origin_point=line.origin_point), report


def _collinearity_residual(field, z, i, j):
    """min over obstructors k of |Im log((chi_j-chi_i)/(chi_k-chi_i))|."""
    vals, _ = field.eval(z)
    best = np.inf
    for k in vals:
        if k in (i, j):
            continue
        n = vals[j] - vals[i]
        d = vals[k] - vals[i]
        if d == 0 or n == 0:
            continue
        best = min(best, abs(np.log(n / d).imag))
    return best


# -- assembly ---------------------------------------------------------------


def stokes_graph(ode: OdeSpec, curve: CurvePoly = None, window=(-1.5, 3.0, -2.0, 2.0),
                 resolution=9, theta=0.0, graph: SingularityGraph = None,
                 do_truncate=True, step=0.02):
    """Full Stokes graph: turning points, naive lines per ordered pair,
    higher-order lines per admissible triple, visibility truncation, and a
    visibility-classified region grid."""
    if graph is None:
        graph = singularity_graph(ode, curve)
    field = SingulantField(graph.singulants)
    tps = turning_points(graph)
    lines = []
    idxs = field.indices()
    pair_seeds = {}
    for tp in tps:
        if len(tp.pair) == 2:
            pair_seeds.setdefault(tuple(sorted(tp.pair)), []).append(tp.z)
    # naive lines for every ordered pair, seeded at that pair's coincidences
    for i in idxs:
        for j in idxs:
            if i == j:
                continue
            seeds = []
            for (a, b), zs in pair_seeds.items():
                if {a, b} == {i, j}:
                    seeds.extend(zs)
            traced = []
            for z0 in seeds:
                for zc, dom in seed_points(field, "naive", (i, j), z0, theta=theta):
                    if not dom:
                        continue
                    if any(np.min(np.abs(t.points - zc)) < 4 * step for t in traced):
                        continue
                    ln = trace_line(field, "naive", (i, j), zc, window, theta=theta, step=step)
                    if len(ln.points) > 3:
                        traced.append(ln)
            lines.extend(traced)
    # higher-order lines: triples (i, j, k), obstructor j a branch point
    branch_nodes = _branch_type_nodes(graph, curve)
    for i in idxs:
        for j in idxs:
            for k in idxs:
                if len({i, j, k}) < 3 or j not in branch_nodes:
                    continue
                if j == 0 or k == 0:
                    continue  # the origin is a regular marked point, never a saddle
                seeds = []
                for (a, b), zs in pair_seeds.items():
                    if {a, b} == {j, k}:
                        seeds.extend(zs)
                traced = []
                for z0 in seeds:
                    for zc, dom in seed_points(field, "higher", (i, j, k), z0, theta=theta):
                        if not dom:
                            continue
                        if any(np.min(np.abs(t.points - zc)) < 4 * step for t in traced):
                            continue
                        ln = trace_line(field, "higher", (i, j, k), zc, window, theta=theta, step=step)
                        if len(ln.points) > 3:
                            traced.append(ln)
                lines.extend(traced)
    # truncation of naive lines (needs the curve for visibility)
    reports = []
    snapshots = SnapshotFactory(curve, field, probe=_generic_probe(graph)) if curve is not None else None
    if do_truncate and curve is not None:
        for ln in [l for l in lines if l.kind == "naive"]:
            try:
                tl, rep = truncate(ln, curve, field=field, snapshots=snapshots)
                lines.append(tl)
                reports.append({"indices": list(ln.indices), **rep})
            except Exception as exc:
                reports.append({"indices": list(ln.indices), "error": str(exc)})
    # region classifier: visibility bits on a coarse grid
    regions = {"grid": [], "bits": []}
    if curve is not None and resolution > 0:
        a, b, c, d = window
        xs = np.linspace(a, b, resolution)
        ys = np.linspace(c, d, resolution)
        for x in xs:
            for y in ys:
                z = complex(x, y)
                bits = {}
                for j in idxs:
                    if j == 0:
                        continue
                    try:
                        bits[j] = visibility(curve, z, 0, j,
                                             snap=snapshots.at(z) if snapshots else None)
                    except Exception:
                        bits[j] = None
                regions["grid"].append([x, y])
                regions["bits"].append(bits)
    data = StokesGraphData(turning_points=tps, lines=lines, regions=regions,
                           window=window, theta=theta)
    data.reports = reports
    data.graph = graph
    data.field = field
    return data


def _branch_type_nodes(graph: SingularityGraph, curve):
    """Indices whose germ is ramified (square-root type): these can obstruct."""
    out = set()
    for i, s in graph.singulants.items():
        if i == 0:
            continue
        # d=2: a sector is branch-type iff its germ alpha is half-integer;
        # equivalently the chain head exponent gamma is half-integer or the
        # curve says so.  Heuristic from the graph: beta-integer links with
        # Delta half-integer are poles... default: classify via the curve.
        out.add(i)
    if curve is not None:
        try:
            snap = borel_singularities(curve, _generic_probe(graph))
            out = {e.index for e in snap.entries if e.kind == "branch"}
        except Exception:
            pass
    return out


def _generic_probe(graph: SingularityGraph):
    """A z value away from all child points, for snapshot classification."""
    zs = [complex(c.z) for c in graph.children]
    for cand in (2.0 + 0.7j, 1.3 + 1.1j, 2.6 - 0.9j, 0.37 + 1.9j):
        if all(abs(cand - z) > 0.2 for z in zs):
            return cand
    return 2.0 + 0.7j
