"""Geometry of the parametric curve: Borel singularities, local germs,
numerical analytic continuation, sheet visibility, and the singularity
graph with its node-selection rule.

Sheet bookkeeping is always relative to the distinguished origin branch
(the germ the curve was grown from); that choice is what makes
"visibility" of a singularity well defined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import CurvePoly, GaussianRational, Poly, RatFunc, WPoly
from .exact.gaussrat import ONE, ZERO, sqrt_exact
from .exact.polynomial import square_split
from .exact.ratfunc import RF_ONE, RF_ZERO
from .borelpde import Germ, SectorSeries, sector_recursion, to_borel_pde, SectorRecursionError
from .ode import OdeSpec, Singulant, quadratic_singulant_forms
from .roots import aberth_roots, cluster_roots, match_roots, roots_with_multiplicity, sort_stable

NU_BRANCH = 2.0
NU_POLE = 2j * np.pi


class ContinuationError(RuntimeError):
    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class RamificationWarning(UserWarning):
    pass


# -- fiber continuation -------------------------------------------------


def eval_branches(curve: CurvePoly, w, z, tol=1e-12, order_hint=None):
    """All phi-roots of the fiber polynomial at (w, z), stable order.

    With order_hint (a previous fiber), roots are permuted to continue it.
    Raises ContinuationError near the ramification locus (degree drop).
    """
    cs = curve.phi_poly_at(w, z)
    scale = max(abs(c) for c in cs)
    if scale == 0:
        raise ContinuationError("zero fiber polynomial", where=(w, z))
    if abs(cs[-1]) < tol * scale:
        raise ContinuationError("leading fiber coefficient vanishes (pole of phi here)",
                                where=(w, z))
    roots = aberth_roots(cs, tol=tol)
    roots = sort_stable(roots)
    if order_hint is not None:
        perm = match_roots(order_hint, roots)
        roots = np.asarray(roots)[perm]
    return np.asarray(roots)


@dataclass
class BranchTrack:
    """Result of tracking one phi-branch along a w-path at fixed z."""

    end_value: complex
    samples: list          # (w, phi) checkpoints
    permutation: list      # fiber permutation start -> end (by stable order)


def continue_branch(curve: CurvePoly, z, path, start, tube=None, rtol=1e-11,
                    max_steps=200000, record=False, exclude=()):
    """Predictor-corrector continuation of a single branch along a w-polyline.

    start must satisfy P(w0, start) ~ 0.  The tube radius guards against
    stepping across branch points (excluding any in `exclude`, e.g. the
    path's own endpoints); pass tube=0 to disable.
    """
    pts = [complex(p) for p in path]
    branch_pts = [b for b in _branch_points_at(curve, z)
                  if all(abs(b - complex(e)) > 1e-9 for e in exclude)]
    if tube is None:
        tube = 1e-6
    phi = complex(start)
    w = pts[0]
    _, pphi, pw, _ = curve.phi_derivs_at(w, z, phi)
    pval = curve.eval(w, z, phi)
    scale = max(1.0, abs(phi))
    if abs(pval) > 1e-6 * max(1.0, abs(pphi)) * scale:
        raise ContinuationError("start value is not on the curve", where=(w, phi))
    samples = [(w, phi)] if record else []
    try:
        fibre0 = eval_branches(curve, pts[0], z)
    except ContinuationError:
        fibre0 = None
    steps = 0
    for a, b in zip(pts[:-1], pts[1:]):
        seg = b - a
        if tube:
            for bp in branch_pts:
                # distance from the segment to each branch point
                t = np.clip(((bp - a) / seg).real if seg != 0 else 0.0, 0.0, 1.0)
                if abs(a + t * seg - bp) < tube:
                    raise ContinuationError(
                        f"path enters tube of branch point {bp:.6g}", where=bp)
        t = 0.0
        h = 1.0 / 16
        while t < 1.0 - 1e-15:
            steps += 1
            if steps > max_steps:
                raise ContinuationError("step budget exhausted")
            h = min(h, 1.0 - t)
            w0 = a + t * seg
            w1 = a + (t + h) * seg
            _, pphi, pw, _ = curve.phi_derivs_at(w0, z, phi)
            if pphi == 0:
                h /= 2
                if h < 1e-12:
                    raise ContinuationError("ramified point on path", where=w0)
                continue
            pred = phi - (pw / pphi) * (w1 - w0)
            ok, new_phi = _newton_phi(curve, w1, z, pred, rtol)
            if ok:
                # the correction must stay well inside the predicted move and
                # inside the local root separation, else we may have hopped
                # to another sheet
                corr = abs(new_phi - pred)
                predmove = abs(pred - phi)
                sep = _min_other_root_distance(curve, w1, z, new_phi)
                if corr <= max(0.3 * predmove, 1e-9 * (1 + abs(new_phi))) or corr <= 0.05 * sep:
                    phi = new_phi
                    t += h
                    if record:
                        samples.append((w1, phi))
                    h = min(2 * h, 0.25)
                    continue
            h /= 2
            if h < 1e-13:
                raise ContinuationError("corrector failed to converge", where=w1)
    # permutation record: where each start-fibre root lands under this path
    perm = None
    if fibre0 is not None:
        try:
            fibre1 = eval_branches(curve, pts[-1], z)
            perm = [int(np.argmin(np.abs(fibre1 - v)))
                    for v in _transport_fibre(curve, z, pts, fibre0)]
        except ContinuationError:
            perm = None
    return BranchTrack(end_value=phi, samples=samples, permutation=perm)


def _newton_phi(curve, w, z, guess, rtol, iters=40):
    phi = guess
    for _ in range(iters):
        p, pphi, _, _ = curve.phi_derivs_at(w, z, phi)
        if pphi == 0:
            return False, phi
        step = p / pphi
        phi = phi - step
        if abs(step) <= rtol * (1 + abs(phi)):
            return True, phi
    return False, phi


def _min_other_root_distance(curve, w, z, phi):
    try:
        fibre = eval_branches(curve, w, z)
    except Exception:
        return np.inf
    d = np.abs(fibre - phi)
    d = d[d > 1e-13 * (1 + abs(phi))]
    return float(d.min()) if len(d) else np.inf


def _transport_fibre(curve, z, pts, fibre0):
    """Continue the whole fibre along the path by proximity matching."""
    cur = np.asarray(fibre0, dtype=complex)
    n_sub = 64
    for a, b in zip(pts[:-1], pts[1:]):
        for t in np.linspace(0, 1, n_sub + 1)[1:]:
            try:
                nxt = eval_branches(curve, a + (b - a) * t, z)
            except ContinuationError:
                continue
            perm = match_roots(cur, nxt)
            cur = np.asarray(nxt)[perm]
    return cur


def _branch_points_at(curve, z, tol=1e-11):
    cache = getattr(curve, "_bp_cache", None)
    if cache is None:
        cache = curve._bp_cache = {}
    key = (round(complex(z).real, 13), round(complex(z).imag, 13))
    if key in cache:
        return cache[key]
    disc = _disc_cached(curve)
    cs = disc.numeric_coeffs(z)
    if all(abs(c) < 1e-300 for c in cs):
        out = []
    else:
        try:
            out = [r for r, _ in roots_with_multiplicity(cs, tol=tol, cluster_tol=1e-8)]
        except Exception:
            out = []
    if len(cache) > 4096:
        cache.clear()
    cache[key] = out
    return out


def _disc_cached(curve: CurvePoly):
    disc = getattr(curve, "_disc_w", None)
    if disc is None:
        disc = curve.discriminant_w()
        curve._disc_w = disc
    return disc


# -- singularity snapshots -----------------------------------------------


@dataclass
class SingularityEntry:
    index: int
    kind: str              # origin | branch | pole
    location: complex
    alpha: Fraction | None = None
    nu: complex | None = None
    cycle: int = 1         # ramification cycle length
    residue: complex | None = None


@dataclass
class SingularitySet:
    z: complex
    entries: list

    def by_index(self, i):
        for e in self.entries:
            if e.index == i:
                return e
        raise KeyError(i)

    @property
    def locations(self):
        return {e.index: e.location for e in self.entries}


def borel_singularities(curve: CurvePoly, z, tol=1e-10) -> SingularitySet:
    """Snapshot of Gamma_w(z): branch points (discriminant zeros) and poles
    (leading-coefficient zeros with a blowing sheet), plus the marked origin.

    Raises ContinuationError with a coalescence message when two candidate
    singularities are closer than tol (z too near a turning point).
    """
    z = complex(z)
    disc = _disc_cached(curve)
    branch = []
    cs = disc.numeric_coeffs(z)
    if any(abs(c) > 1e-250 for c in cs):
        branch = [r for r, _ in roots_with_multiplicity(cs, tol=1e-12, cluster_tol=1e-8)]
    lead = curve.a[-1].numeric_coeffs(z)
    poles = []
    if len(lead) > 1:
        poles = [r for r, _ in roots_with_multiplicity(lead, tol=1e-12, cluster_tol=1e-8)]
    # classify each candidate by a local monodromy/growth probe
    entries = []
    idx = 1
    pts = []
    for w0 in branch:
        pts.append(("branch?", w0))
    for w0 in poles:
        if all(abs(w0 - b) > tol for b in branch):
            pts.append(("pole?", w0))
    # coalescence guard
    locs = [p[1] for p in pts]
    for i in range(len(locs)):
        for j in range(i + 1, len(locs)):
            if abs(locs[i] - locs[j]) < tol:
                raise ContinuationError(
                    f"singularities coalesce near w={locs[i]:.6g} (z near a turning point)",
                    where=locs[i])
    probed = []
    for kind_guess, w0 in pts:
        alpha, cycle, residue = _probe_singularity(curve, z, w0)
        if alpha is None:
            continue
        kind = "branch" if cycle > 1 else "pole"
        nu = NU_BRANCH if cycle > 1 else NU_POLE
        probed.append(SingularityEntry(index=-1, kind=kind, location=w0,
                                       alpha=alpha, nu=nu, cycle=cycle, residue=residue))
    # stable indexing: branch points first, then poles, each by (re, im)
    probed.sort(key=lambda e: (e.kind != "branch", round(e.location.real, 9),
                               round(e.location.imag, 9)))
    out = []
    if curve.origin_value is not None:
        out.append(SingularityEntry(index=0, kind="origin", location=0j, alpha=Fraction(0)))
    for e in probed:
        e.index = len(out) if out and out[0].kind == "origin" else len(out) + 1
        out.append(e)
    return SingularitySet(z=z, entries=out)


def _probe_singularity(curve: CurvePoly, z, w0, r=None):
    """(alpha, cycle, residue) of the strongest singular behavior at w0.

    Tracks the fibre around a small circle for the cycle structure and fits
    the growth exponent on two radii.  alpha is the negated leading Puiseux
    exponent of the singular sheet(s), capped at denominator 6.
    """
    others = [b for b in _branch_points_at(curve, z) if abs(b - w0) > 1e-9]
    lead = curve.a[-1].numeric_coeffs(z)
    if len(lead) > 1:
        others += [p for p, _ in roots_with_multiplicity(lead, tol=1e-12, cluster_tol=1e-8)
                   if abs(p - w0) > 1e-9]
    sep = min([abs(b - w0) for b in others], default=1.0)
    if r is None:
        r = min(0.05 * max(abs(w0), 1.0), 0.2 * sep)
    # monodromy: continue the fibre once around w0
    n_pts = 96
    thetas = np.linspace(0, 2 * np.pi, n_pts + 1)
    cur = eval_branches(curve, w0 + r, z)
    first = cur.copy()
    for th in thetas[1:]:
        nxt = eval_branches(curve, w0 + r * np.exp(1j * th), z)
        perm = match_roots(cur, nxt)
        cur = np.asarray(nxt)[perm]
    perm_total = [int(np.argmin(np.abs(first - v))) for v in cur]
    # cycle containing the fastest-growing sheet
    g1 = eval_branches(curve, w0 + r, z)
    g2 = eval_branches(curve, w0 + r / 4, z)
    perm12 = match_roots(g1, _transport_fibre(curve, z, [w0 + r, w0 + r / 4], g1))
    growth = np.array([abs(g2[perm12[i]]) / max(abs(g1[i]), 1e-300) for i in range(len(g1))])
    k_sing = int(np.argmax(growth))
    expo = np.log(growth[k_sing]) / np.log(4.0)
    # cycle length of the singular sheet
    cyc = 1
    j = perm_total[k_sing]
    seen = {k_sing}
    while j not in seen:
        seen.add(j)
        j = perm_total[j]
        cyc += 1
    alpha = Fraction(round(expo * cyc * 6 / cyc)) / 6 if cyc == 1 else None
    # snap exponent to a rational with denominator = cycle (or small multiples)
    best = None
    for den in (cyc, 2 * cyc, 1, 2, 3, 4, 6):
        cand = Fraction(round(expo * den), den)
        if abs(float(cand) - expo) < 0.15 / den + 0.02:
            best = cand
            break
    if best is None or (best <= 0 and cyc == 1):
        return None, cyc, None
    residue = None
    if cyc == 1 and best == 1:
        # residue of the blowing sheet: phi ~ res/(w - w0)
        v1 = g1[k_sing] * r
        v2 = g2[perm12[k_sing]] * (r / 4)
        if abs(v1 - v2) < 0.05 * (abs(v1) + abs(v2)):
            residue = (4 * v2 - v1) / 3  # Richardson in r
    return best, cyc, residue


# -- germ extraction ------------------------------------------------------


def origin_germ_from_curve(curve: CurvePoly, K: int) -> Germ:
    """Exact power-series solution phi = sum Phi_n w^n of P(w, phi) = 0
    seeded by the curve's marked origin value.

    Maintains the powers of the partial sum incrementally (appending Phi_n
    only touches orders >= n), so the cost stays quadratic in K.
    """
    if curve.origin_value is None:
        raise ValueError("curve has no marked origin branch")
    phi0 = curve.origin_value
    D = curve.degree
    dP = RF_ZERO
    for k in range(1, D + 1):
        if curve.a[k].coeffs:
            dP = dP + GaussianRational(k) * curve.a[k].coeffs[0] * phi0 ** (k - 1)
    if dP.is_zero():
        raise ValueError("marked origin sits on the ramification locus")
    inv_dP = dP.inverse()
    # POW[k][m] = w^m coefficient of (partial sum)^k
    POW = [[RF_ZERO] * (K + 1) for _ in range(D + 1)]
    POW[0][0] = RatFunc.const(1)
    cur = RatFunc.const(1)
    for k in range(1, D + 1):
        cur = cur * phi0
        POW[k][0] = cur
    coeffs = [phi0]
    from math import comb as _comb

    for n in range(1, K + 1):
        res = RF_ZERO
        for k in range(D + 1):
            wp = curve.a[k]
            for l in range(min(len(wp.coeffs) - 1, n) + 1):
                rf = wp[l]
                if rf.is_zero():
                    continue
                pk = POW[k][n - l]
                if not pk.is_zero():
                    res = res + rf * pk
        phin = -(res * inv_dP)
        coeffs.append(phin)
        # update powers with the new coefficient (descending k keeps the
        # lower-power rows at their pre-update values)
        if not phin.is_zero():
            phin_pows = {1: phin}
            for k in range(D, 0, -1):
                for j in range(1, k + 1):
                    if j * n > K:
                        break
                    pj = phin_pows.get(j)
                    if pj is None:
                        pj = phin_pows[j - 1] * phin
                        phin_pows[j] = pj
                    c = pj * GaussianRational(_comb(k, j))
                    base = POW[k - j]
                    row = POW[k]
                    for m in range(j * n, K + 1):
                        b = base[m - j * n]
                        if not b.is_zero():
                            row[m] = row[m] + c * b
    return Germ(index=0, alpha=0, nu=None, coeffs=coeffs, label="origin(curve)")


class GermExtractionError(RuntimeError):
    pass


def germ_at(curve: CurvePoly, z_probe, target_index=None, location=None, K=8,
            branch_from_origin=True, n_fft=512):
    """Singular germ at a Borel singularity.

    Exact mode (quadratic curves whose branch point is rational in z) returns
    RatFunc coefficients with a sqrt tag; otherwise numeric Puiseux
    coefficients at the probe z via FFT on a tracked circle.  The branch is
    chosen to match the analytic continuation of the origin germ when
    branch_from_origin holds and the curve carries a marked origin.
    """
    snap = borel_singularities(curve, z_probe)
    if location is None:
        entry = snap.by_index(target_index)
    else:
        entry = min((e for e in snap.entries if e.kind != "origin"),
                    key=lambda e: abs(e.location - location))
    if curve.degree == 2 and entry.kind == "branch":
        exact = _exact_quadratic_branch_germ(curve, z_probe, entry, K,
                                             branch_from_origin=branch_from_origin)
        if exact is not None:
            return exact
    if curve.degree == 2 and entry.kind == "pole":
        exact = _exact_quadratic_pole_germ(curve, entry, z_probe)
        if exact is not None:
            return exact
    return _numeric_germ(curve, z_probe, entry, K, n_fft=n_fft,
                         branch_from_origin=branch_from_origin)


def _exact_branch_location(curve: CurvePoly):
    """Rational-in-z roots of the w-discriminant, for exact germ mode."""
    disc = _disc_cached(curve)
    cs = [c for c in disc.coeffs]
    deg = disc.degree
    if deg == 1:
        return [(-cs[0]) / cs[1]]
    if deg == 2:
        # quadratic formula stays rational iff the w-discriminant of disc is
        # a perfect square in RatFunc(z)
        A, B, C = cs[2], cs[1], cs[0]
        inner = B * B - GaussianRational(4) * A * C
        hn, gn = square_split(inner.num)
        hd, gd = square_split(inner.den)
        if gn.degree != 0 or gd.degree != 0:
            return []
        s = sqrt_exact(gn[0] / gd[0])
        if s is None:
            return []
        root_sq = RatFunc(hn, hd) * s
        out = []
        for sgn in (1, -1):
            out.append((-B + GaussianRational(sgn) * root_sq) / (GaussianRational(2) * A))
        return out
    return []


def _exact_quadratic_branch_germ(curve, z_probe, entry, K, branch_from_origin=True):
    locs = _exact_branch_location(curve)
    wstar = None
    for cand in locs:
        if abs(complex(cand(z_probe)) - entry.location) < 1e-8 * (1 + abs(entry.location)):
            wstar = cand
            break
    if wstar is None:
        return None
    shifted = curve.shift_w(wstar)
    a, b, c = shifted[2], shifted[1], shifted[0]
    disc_u = b * b - WPoly.const(GaussianRational(4)) * a * c
    # orders in u
    val_d = next((t for t, cf in enumerate(disc_u.coeffs) if not cf.is_zero()), None)
    val_a = next((t for t, cf in enumerate(a.coeffs) if not cf.is_zero()), None)
    if val_d is None or val_a is None or val_d % 2 == 0:
        return None
    # sqrt of the unit part of disc_u = u^val_d * h(u)
    h = [disc_u[val_d + t] for t in range(K + val_a + 2)]
    h0 = h[0]
    hn, gn = square_split(h0.num)
    hd, gd = square_split(h0.den)
    if gn.degree != 0 or gd.degree != 0:
        return None
    tag = gn[0] / gd[0]
    rat_sqrt_h0 = RatFunc(hn, hd)          # sqrt(h0) = rat_sqrt_h0 * sqrt(tag)
    t_series = [h[t] / h0 for t in range(len(h))]
    s = [RatFunc.const(1)]
    for n in range(1, len(t_series)):
        acc = t_series[n]
        for i in range(1, n):
            acc = acc - s[i] * s[n - i]
        s.append(acc * GaussianRational(Fraction(1, 2)))
    # singular part: +- u^{(val_d/2) - val_a} * sqrt(h0)*S(u) / (2 * a_unit(u))
    a_unit = [a[val_a + t] for t in range(K + 2)]
    inv0 = a_unit[0].inverse()
    series = []
    rem = list(s[: K + 1]) + [RF_ZERO] * max(0, K + 1 - len(s))
    for n in range(K + 1):
        cn = rem[n] * inv0
        series.append(cn)
        for t in range(1, min(len(a_unit), K + 1 - n)):
            rem[n + t] = rem[n + t] - cn * a_unit[t]
    half = GaussianRational(Fraction(1, 2))
    coeffs = [cf * rat_sqrt_h0 * half for cf in series]
    alpha = Fraction(val_a) - Fraction(val_d, 2)
    germ = Germ(index=entry.index, alpha=alpha, nu=NU_BRANCH, coeffs=coeffs,
                sqrt_scale=tag, label=f"branch@{entry.index}")
    germ.location_exact = wstar
    # branch sign from the origin continuation
    if branch_from_origin and curve.origin_value is not None:
        sign = _branch_sign_from_origin(curve, z_probe, entry, germ)
        if sign < 0:
            germ.coeffs = [-cf for cf in germ.coeffs]
    return germ


def _branch_sign_from_origin(curve, z_probe, entry, germ, delta=None):
    """+1/-1: which square-root branch matches continuing the origin germ
    toward the singularity (lateral path passing above)."""
    z = complex(z_probe)
    w1 = entry.location
    eb = eval_branches(curve, 0j, z)
    phi0 = complex(curve.origin_value(z))
    start = eb[int(np.argmin(np.abs(eb - phi0)))]
    if delta is None:
        delta = 0.08 * min([abs(w1)] + [abs(w1 - e.location)
                            for e in borel_singularities(curve, z).entries
                            if e.index not in (0, entry.index)] or [abs(w1)])
        delta = max(delta, 1e-3 * abs(w1))
    # path from 0 to w1 - delta*dir with a small lift above the segment
    dirn = w1 / abs(w1)
    lift = 0.15j * dirn * abs(w1)
    target = w1 - delta * dirn
    path = [0j, 0.25 * w1 + lift, 0.75 * w1 + lift, target]
    try:
        track = continue_branch(curve, z, path, start, tube=delta * 0.5)
    except ContinuationError:
        return +1
    u = target - w1
    pred = complex(germ.scale_numeric()) * sum(
        complex(germ.coeffs[k](z)) * u ** k for k in range(min(4, len(germ.coeffs)))
    ) * u ** (-float(germ.alpha))
    return +1 if abs(pred - track.end_value) <= abs(-pred - track.end_value) else -1


def _exact_quadratic_pole_germ(curve, entry, z_probe):
    """Simple pole germ: residue of the blowing sheet, exact when the pole
    location is a rational root of the leading coefficient."""
    lead = curve.a[-1]
    roots = []
    if lead.degree == 1:
        roots = [(-lead[0]) / lead[1]]
    elif lead.degree == 2:
        A, B, C = lead[2], lead[1], lead[0]
        inner = B * B - GaussianRational(4) * A * C
        hn, gn = square_split(inner.num)
        hd, gd = square_split(inner.den)
        if gn.degree == 0 and gd.degree == 0:
            s = sqrt_exact(gn[0] / gd[0])
            if s is not None:
                rsq = RatFunc(hn, hd) * s
                roots = [(-B + GaussianRational(sg) * rsq) / (GaussianRational(2) * A) for sg in (1, -1)]
    wstar = None
    for cand in roots:
        if abs(complex(cand(z_probe)) - entry.location) < 1e-8 * (1 + abs(entry.location)):
            wstar = cand
            break
    if wstar is None:
        return None
    shifted = curve.shift_w(wstar)
    a, b = shifted[2], shifted[1]
    if not a[0].is_zero():
        return None
    a1 = a[1]
    if a1.is_zero():
        return None  # higher-order pole: numeric mode
    res = -(b[0]) / a1
    germ = Germ(index=entry.index, alpha=1, nu=NU_POLE, coeffs=[res],
                label=f"pole@{entry.index}")
    germ.location_exact = wstar
    return germ


def _numeric_germ(curve, z_probe, entry, K, n_fft=512, branch_from_origin=True):
    """Puiseux coefficients by FFT on a tracked circle around the singularity.

    Returns a Germ whose coeffs are constant RatFuncs (numeric snapshot mode),
    with alpha = -(leading exponent) and nu per cycle type.
    """
    z = complex(z_probe)
    w0 = entry.location
    others = [e.location for e in borel_singularities(curve, z).entries
              if e.index != entry.index and e.kind != "origin"]
    sep = min([abs(b - w0) for b in others] + [abs(w0) if abs(w0) > 0 else 1.0])
    rho = 0.25 * sep
    q = entry.cycle
    # sample phi on the q-fold cover circle u = (rho e^{i theta})^1 ... track
    # continuously around q turns
    n = n_fft
    vals = np.zeros(n, dtype=complex)
    theta = np.linspace(0, 2 * np.pi * q, n + 1)[:-1]
    start_fibre = eval_branches(curve, w0 + rho, z)
    # choose the singular sheet: fastest growth toward w0
    g2 = _transport_fibre(curve, z, [w0 + rho, w0 + rho / 8], start_fibre)
    k_sing = int(np.argmax(np.abs(g2)))
    if branch_from_origin and curve.origin_value is not None and entry.kind == "pole":
        pass
    cur = start_fibre.copy()
    prev_pt = w0 + rho
    vals[0] = cur[k_sing]
    for i in range(1, n):
        pt = w0 + rho * np.exp(1j * theta[i])
        nxt = eval_branches(curve, pt, z)
        perm = match_roots(cur, nxt)
        cur = np.asarray(nxt)[perm]
        vals[i] = cur[k_sing]
        prev_pt = pt
    # Laurent coefficients in the local parameter t = u^{1/q}: phi = sum c_m t^m
    # FFT over the t-circle of radius rho^{1/q}
    tpow = rho ** (1.0 / q)
    fft = np.fft.fft(vals) / n
    # c_m for m in [-n/2, n/2): index mapping
    coeffs_t = {}
    for idx in range(n):
        m = idx if idx < n // 2 else idx - n
        coeffs_t[m] = fft[idx] / tpow ** m
    # leading exponent: most negative m with non-negligible coefficient
    mag = {m: abs(c) * tpow ** m for m, c in coeffs_t.items()}
    floor = max(mag.values()) * 1e-9
    neg = [m for m in coeffs_t if mag[m] > floor]
    m0 = min(neg)
    alpha = -Fraction(m0, q)
    out = []
    for k in range(K + 1):
        m = m0 + q * k
        out.append(RatFunc.const(_to_gr(coeffs_t.get(m, 0.0))))
    nu = NU_BRANCH if q > 1 else NU_POLE
    germ = Germ(index=entry.index, alpha=alpha, nu=nu, coeffs=out,
                label=f"numeric@{entry.index}")
    germ.numeric_at = z
    germ.cycle = q
    return germ


def _to_gr(x, digits=14):
    fr = Fraction(round(x.real, digits)).limit_denominator(10 ** digits)
    fi = Fraction(round(x.imag, digits)).limit_denominator(10 ** digits)
    return GaussianRational.from_fraction(fr, fi)


# -- visibility -----------------------------------------------------------


def visibility(curve: CurvePoly, z, i, j, tol=1e-9, snap=None):
    """tau^(i)_j: 1 iff singularity j is reached singularly when the branch
    attached to chi_i is continued along the straight projected segment
    (small detours to the +i*direction side around intermediate points)."""
    if i == j:
        return 1
    z = complex(z)
    snap = snap or borel_singularities(curve, z)
    tgt = snap.by_index(j)
    if i == 0:
        start_w = 0j
        eb = eval_branches(curve, 0j, z)
        phi0 = complex(curve.origin_value(z))
        starts = [eb[int(np.argmin(np.abs(eb - phi0)))]]
    else:
        src = snap.by_index(i)
        dirn = (tgt.location - src.location)
        dirn /= abs(dirn)
        off = min(1e-3, 0.02 * abs(tgt.location - src.location))
        start_w = src.location + off * dirn
        fibre = eval_branches(curve, start_w, z)
        if src.kind == "branch":
            # the sheets attached to the branch germ: the src cycle
            gnear = _transport_fibre(curve, z, [start_w, src.location + 0.05 * off * dirn], fibre)
            order = np.argsort(-np.abs(gnear))
            starts = [fibre[order[0]], fibre[order[1]]] if len(fibre) > 1 else [fibre[0]]
        else:
            gnear = _transport_fibre(curve, z, [start_w, src.location + 0.05 * off * dirn], fibre)
            starts = [fibre[int(np.argmax(np.abs(gnear)))]]
    seg = tgt.location - start_w
    seg_dir = seg / abs(seg)
    # keep end offsets and detours inside the local singularity separation
    others = [e.location for e in snap.entries
              if e.index not in (i, j) and e.kind != "origin"]
    sep_tgt = min([abs(tgt.location - o) for o in others] + [abs(seg)])
    delta_end = min(0.02 * abs(seg), 0.3 * sep_tgt)
    # detour around intermediate singularities lying near the segment
    waypoints = [start_w]
    blockers = []
    for e in snap.entries:
        if e.index in (i, j) or e.kind == "origin":
            continue
        u = (e.location - start_w) / seg
        if -0.02 < u.real < 1.02 and abs(u.imag) * abs(seg) < max(tol * 10, 0.03 * abs(seg)):
            blockers.append((u.real, e.location))
    blockers.sort()
    for _, bw in blockers:
        room = min([abs(bw - e.location) for e in snap.entries
                    if abs(bw - e.location) > 1e-12] + [abs(seg)])
        r = min(0.05 * abs(seg), 0.4 * room)
        waypoints += [bw - r * seg_dir + 1j * seg_dir * r,
                      bw + r * seg_dir + 1j * seg_dir * r]
    end_w = tgt.location - delta_end * seg_dir
    waypoints.append(end_w)
    singular = False
    excl = [tgt.location] if i == 0 else [tgt.location, snap.by_index(i).location]
    for start in starts:
        try:
            t1 = continue_branch(curve, z, waypoints, start, tube=delta_end * 0.3,
                                 exclude=excl)
        except ContinuationError:
            continue
        if tgt.kind == "pole" or tgt.cycle == 1:
            # pole: the tracked sheet blows up as 1/(w - chi_j)
            try:
                half = [end_w, tgt.location - (delta_end / 2) * seg_dir]
                t2 = continue_branch(curve, z, half, t1.end_value,
                                     tube=delta_end * 0.1, exclude=excl)
            except ContinuationError:
                continue
            ratio = abs(t2.end_value) / max(abs(t1.end_value), 1e-300)
            if ratio > 2 ** 0.5:
                singular = True
        else:
            # branch point: monodromy participation of the tracked sheet; a
            # loop test is immune to a dominant regular part
            th0 = np.angle(end_w - tgt.location)
            loop = [tgt.location + delta_end * np.exp(1j * (th0 + t))
                    for t in np.linspace(0, 2 * np.pi, 33)]
            try:
                t2 = continue_branch(curve, z, loop, t1.end_value, tube=0,
                                     exclude=excl)
            except ContinuationError:
                continue
            if abs(t2.end_value - t1.end_value) > 1e-4 * (1 + abs(t1.end_value)):
                singular = True
    return 1 if singular else 0


# -- singularity graph -----------------------------------------------------


@dataclass
class GraphChild:
    parent: int
    z: object            # GaussianRational when exact, else complex
    beta: Fraction | None
    kind: str            # turning | virtual
    partner: int | None = None

    def z_complex(self):
        return complex(self.z)


@dataclass
class SingularityGraph:
    nodes: list                     # singularity indices with kind labels
    children: list                  # GraphChild entries
    arrows: list                    # (i, j) meaning i <- j
    singulants: dict                # index -> Singulant (constants resolved)
    gamma: dict = field(default_factory=dict)
    delta: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)   # index -> list of child z values

    def to_json_dict(self):
        def zval(v):
            if isinstance(v, GaussianRational):
                return [str(v.re), str(v.im)]
            return [repr(complex(v).real), repr(complex(v).imag)]

        return {
            "nodes": self.nodes,
            "children": [
                {"parent": c.parent, "z": zval(c.z),
                 "beta": None if c.beta is None else str(c.beta),
                 "kind": c.kind, "partner": c.partner}
                for c in self.children
            ],
            "arrows": [list(a) for a in self.arrows],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)


# -- exact order/series helpers for d=2 singulant algebra ------------------


def algebraic_order_at(a: Poly, c: Poly, g: Poly, z_star):
    """Order of vanishing of a(z) + c(z)*sqrt(g(z)) at exact z_star.

    Returns a Fraction (possibly half-integer).  Exact whenever either the
    sqrt part vanishes, g(z_star) is a perfect Gaussian-rational square, or
    g vanishes to odd order (integer/half-integer grids cannot cancel).
    """
    va = a.valuation_at(z_star) if not a.is_zero() else None
    if c.is_zero() or g.is_zero():
        if va is None:
            raise ValueError("identically zero expression")
        return Fraction(va)
    vg = g.valuation_at(z_star)
    vc = c.valuation_at(z_star) if not c.is_zero() else None
    vb = None if vc is None else Fraction(vc) + Fraction(vg, 2)
    if vb is None:
        return Fraction(va)
    if va is None:
        return vb
    if vg % 2 == 1:
        return min(Fraction(va), vb)
    # integer grids: cancellation possible; need exact series addition
    s0 = sqrt_exact(_shift_lead(g, z_star, vg))
    if s0 is None:
        raise ValueError("sqrt leading value not exact in Q(i); numeric order needed")
    n_terms = int(max(va, vb)) - int(min(va, vb)) + a.coeffs.__len__() + g.coeffs.__len__() + 4
    ser_a = a.taylor_shift(z_star).coeffs
    ser_g = g.taylor_shift(z_star).coeffs[vg:]
    # sqrt series of g-unit part
    inv0 = ser_g[0].inverse()
    t = [x * inv0 for x in ser_g]
    t += [ZERO] * max(0, n_terms - len(t))
    s = [ONE]
    for n in range(1, n_terms):
        acc = t[n] if n < len(t) else ZERO
        for i_ in range(1, n):
            acc = acc - s[i_] * s[n - i_]
        s.append(acc * GaussianRational(Fraction(1, 2)))
    sq = [x * s0 for x in s]  # sqrt(g) unit-part series times exact leading sqrt
    csh = c.taylor_shift(z_star).coeffs
    total = list(ser_a) + [ZERO] * max(0, n_terms + vg // 2 + len(csh) - len(ser_a))
    for p_, cv in enumerate(csh):
        if cv.is_zero():
            continue
        for q_, sv in enumerate(sq):
            k = p_ + q_ + vg // 2
            if k < len(total):
                total[k] = total[k] + cv * sv
    for k, v in enumerate(total):
        if not v.is_zero():
            return Fraction(k)
    raise ValueError("expression vanishes beyond computed order; increase depth")


def _shift_lead(g: Poly, z_star, vg):
    return g.taylor_shift(z_star).coeffs[vg]


def chi_difference_order(si: Singulant, sj: Singulant, z_star):
    """Exact order of the zero of chi_j - chi_i at z_star (d=2 closed forms)."""
    Ai, Ci, gi, sgi = si.closed if si.closed else (Poly(()), None, Poly((ONE,)), 1)
    Aj, Cj, gj, sgj = sj.closed if sj.closed else (Poly(()), None, Poly((ONE,)), 1)
    pi_ = si.constant if si.constant is not None else ZERO
    pj_ = sj.constant if sj.constant is not None else ZERO
    a = (Aj + Poly.const(pj_)) - (Ai + Poly.const(pi_))
    ci = Ci.scale(GaussianRational(sgi)) if Ci is not None else Poly(())
    cj = Cj.scale(GaussianRational(sgj)) if Cj is not None else Poly(())
    g = gj if (Cj is not None and not Cj.is_zero()) else gi
    c = cj - ci
    return algebraic_order_at(a, c, g, z_star)


def sector_local_exponent(ode: OdeSpec, sign, z_star):
    """Indicial exponent rho of the sector chain head u_0 at z_star, plus the
    per-step pole increment Delta = 1 + val(2 chi' - P1).

    u_0'/u_0 = -chi''/(2 chi' - P1); its rational part is
    -(P-part)/... computed from the square-split disc = h^2 g.
    """
    A, C, g, h = quadratic_singulant_forms(ode)
    P1 = ode.P[1]
    # a = sign * h sqrt(g); chi'' = (P1' + sign (h sqrt g)')/2
    # rational part of -chi''/a:  -(h sqrt g)' / (2 h sqrt g) = -(2h'g + h g')/(4 h g)
    num = (h.derivative() * g).scale(GaussianRational(2)) + h * g.derivative()
    rat = RatFunc(-num, (h * g).scale(GaussianRational(4)))
    # irrational part: -P1' / (2 sign h sqrt g): affects no pole exponent when
    # its valuation exceeds -1 (true whenever val(h)+val(g)/2 <= 1/2 + val P1')
    val_a = Fraction(h.valuation_at(z_star)) + Fraction(g.valuation_at(z_star), 2)
    vp = Fraction(ode.P[1].derivative().valuation_at(z_star)) if not P1.derivative().is_zero() else None
    if vp is not None and vp - val_a <= -1:
        raise ValueError("irrational part of the indicial ratio carries a pole; numeric mode")
    # residue of rat at z_star
    den_val = rat.den.valuation_at(z_star)
    if den_val == 0:
        rho = Fraction(0)
    elif den_val == 1:
        num_shift = rat.num.taylor_shift(z_star)
        den_shift = rat.den.taylor_shift(z_star)
        res = num_shift.coeffs[0] / den_shift.coeffs[1] if num_shift.coeffs else ZERO
        if res.im != 0 or res.re.denominator > 12:
            raise ValueError("non-rational indicial exponent")
        rho = Fraction(res.re)
    else:
        raise ValueError("higher-order pole in the indicial ratio; irregular point")
    delta = Fraction(1) + val_a
    return rho, delta


def _chain_is_trivial(ode: OdeSpec, sign):
    """True when u_0'' == 0 identically (the chain truncates: y_k = C_k u_0)."""
    A, C, g, h = quadratic_singulant_forms(ode)
    num = (h.derivative() * g).scale(GaussianRational(2)) + h * g.derivative()
    rat = RatFunc(-num, (h * g).scale(GaussianRational(4)))
    if not ode.P[1].derivative().is_zero():
        # irrational contribution to u_0'/u_0 present; chain generically nontrivial
        if not (C is not None and not C.is_zero() and g.degree >= 1):
            # rational chi': recompute exactly via the chain itself
            return None
        return False
    # u_0'/u_0 = rat; u_0'' == 0 iff (rat' + rat^2) == 0
    return (rat.derivative() + rat * rat).is_zero()


def germ_pole_profile(coeffs, max_order_fit=6):
    """Exact pole data of a germ coefficient list: {root: (gamma, delta)}.

    gamma, delta from the affine growth of den-orders in k; roots restricted
    to exact rational denominator roots (non-rational factors reported).
    """
    orders = {}
    residual_seen = False
    for k, rf in enumerate(coeffs):
        if rf.is_zero():
            continue
        pole_list, residual = rf.poles()
        if residual.degree >= 1:
            residual_seen = True
        for rho, m in pole_list:
            orders.setdefault(rho, {})[k] = m
    out = {}
    for rho, om in orders.items():
        ks = sorted(om)
        if len(ks) >= 2:
            k1, k2 = ks[-2], ks[-1]
            delta = Fraction(om[k2] - om[k1], k2 - k1)
            gamma = Fraction(om[k2]) - delta * k2
        else:
            delta = Fraction(0)
            gamma = Fraction(om[ks[0]])
        out[rho] = (gamma, delta)
    return out, residual_seen


# -- the singularity graph --------------------------------------------------


def singularity_graph(ode: OdeSpec, curve: CurvePoly = None, K_germ=12,
                      germ=None) -> SingularityGraph:
    """Build Gamma(Sigma_z): nodes, genuine children (the Gamma_z sets),
    oriented arrows from the node-selection rule, and virtual turning points.

    Needs d=2 closed-form singulants for the exact path (covers all worked
    examples with exponential sectors; curves without an ODE get snapshots
    via germ_at instead).
    """
    from .borelpde import perturbative_germ

    if ode.d != 2:
        raise NotImplementedError("exact singularity graphs implemented for d = 2")
    pde = to_borel_pde(ode)
    if germ is None:
        germ = perturbative_germ(pde, K_germ)
    profile, _ = germ_pole_profile(germ.coeffs)
    gamma0 = {}
    sets = {0: sorted(profile, key=lambda r: (r.re, r.im))}
    A, C, g, h = quadratic_singulant_forms(ode)
    has_sqrt = C is not None and not C.is_zero() and g.degree >= 1

    origin = Singulant(ode, 0, closed=(Poly(()), None, Poly((ONE,)), 1))
    origin.constant = ZERO
    singulants = {0: origin}
    gamma = {}
    delta = {}
    gamma_at = {}
    chains = {}
    for root, (g0, d0) in profile.items():
        gamma_at[(0, root)] = (g0, d0)
    if profile:
        g0, d0 = max(profile.values(), key=lambda t: t[1])
        gamma[0], delta[0] = g0, d0
    else:
        gamma[0], delta[0] = Fraction(0), Fraction(0)

    unassigned = [+1, -1]
    arrows = []
    children = []
    frontier = [0]
    next_index = 1
    branch_of = {}

    # structural candidate set for sector germs: zeros of the disc = h^2 g
    disc_roots = []
    for p in (h, g):
        if p.degree >= 1:
            roots, _res = p.rational_roots()
            disc_roots.extend(roots)
    disc_roots = list(dict.fromkeys(disc_roots))

    while frontier:
        i = frontier.pop(0)
        si = singulants[i]
        for z_star in sets.get(i, []):
            # already-resolved partners coalescing here
            matched = False
            for j, sj in list(singulants.items()):
                if j == i or j == 0:
                    continue
                try:
                    if sj.chi_exact(z_star) == si.chi_exact(z_star):
                        beta = chi_difference_order(si, sj, z_star)
                        arrows.append((i, j))
                        children.append(GraphChild(parent=i, z=z_star, beta=beta,
                                                   kind="turning", partner=j))
                        matched = True
                except ValueError:
                    continue
            if matched:
                continue
            # candidates from unassigned characteristic branches
            best = None
            for sgn in list(unassigned):
                cand = Singulant(ode, -1, closed=(A, C, g, sgn))
                try:
                    cand = cand.with_constant(z_star, si.chi_exact(z_star))
                    beta = chi_difference_order(si, cand, z_star)
                except ValueError:
                    continue
                if beta <= 0:
                    continue
                if beta >= delta.get(i, Fraction(0)):
                    if best is None or beta > best[1]:
                        best = (sgn, beta, cand)
            if best is None:
                continue
            sgn, beta, cand = best
            idx_new = next_index
            next_index += 1
            cand.index = idx_new
            singulants[idx_new] = cand
            branch_of[idx_new] = sgn
            unassigned.remove(sgn)
            arrows.append((i, idx_new))
            children.append(GraphChild(parent=i, z=z_star, beta=beta,
                                       kind="turning", partner=idx_new))
            # Gamma-set of the new sector germ
            new_set = []
            try:
                sec = sector_recursion(pde, cand, max(2, min(K_germ, 6)))
                chains[idx_new] = sec
                prof, _ = germ_pole_profile(sec.chain)
                new_set = sorted(prof, key=lambda r: (r.re, r.im))
                for root, (gm, dl) in prof.items():
                    gamma_at[(idx_new, root)] = (gm, dl)
                if prof:
                    gm, dl = max(prof.values(), key=lambda t: t[1])
                    gamma[idx_new], delta[idx_new] = gm, dl
                else:
                    gamma[idx_new], delta[idx_new] = Fraction(0), Fraction(0)
            except SectorRecursionError:
                for zc in disc_roots:
                    try:
                        rho, dl = sector_local_exponent(ode, sgn, zc)
                    except ValueError:
                        rho, dl = None, None
                    if rho is None:
                        continue
                    trivial = _chain_is_trivial(ode, sgn)
                    if rho < 0 or (trivial is False and rho < dl):
                        new_set.append(zc)
                        gamma[idx_new] = -rho
                        delta[idx_new] = dl
                        gamma_at[(idx_new, zc)] = (-rho, dl)
                gamma.setdefault(idx_new, Fraction(0))
                delta.setdefault(idx_new, Fraction(0))
            sets[idx_new] = new_set
            frontier.append(idx_new)

    # leftover branches (unreachable from the origin): index in branch order
    for sgn in list(unassigned):
        cand = Singulant(ode, next_index, closed=(A, C, g, sgn))
        singulants[next_index] = cand
        branch_of[next_index] = sgn
        sets.setdefault(next_index, [])
        next_index += 1
        unassigned.remove(sgn)

    # virtual turning points: projection coincidences not in any Gamma-set
    genuine_pts = {(c.parent, c.partner): c.z for c in children}
    pairs = [(i, j) for i in singulants for j in singulants if i < j]
    for i, j in pairs:
        si, sj = singulants[i], singulants[j]
        if si.constant is None or sj.constant is None:
            continue
        for z_star in _coincidence_points(si, sj):
            if any(_same_exact(z_star, c.z) for c in children):
                continue
            # confirm this branch combination really coincides
            try:
                vi = si.chi_exact(z_star)
                vj = sj.chi_exact(z_star)
                ok = (vi == vj)
            except ValueError:
                ok = abs(si.chi_numeric(complex(z_star)) - sj.chi_numeric(complex(z_star))) < 1e-9
            if not ok:
                continue
            beta = None
            try:
                beta = chi_difference_order(si, sj, z_star)
            except ValueError:
                pass
            children.append(GraphChild(parent=i, z=z_star, beta=beta,
                                       kind="virtual", partner=j))

    nodes = [{"index": k, "kind": ("origin" if k == 0 else "sector"),
              "sign": branch_of.get(k)} for k in sorted(singulants)]
    out = SingularityGraph(nodes=nodes, children=children, arrows=arrows,
                           singulants=singulants, gamma=gamma, delta=delta, sets=sets)
    out.gamma_at = gamma_at
    out.chains = chains
    out.ode = ode
    return out


def _same_exact(z1, z2):
    if isinstance(z1, GaussianRational) and isinstance(z2, GaussianRational):
        return z1 == z2
    return abs(complex(z1) - complex(z2)) < 1e-10


def _coincidence_points(si: Singulant, sj: Singulant):
    """Exact rational candidates where chi_i(z) = chi_j(z) as projections."""
    Ai, Ci, gi, sgi = si.closed
    Aj, Cj, gj, sgj = sj.closed
    pi_ = si.constant or ZERO
    pj_ = sj.constant or ZERO
    a = (Aj + Poly.const(pj_)) - (Ai + Poly.const(pi_))
    ci = Ci.scale(GaussianRational(sgi)) if Ci is not None else Poly(())
    cj = Cj.scale(GaussianRational(sgj)) if Cj is not None else Poly(())
    c = cj - ci
    g = gj if (Cj is not None and not Cj.is_zero()) else gi
    if c.is_zero():
        target = a
    else:
        target = a * a - c * c * g
    if target.is_zero():
        return []
    roots, _residual = target.rational_roots()
    return list(dict.fromkeys(roots))
