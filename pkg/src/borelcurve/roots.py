"""Simultaneous complex polynomial root finding (Aberth-Ehrlich).

All numeric fiber/branch-point computations funnel through here so the
residual guarantee lives in one place.
"""

from __future__ import annotations

import numpy as np


class RootFindingError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


def poly_scale(coeffs):
    """Magnitude scale of a coefficient vector, used to normalize residuals."""
    return max(abs(c) for c in coeffs)


def aberth_roots(coeffs, tol=1e-13, max_iter=120):
    """All complex roots of sum(coeffs[k] x^k), leading coefficient last.

    Simultaneous (Aberth-Ehrlich) iteration from a perturbed-circle start.
    Each returned root r satisfies |p(r)| <= tol * scale(p) * max(1,|r|)^deg
    or a RootFindingError carrying the residuals is raised.
    """
    c = np.asarray(coeffs, dtype=complex)
    # strip trailing (leading-coefficient) zeros defensively
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
    n = len(c) - 1
    if n < 1:
        raise ValueError("degree must be >= 1")
    scale = poly_scale(c)
    if abs(c[-1]) <= tol * scale:
        raise ValueError("leading coefficient below tolerance")
    if n == 1:
        return np.array([-c[0] / c[1]])

    # low-order zero coefficients give exact roots at the origin
    nzero = 0
    while abs(c[nzero]) == 0.0:
        nzero += 1
    work = c[nzero:]
    m = len(work) - 1
    roots_origin = np.zeros(nzero, dtype=complex)
    if m == 0:
        return roots_origin

    # Cauchy-style radius for initial guesses
    radius = 1.0 + max(abs(work[:-1] / work[-1])) if m > 0 else 1.0
    radius = min(radius, 1.0 + max(abs(work[:-1])) / abs(work[-1]))
    angles = 2 * np.pi * (np.arange(m) + 0.25) / m + 0.5
    x = 0.5 * radius * np.exp(1j * angles)

    dcoef = np.arange(1, m + 1) * work[1:]
    for _ in range(max_iter):
        p = np.polyval(work[::-1], x)
        dp = np.polyval(dcoef[::-1], x)
        # Newton correction with guard
        with np.errstate(divide="ignore", invalid="ignore"):
            newt = np.where(dp != 0, p / np.where(dp != 0, dp, 1), 0.0)
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, np.inf)
        s = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - newt * s
        step = np.where(denom != 0, newt / np.where(denom != 0, denom, 1), newt)
        x = x - step
        if np.all(np.abs(step) <= 1e-16 + tol * (1 + np.abs(x))):
            break

    # Newton polish
    for _ in range(3):
        p = np.polyval(work[::-1], x)
        dp = np.polyval(dcoef[::-1], x)
        upd = np.where(np.abs(dp) > 0, p / np.where(dp != 0, dp, 1), 0)
        x = x - upd

    res = np.abs(np.polyval(work[::-1], x))
    bound = tol * scale * np.maximum(1.0, np.abs(x)) ** n
    if np.any(res > np.maximum(bound, 1e-9 * scale)):
        raise RootFindingError(
            f"Aberth iteration failed to converge (max residual {res.max():.3e})",
            residuals=res,
        )
    out = np.concatenate([roots_origin, x])
    return sort_stable(out)


def sort_stable(values):
    """Tie-break ordering used everywhere: by real part, then imaginary part."""
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag.round(12), values.real.round(12)))
    return values[order]


def cluster_roots(roots, tol):
    """Group roots within radius tol**0.5; returns list of (center, multiplicity)."""
    rad = tol ** 0.5
    roots = list(np.asarray(roots, dtype=complex))
    clusters = []
    used = [False] * len(roots)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        members = [r]
        used[i] = True
        for j in range(i + 1, len(roots)):
            if not used[j] and abs(roots[j] - r) <= rad:
                members.append(roots[j])
                used[j] = True
        clusters.append((sum(members) / len(members), len(members)))
    return clusters


def roots_with_multiplicity(coeffs, tol=1e-13, cluster_tol=None):
    """Roots of a complex polynomial as (root, multiplicity) pairs.

    Clusters the Aberth output at radius cluster_tol**0.5 (default: tol) and
    polishes each multiplicity-m cluster by Newton on the (m-1)-th derivative,
    whose root there is simple.  This recovers full accuracy for multiple
    roots, where the raw simultaneous iteration only reaches eps**(1/m).
    """
    raw = aberth_roots(coeffs, tol=tol)
    clusters = cluster_roots(raw, cluster_tol if cluster_tol is not None else tol)
    c = np.asarray(coeffs, dtype=complex)
    out = []
    for center, m in clusters:
        if m > 1:
            d = c.copy()
            for _ in range(m - 1):
                d = d[1:] * np.arange(1, len(d))
            dd = d[1:] * np.arange(1, len(d))
            x = center
            for _ in range(60):
                pv = np.polyval(d[::-1], x)
                dv = np.polyval(dd[::-1], x)
                if dv == 0:
                    break
                step = pv / dv
                x -= step
                if abs(step) < 1e-16 * (1 + abs(x)):
                    break
            center = x
        out.append((center, m))
    return out


def match_roots(previous, current):
    """Permutation matching current roots to previous by proximity (greedy).

    Returns perm with current[perm[i]] the continuation of previous[i].
    """
    previous = np.asarray(previous, dtype=complex)
    current = np.asarray(current, dtype=complex)
    n = len(previous)
    dist = np.abs(previous[:, None] - current[None, :])
    perm = [-1] * n
    taken = set()
    # greedy on globally smallest distances
    flat = [(dist[i, j], i, j) for i in range(n) for j in range(n)]
    flat.sort(key=lambda t: t[0])
    assigned = 0
    for _, i, j in flat:
        if perm[i] == -1 and j not in taken:
            perm[i] = j
            taken.add(j)
            assigned += 1
            if assigned == n:
                break
    return perm
