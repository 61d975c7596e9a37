"""Stokes automorphism algebra on the extended transseries parameter space.

States carry the sector parameters sigma_i and the visibility bits
tau^(i)_j.  Naive generators are tau-gated translations

    S^_ij : sigma_j += S^_ij * tau^(i)_j * sigma_i,

higher-order generators T_ij;k flip tau^(i)_j mod 2, and resolved
generators act unconditionally.  Reduction to a resolved normal form is a
deterministic walk that tracks the tau state, because the quotient
relations (T o S^ = S, S^ o T = Id) hold as sigma-actions only relative
to the tau configuration in force at the crossing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TransseriesState:
    sigma: tuple                 # complex per sector index 0..d
    tau: tuple                   # ((i, j, bit), ...) sorted; absent = 1

    @staticmethod
    def make(sigma, tau=None):
        tau = tau or {}
        items = tuple(sorted((int(i), int(j), int(b) & 1) for (i, j), b in tau.items()))
        return TransseriesState(sigma=tuple(complex(s) for s in sigma), tau=items)

    def tau_bit(self, i, j):
        if i == j:
            return 1
        for a, b, bit in self.tau:
            if (a, b) == (i, j):
                return bit
        return 1

    def with_sigma(self, j, value):
        s = list(self.sigma)
        s[j] = value
        return TransseriesState(sigma=tuple(s), tau=self.tau)

    def with_tau(self, i, j, bit):
        items = [t for t in self.tau if (t[0], t[1]) != (i, j)]
        items.append((i, j, int(bit) & 1))
        return TransseriesState(sigma=self.sigma, tau=tuple(sorted(items)))

    def close_to(self, other, tol=1e-10):
        if len(self.sigma) != len(other.sigma):
            return False
        if any(abs(a - b) > tol * (1 + abs(a) + abs(b)) for a, b in zip(self.sigma, other.sigma)):
            return False
        taus = set((i, j) for i, j, _ in self.tau) | set((i, j) for i, j, _ in other.tau)
        return all(self.tau_bit(i, j) == other.tau_bit(i, j) for i, j in taus)


@dataclass(frozen=True)
class Generator:
    kind: str          # "naive" | "higher" | "resolved"
    i: int
    j: int
    k: int = -1        # obstructor index for higher generators
    constant: complex = 0j
    inverse: bool = False

    def inv(self):
        return Generator(self.kind, self.i, self.j, self.k, self.constant,
                         inverse=not self.inverse)

    def label(self):
        sub = f"{self.i}{self.j}"
        if self.kind == "naive":
            core = f"S^_{sub}"
        elif self.kind == "resolved":
            core = f"S_{sub}"
        else:
            core = f"T_{sub};{self.k}"
        return core + ("^-1" if self.inverse else "")


def apply_generator(state: TransseriesState, g: Generator) -> TransseriesState:
    """Exact action of one generator (inverse generators subtract)."""
    if g.kind == "higher":
        return state.with_tau(g.i, g.j, state.tau_bit(g.i, g.j) ^ 1)
    gate = state.tau_bit(g.i, g.j) if g.kind == "naive" else 1
    if gate == 0:
        return state
    sgn = -1 if g.inverse else 1
    return state.with_sigma(g.j, state.sigma[g.j] + sgn * g.constant * state.sigma[g.i])


def apply_word(state: TransseriesState, word) -> TransseriesState:
    """word = [g_first, g_second, ...] in crossing (application) order."""
    for g in word:
        state = apply_generator(state, g)
    return state


def compose_label(word):
    """Right-to-left composition string, matching the notation S_a o S_b."""
    return " o ".join(g.label() for g in reversed(word))


# -- path decomposition -------------------------------------------------------


class TangentialCrossingError(RuntimeError):
    pass


def word_along_path(graph_data, path, constants=None, tol=1e-9):
    """Ordered generator word from the crossings of a polyline with a Stokes
    graph's traced lines.

    graph_data: a StokesGraphData (lines with kind naive/higher).  Crossing
    direction fixes generator vs inverse: the positive side of a line is the
    one its defining function F increases toward; crossing F<0 -> F>0 gives
    the generator.  Naive crossings only count on the active (dominant)
    part; simultaneous crossings at one point are emitted sorted by indices.
    """
    from .stokes import TraceState

    field = getattr(graph_data, "field", None)
    if field is None:
        raise ValueError("graph_data must carry its singulant field")
    constants = constants or {}
    crossings = []
    pts = [complex(p) for p in path]
    for seg_idx, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
        for line in graph_data.lines:
            if line.kind == "true":
                continue
            st = TraceState(field, "naive" if line.kind == "naive" else "higher",
                            line.indices, graph_data.theta)
            # find intersections of segment [a, b] with the polyline
            lp = line.points
            for t in range(len(lp) - 1):
                if not (line.active[t] or line.active[t + 1]):
                    continue
                hit = _segment_intersection(a, b, lp[t], lp[t + 1])
                if hit is None:
                    continue
                s_par, z_hit = hit
                # crossing direction from the sign change of the defining F
                eps = max(tol * 10, 1e-6)
                dirn = (b - a) / abs(b - a)
                try:
                    F1 = st.F_and_grad(z_hit - eps * dirn)[0]
                    F2 = st.F_and_grad(z_hit + eps * dirn)[0]
                except ZeroDivisionError:
                    continue
                if F1 == 0 or F2 == 0 or F1 * F2 > 0:
                    if abs(F1) < tol and abs(F2) < tol:
                        raise TangentialCrossingError(
                            f"path runs tangent to {line.kind} line {line.indices} near {z_hit:.6g}")
                    continue
                crossings.append((seg_idx + s_par, z_hit, line, F1 < 0))
    crossings.sort(key=lambda c: (c[0],) + _tiebreak(c[2]))
    word = []
    for _, z_hit, line, positive in crossings:
        if line.kind == "naive":
            i, j = line.indices
            S = constants.get((i, j), complex(1))
            g = Generator("naive", i, j, constant=S)
        else:
            i, j, k = line.indices
            g = Generator("higher", i, k, k=j)
        word.append(g if positive else g.inv())
    return word


def _tiebreak(line):
    return tuple(line.indices)


def _segment_intersection(a, b, c, d):
    """Intersection of segments [a,b] and [c,d] in the complex plane.

    Returns (s, point) with s the parameter along [a,b], or None.
    """
    r = b - a
    s = d - c
    denom = (r.real * s.imag - r.imag * s.real)
    if abs(denom) < 1e-15 * (abs(r) * abs(s) + 1e-300):
        return None
    q = c - a
    t = (q.real * s.imag - q.imag * s.real) / denom
    u = (q.real * r.imag - q.imag * r.real) / denom
    if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
        return t, a + t * r
    return None


# -- reduction ----------------------------------------------------------------


def reduce_word(word, initial_state: TransseriesState):
    """Normal form over resolved generators, by the deterministic tau-walk.

    Walks the word tracking the tau bits: a gated naive generator either
    resolves (gate 1) or drops (gate 0); higher generators only toggle the
    walked bits.  Returns (resolved_word, net_tau_flips).  The sigma-action
    of the resolved word equals the original word's for the given initial
    tau configuration (the quotient relations are tau-dependent, so the
    entry state is part of the data).
    """
    tau = dict()
    for i, j, b in initial_state.tau:
        tau[(i, j)] = b
    out = []
    flips = {}
    for g in word:
        if g.kind == "higher":
            key = (g.i, g.j)
            tau[key] = (tau.get(key, 1)) ^ 1
            flips[key] = flips.get(key, 0) ^ 1
        elif g.kind == "naive":
            if tau.get((g.i, g.j), 1):
                out.append(Generator("resolved", g.i, g.j, constant=g.constant,
                                     inverse=g.inverse))
        else:
            out.append(g)
    flips = {k: v for k, v in flips.items() if v}
    return out, flips


def check_path_equivalence(word_a, word_b, n_sectors, trials=100, tol=1e-10, seed=7,
                           initial_tau=None):
    """Both words act identically on random states?  Returns (verdict, witness).

    On failure the witness is the first counterexample state and its images.
    """
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        sigma = rng.normal(size=n_sectors) + 1j * rng.normal(size=n_sectors)
        state = TransseriesState.make(sigma, initial_tau)
        ra = apply_word(state, word_a)
        rb = apply_word(state, word_b)
        if not ra.close_to(rb, tol):
            return False, {"state": state, "image_a": ra, "image_b": rb}
    return True, None


def word_to_json(word):
    return [{"kind": g.kind, "i": g.i, "j": g.j, "k": g.k,
             "constant": [g.constant.real, g.constant.imag],
             "inverse": g.inverse} for g in word]


def word_from_json(items):
    return [Generator(d["kind"], d["i"], d["j"], d.get("k", -1),
                      complex(d["constant"][0], d["constant"][1]),
                      d.get("inverse", False)) for d in items]
