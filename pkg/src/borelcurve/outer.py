"""Outer sector packaging: Stokes series and the convolution formulas that
turn analytic-continuation coefficients into the multiplicative constants.

Resumming S(eps) * y(eps) multiplies Borel transforms by convolution; at a
coalescence point, matching powers of w gives a triangular system for the
C_k.  The Gamma-ratio weights are rational for rational alpha, so the
whole solve stays exact on exact inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

from .exact import GaussianRational
from .exact.gaussrat import ONE, ZERO


@dataclass
class StokesSeries:
    coefficients: list           # C_k, exact GaussianRational or complex
    provenance: str = "assumed"  # matched | assumed
    branch_witness: object = None

    def dump_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["k", "re", "im", "provenance"])
            for k, c in enumerate(self.coefficients):
                if isinstance(c, GaussianRational):
                    wr.writerow([k, str(c.re), str(c.im), self.provenance])
                else:
                    wr.writerow([k, repr(complex(c).real), repr(complex(c).imag), self.provenance])


def _gamma_ratio(k, alpha):
    """Gamma(k+1-alpha)/Gamma(1-alpha) as an exact Fraction (alpha rational)."""
    out = Fraction(1)
    for t in range(1, k + 1):
        out *= t - alpha
    return out


def convolve_constants(cont_coeffs, target_coeffs, alpha):
    """C_k of the Stokes series from continuation and normalized-target germs.

    cont_coeffs[k] = Phi_k^(i->j) at the coincidence point; target_coeffs[k]
    = Phi_k^(j) (normalized sector germ); alpha = the common branch exponent.
    Triangular: C_k uses data of index <= k only.
    """
    alpha = Fraction(alpha)
    exact = all(isinstance(c, GaussianRational) for c in cont_coeffs + target_coeffs)
    phi0 = target_coeffs[0]
    if (phi0.is_zero() if exact else abs(phi0) == 0):
        raise ZeroDivisionError("normalized target germ has vanishing leading coefficient")
    K = min(len(cont_coeffs), len(target_coeffs)) - 1
    C = []
    for k in range(K + 1):
        if k == 0:
            C.append(cont_coeffs[0] / phi0)
            continue
        gk = _gamma_ratio(k, alpha)
        if exact:
            acc = GaussianRational(gk) * (cont_coeffs[k] - C[0] * target_coeffs[k])
            for m in range(1, k):
                acc = acc - C[k - m] * GaussianRational(_gamma_ratio(m, alpha)) * target_coeffs[m]
            C.append(acc / phi0)
        else:
            acc = complex(gk) * (complex(cont_coeffs[k]) - complex(C[0]) * complex(target_coeffs[k]))
            for m in range(1, k):
                acc = acc - complex(C[k - m]) * float(_gamma_ratio(m, alpha)) * complex(target_coeffs[m])
            C.append(acc / complex(phi0))
    return C


def normalize_sector(psi_columns):
    """Normalized psi-grid with psi~_{k,0} = delta_{k,0}, plus the extracted
    Stokes series S = [psi_{0,0}, psi_{1,0}, ...].

    psi_columns: dict m -> [psi_{0,m}, psi_{1,m}, ...].  If the leading
    column vanishes at k=0, normalization shifts to the first non-zero
    entry and reports it.
    """
    col0 = psi_columns.get(0)
    if col0 is None:
        raise ValueError("normalization needs the m=0 column")
    exact = all(isinstance(c, GaussianRational) for col in psi_columns.values() for c in col)
    zero = ZERO if exact else 0j

    def is_zero(c):
        return c.is_zero() if exact else abs(c) < 1e-300

    shift = 0
    while shift < len(col0) and is_zero(col0[shift]):
        shift += 1
    report = {"shifted": shift} if shift else {}
    if shift >= len(col0):
        raise ValueError("m=0 column identically zero; cannot normalize")
    S = list(col0)
    s0 = col0[shift]
    out = {}
    K = len(col0) - 1
    for m, col in psi_columns.items():
        norm = []
        for k in range(len(col)):
            acc = col[k]
            for t in range(1, k - shift + 1):
                acc = acc - S[shift + t] * norm[k - t]
            norm.append(acc / s0)
        out[m] = norm
    return out, StokesSeries(coefficients=S, provenance="assumed"), report
