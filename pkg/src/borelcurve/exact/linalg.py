"""Exact linear algebra over the Gaussian rationals.

Only what the curve-ansatz solve needs: row-reduction, rank, and
nullspace bases of (possibly sparse, highly redundant) homogeneous
systems.
"""

from __future__ import annotations

from .gaussrat import GaussianRational, ZERO, ONE


def rref(rows, ncols):
    """Reduced row echelon form of a list of dict-rows {col: GaussianRational}.

    Returns (pivots, reduced_rows) where pivots is the ordered list of pivot
    columns and reduced_rows[i] is the row with pivot pivots[i] scaled to 1.
    """
    reduced = []   # list of (pivot_col, row_dict) with row[pivot_col] == 1
    for row in rows:
        row = dict(row)
        for pcol, prow in reduced:
            c = row.get(pcol)
            if c is not None and not c.is_zero():
                for col, v in prow.items():
                    nv = row.get(col, ZERO) - c * v
                    if nv.is_zero():
                        row.pop(col, None)
                    else:
                        row[col] = nv
            else:
                row.pop(pcol, None)
        row = {c: v for c, v in row.items() if not v.is_zero()}
        if not row:
            continue
        pcol = min(row)
        inv = row[pcol].inverse()
        row = {c: v * inv for c, v in row.items()}
        # back-substitute into existing rows
        for i, (pc, pr) in enumerate(reduced):
            c = pr.get(pcol)
            if c is not None and not c.is_zero():
                nr = dict(pr)
                for col, v in row.items():
                    nv = nr.get(col, ZERO) - c * v
                    if nv.is_zero():
                        nr.pop(col, None)
                    else:
                        nr[col] = nv
                reduced[i] = (pc, nr)
        reduced.append((pcol, row))
    reduced.sort(key=lambda t: t[0])
    return [p for p, _ in reduced], [r for _, r in reduced]


def nullspace(rows, ncols):
    """Basis of the nullspace of the homogeneous system rows * x = 0.

    rows: iterable of dict {col_index: GaussianRational}.
    Returns a list of dense GaussianRational vectors of length ncols.
    """
    pivots, reduced = rref(rows, ncols)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        vec = [ZERO] * ncols
        vec[fc] = ONE
        for pcol, row in zip(pivots, reduced):
            coef = row.get(fc)
            if coef is not None:
                vec[pcol] = -coef
        basis.append(vec)
    return basis


def solve_square(matrix, rhs):
    """Solve an exactly-determined dense square system; raises on singularity."""
    n = len(matrix)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not aug[r][col].is_zero()), None)
        if piv is None:
            raise ArithmeticError("singular exact system")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and not aug[r][col].is_zero():
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]
