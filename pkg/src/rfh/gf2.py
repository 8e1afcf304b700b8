"""Dense GF(2) linear algebra on numpy uint8 arrays.

Row reduction with XOR row operations; enough for ranks and homology of
the small chain complexes in this package.
"""

import numpy as np

__all__ = ["gf2_row_echelon", "gf2_rank"]


def gf2_row_echelon(mat):
    """Row-echelon form over GF(2).

    Returns (R, pivot_cols); len(pivot_cols) is the rank.
    """
    r = (np.asarray(mat, dtype=np.uint8) % 2).copy()
    if r.ndim != 2:
        raise ValueError("need a 2-d matrix")
    rows, cols = r.shape
    pivot_cols = []
    pivot_row = 0
    for col in range(cols):
        if pivot_row >= rows:
            break
        hits = np.nonzero(r[pivot_row:, col])[0]
        if hits.size == 0:
            continue
        first = pivot_row + hits[0]
        if first != pivot_row:
            r[[pivot_row, first]] = r[[first, pivot_row]]
        below = pivot_row + 1 + np.nonzero(r[pivot_row + 1:, col])[0]
        r[below] ^= r[pivot_row]
        pivot_cols.append(col)
        pivot_row += 1
    return r, pivot_cols


def gf2_rank(mat):
    """Rank of a binary matrix over GF(2)."""
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0
    return len(gf2_row_echelon(mat)[1])
