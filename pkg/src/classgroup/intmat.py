"""Exact integer matrix kernels: Hermite echelon bases and Smith normal form.

The row lattice of an integer matrix is canonically described by its upper
echelon Hermite basis: one row per pivot column, pivots positive, entries above
a pivot reduced into [0, pivot).  Everything downstream (class number pivots,
essential quotient blocks, elementary divisors) reads off this basis.

An optional working modulus keeps entries small: a caller that stacks mod*e_j
rows onto the input (so that mod * Z^n lies inside the lattice) may reduce all
off-pivot arithmetic symmetrically mod that value without changing the lattice.
"""

from __future__ import annotations

import numpy as np

from .forms import xgcd
from .primes import is_probable_prime


def _sym(v: int, m: int) -> int:
    v %= m
    if 2 * v > m:
        v -= m
    return v


def _symrow(row: list[int], m: int, keep: int = -1) -> list[int]:
    return [v if i == keep else _sym(v, m) for i, v in enumerate(row)]


def hnf_echelon(rows, ncols: int, mod: int | None = None,
                piv: dict[int, list[int]] | None = None) -> dict[int, list[int]]:
    """Upper echelon basis {pivot column -> row} of the lattice spanned by rows.

    Insertion-based: each incoming row is combined (via extended gcd, a
    determinant -1 transform) against existing pivot rows left to right until
    it either lands on a free pivot column or vanishes.  Passing a `piv` from
    an earlier call continues that echelon with more rows (the modulus may
    differ between calls as long as each one is valid for the lattice built so
    far, e.g. the determinant of an already full-rank echelon).
    """
    if piv is None:
        piv = {}
    for row in rows:
        r = list(row)
        assert len(r) == ncols
        col = 0
        while col < ncols:
            if r[col] == 0:
                col += 1
                continue
            p = piv.get(col)
            if p is None:
                if r[col] < 0:
                    r = [-v for v in r]
                piv[col] = r
                break
            a, b = p[col], r[col]
            if b % a == 0:
                q = b // a
                r = [y - q * x for x, y in zip(p, r)]
            else:
                g, u, v = xgcd(a, b)
                ma, mb = a // g, b // g
                newp = [u * x + v * y for x, y in zip(p, r)]
                r = [mb * x - ma * y for x, y in zip(p, r)]
                piv[col] = _symrow(newp, mod, keep=col) if mod else newp
            if mod:
                r = _symrow(r, mod)
        # fallthrough without break: row reduced to zero, nothing to install
    return piv


# Word-size primes for modular determinants, extended on demand.  Fixed and
# descending so runs are reproducible; below 2^31 keeps residue products in
# int64 range for the vectorized eliminations.
_DET_PRIMES = [2147483647]


def _det_prime(k: int) -> int:
    c = _DET_PRIMES[-1]
    while len(_DET_PRIMES) <= k:
        c -= 2
        if is_probable_prime(c):
            _DET_PRIMES.append(c)
    return _DET_PRIMES[k]


def _full_rank_subset(rows, ncols: int, p: int) -> list[int] | None:
    """Indices of rows forming a full-column-rank square block mod p.

    Streams rows through an echelon of normalized pivot rows (one slot per
    column) and stops as soon as ncols of them are independent, so memory
    stays at one ncols x ncols block however many rows the caller has.  A
    row dependent on the pivots so far reduces to zero; on a full-rank input
    only a handful of those appear before the rank completes, so a generous
    cap on them cheaply bounds the damage of a rank-deficient input (the
    caller treats None as deficient and the certificate window downstream
    catches any false alarm by forcing a retry).
    """
    if len(rows) < ncols:
        return None
    piv = np.zeros((ncols, ncols), dtype=np.int64)
    have = np.zeros(ncols, dtype=bool)
    sel: list[int] = []
    zeros = 0
    for i, r in enumerate(rows):
        v = np.zeros(ncols, dtype=np.int64)
        for c, val in r.items():
            v[c] = val % p
        while True:
            nz = v.nonzero()[0]
            if nz.size == 0:
                zeros += 1
                break
            j = int(nz[0])
            if not have[j]:
                piv[j] = v * pow(int(v[j]), p - 2, p) % p
                have[j] = True
                sel.append(i)
                break
            v = (v - int(v[j]) * piv[j]) % p
        if len(sel) == ncols:
            return sel
        if zeros > 256 + 4 * ncols:
            return None
    return None


def _det_mod(sel_rows, ncols: int, p: int) -> int:
    a = np.zeros((ncols, ncols), dtype=np.int64)
    for i, r in enumerate(sel_rows):
        for c, v in r.items():
            a[i, c] = v % p
    det = 1
    for col in range(ncols):
        hits = a[col:, col].nonzero()[0]
        if hits.size == 0:
            return 0
        piv = col + int(hits[0])
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            det = -det
        v = int(a[col, col])
        det = det * v % p
        inv = pow(v, p - 2, p)
        a[col, col:] = a[col, col:] * inv % p
        lead = a[col + 1:, col]
        nz = lead.nonzero()[0]
        if nz.size:
            a[col + 1 + nz, col:] = (
                a[col + 1 + nz, col:] - lead[nz, None] * a[col, col:]) % p
    return det % p


def lattice_det_multiple(rows, ncols: int) -> int | None:
    """|det| of one full-rank square subset of sparse rows, or None.

    Exact via CRT over word-size modular determinants (prime count set by the
    Hadamard bound).  Any such determinant d is a positive multiple of the row
    lattice's determinant with d * Z^n contained in the lattice (adjugate
    identity), which makes it a valid working modulus for an echelon of the
    full row set.
    """
    sel = None
    for k in range(2):
        sel = _full_rank_subset(rows, ncols, _det_prime(k))
        if sel is not None:
            first = k
            break
    if sel is None:
        return None
    sel_rows = [rows[i] for i in sel]
    h2 = 1  # squared Hadamard bound
    for r in sel_rows:
        h2 *= sum(v * v for v in r.values())
    x, mprod = 0, 1
    k = first
    while mprod * mprod <= 4 * h2:
        p = _det_prime(k)
        k += 1
        r_p = _det_mod(sel_rows, ncols, p)
        t = (r_p - x) * pow(mprod % p, p - 2, p) % p
        x += mprod * t
        mprod *= p
    if 2 * x > mprod:
        x -= mprod  # symmetric lift: |det| below half the prime product
    assert x != 0
    return abs(x)


def hnf_normalize(piv: dict[int, list[int]]) -> None:
    """Reduce entries above each pivot into [0, pivot); canonicalizes in place.

    Safe to run columns ascending: echelon rows with a later pivot are zero on
    earlier columns, so finished entries are never dirtied again.
    """
    for col in sorted(piv):
        prow = piv[col]
        d = prow[col]
        for other in piv:
            if other < col and piv[other][col]:
                q = piv[other][col] // d
                if q:
                    piv[other] = [x - q * y for x, y in zip(piv[other], prow)]


def snf_diagonal(mat) -> list[int]:
    """Nonzero invariant factors d_1 | d_2 | ... of an integer matrix.

    Textbook Smith reduction with smallest-pivot selection; fine for the small
    dense blocks this package feeds it.  The list length is the rank (trailing
    zero divisors are not represented); unit divisors are kept so callers can
    detect rank deficiency by comparing len() against the expected dimension.
    """
    a = [list(r) for r in mat]
    if not a or not a[0]:
        return []
    n, m = len(a), len(a[0])
    res = []
    t = 0
    while t < n and t < m:
        best = None
        for i in range(t, n):
            for j in range(t, m):
                v = a[i][j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        if best is None:
            break
        _, i0, j0 = best
        a[t], a[i0] = a[i0], a[t]
        for r_ in a:
            r_[t], r_[j0] = r_[j0], r_[t]
        while True:
            changed = False
            for i in range(t + 1, n):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    if q:
                        a[i] = [x - q * y for x, y in zip(a[i], a[t])]
                    if a[i][t]:
                        a[t], a[i] = a[i], a[t]
                        changed = True
            for j in range(t + 1, m):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    if q:
                        for r_ in a:
                            r_[j] -= q * r_[t]
                    if a[t][j]:
                        for r_ in a:
                            r_[t], r_[j] = r_[j], r_[t]
                        changed = True
            if not changed:
                break
        piv = abs(a[t][t])
        offender = None
        for i in range(t + 1, n):
            if any(a[i][j] % piv for j in range(t + 1, m)):
                offender = i
                break
        if offender is not None:
            a[t] = [x + y for x, y in zip(a[t], a[offender])]
            continue
        res.append(piv)
        t += 1
    return res


def rank(mat, ncols: int) -> int:
    return len(hnf_echelon(mat, ncols))
