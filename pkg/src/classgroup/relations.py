"""Sparse integer relation matrix with large-prime column management.

Each relation row maps column indices to exponents.  Factor-base primes own
the first `nbase` columns; large primes get fresh columns appended in order of
first appearance, so ncols = nbase + #distinct large primes seen.  Rows are
deduplicated by a canonical key built from the relation content (not the
column numbering), which keeps the accepted set independent of worker
scheduling during collection.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class RankCertificate:
    rank: int
    prime: int


# Fixed word-size primes for modular rank checks: deterministic runs matter
# more here than adversarial robustness, and the h* window is the final
# safety net.  Both sit below 2^31 so products of two residues fit in int64,
# which lets the full-rank test run on dense numpy blocks.
_RANK_PRIMES = (2147483647, 2130706433)


class DuplicateRelation(Exception):
    pass


class RelationMatrix:
    def __init__(self, nbase: int):
        self.nbase = nbase
        self.ncols = nbase
        self.lp_col: dict[int, int] = {}
        self.col_prime: dict[int, int] = {}
        self.rows: list[dict[int, int]] = []
        self.keys: set = set()
        self.col_weight: list[int] = [0] * nbase

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @staticmethod
    def relation_key(relation) -> tuple:
        return (tuple(sorted(relation.exponents.items())),
                tuple(sorted(relation.large_primes)))

    def add(self, relation) -> bool:
        """Append a relation row; returns False (no-op) on a duplicate."""
        key = self.relation_key(relation)
        if key in self.keys:
            return False
        row: dict[int, int] = {i: e for i, e in relation.exponents.items() if e}
        for p, sign in relation.large_primes:
            col = self.lp_col.get(p)
            if col is None:
                col = self.ncols
                self.lp_col[p] = col
                self.col_prime[col] = p
                self.ncols += 1
                self.col_weight.append(0)
            row[col] = row.get(col, 0) + sign
        row = {c: v for c, v in row.items() if v}
        if not row:
            return False  # trivial relation carries no information
        self.keys.add(key)
        self.rows.append(row)
        for c in row:
            self.col_weight[c] += 1
        return True

    def add_row(self, row: dict[int, int]) -> None:
        """Low-level append of an already-columned sparse row (no dedup key)."""
        row = {c: v for c, v in row.items() if v}
        assert row and max(row) < self.ncols
        self.rows.append(row)
        for c in row:
            self.col_weight[c] += 1

    def dense_rows(self) -> list[list[int]]:
        out = []
        for r in self.rows:
            dense = [0] * self.ncols
            for c, v in r.items():
                dense[c] = v
            out.append(dense)
        return out

    def rebuild_col_weights(self) -> list[int]:
        w = [0] * self.ncols
        for r in self.rows:
            for c in r:
                w[c] += 1
        return w

    def rank_mod_p(self, p: int | None = None) -> RankCertificate:
        """Rank over F_p by sparse echelon insertion."""
        if p is None:
            p = _RANK_PRIMES[0]
        piv: dict[int, dict[int, int]] = {}
        rank = 0
        for row in self.rows:
            r = {c: v % p for c, v in row.items() if v % p}
            while r:
                c = min(r)
                lead = piv.get(c)
                if lead is None:
                    inv = pow(r[c], p - 2, p)
                    piv[c] = {k: v * inv % p for k, v in r.items()}
                    rank += 1
                    break
                mult = r[c]
                nr = dict(r)
                for k, lv in lead.items():
                    v = (nr.get(k, 0) - mult * lv) % p
                    if v:
                        nr[k] = v
                    else:
                        nr.pop(k, None)
                r = nr
        return RankCertificate(rank, p)

    def purged(self) -> "RelationMatrix":
        """Copy without rows hanging off unusable large-prime columns.

        Three kinds of large-prime column never survive:

        * weight 1 with a +-1 entry: the row only defines that prime's class
          in terms of the others, so dropping row and column together is the
          same lattice surgery the eliminator would perform;
        * entries sharing a common factor g > 1: such rows only ever pin the
          g-th power of the prime's class (typically a repeated large prime
          from a residue p^2, entry +-2), forcing a spurious index-g
          sublattice that no amount of rank checking detects;
        * columns in an ungrounded component of the large-prime graph.  Rows
          with two odd large-prime entries are edges, rows with exactly one
          tie their prime to the factor base (ground).  A component that
          never reaches ground (the typical case is one cofactor pair p*q
          resurfacing with independent sign choices) leaves its classes
          pinned only up to a joint twist, an index-2 defect per component
          that is invisible mod p, so all its rows go.

        The rules cascade until stable.  Columns no row touches at all are
        retired too (nothing constrains them; the h* window downstream
        catches the rare case where a dropped prime was actually needed to
        generate the group).
        """
        rows = self.rows
        col_rows: dict[int, set[int]] = {}
        for ri, row in enumerate(rows):
            for c in row:
                if c >= self.nbase:
                    col_rows.setdefault(c, set()).add(ri)
        alive = set(range(len(rows)))
        dead_cols: set[int] = set()
        queue = list(col_rows)

        def kill_row(ri):
            alive.discard(ri)
            for k in rows[ri]:
                if k >= self.nbase and k not in dead_cols:
                    col_rows[k].discard(ri)
                    queue.append(k)

        while True:
            while queue:
                c = queue.pop()
                if c in dead_cols:
                    continue
                rs = col_rows[c]
                if not rs:
                    dead_cols.add(c)
                    continue
                g = math.gcd(*(rows[ri][c] for ri in rs))
                if len(rs) == 1 and g == 1:
                    dead_cols.add(c)
                    kill_row(next(iter(rs)))
                elif g > 1:
                    dead_cols.add(c)
                    for ri in list(rs):
                        kill_row(ri)

            parent: dict[int, int] = {}

            def find(x):
                while parent.setdefault(x, x) != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            grounded: set[int] = set()
            odd_lp: dict[int, list[int]] = {}
            for ri in alive:
                s = [c for c in rows[ri]
                     if c >= self.nbase and c not in dead_cols
                     and rows[ri][c] % 2]
                odd_lp[ri] = s
                if len(s) == 1:
                    grounded.add(find(s[0]))
                elif len(s) == 2:
                    a, b = find(s[0]), find(s[1])
                    if a != b:
                        parent[a] = b
                        if a in grounded:
                            grounded.add(b)
            drops = [ri for ri in alive
                     if odd_lp[ri] and find(odd_lp[ri][0]) not in grounded]
            if not drops:
                break
            for ri in drops:
                kill_row(ri)
        used: set[int] = set()
        for ri in alive:
            used.update(self.rows[ri])
        keep = [c for c in range(self.ncols)
                if c in used and c not in dead_cols]
        remap = {c: i for i, c in enumerate(keep)}
        out = RelationMatrix(sum(1 for c in keep if c < self.nbase))
        for c in keep:
            if c >= self.nbase:
                p = self.col_prime[c]
                out.lp_col[p] = out.ncols
                out.col_prime[out.ncols] = p
                out.ncols += 1
                out.col_weight.append(0)
        for ri in sorted(alive):
            out.add_row({remap[c]: v for c, v in self.rows[ri].items()})
        return out


def _rank_dense_mod(a: np.ndarray, p: int) -> int:
    """Row echelon rank of an int64 matrix with entries in [0, p)."""
    m, n = a.shape
    rank = 0
    for col in range(n):
        hits = a[rank:, col].nonzero()[0]
        if hits.size == 0:
            continue
        piv = rank + int(hits[0])
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        inv = pow(int(a[rank, col]), p - 2, p)
        a[rank, col:] = a[rank, col:] * inv % p
        lead = a[rank + 1:, col]
        nz = lead.nonzero()[0]
        if nz.size:
            a[rank + 1 + nz, col:] = (
                a[rank + 1 + nz, col:] - lead[nz, None] * a[rank, col:]) % p
        rank += 1
        if rank == m:
            break
    return rank


# Largest dense block the full-rank test will allocate (int64 entries).
_DENSE_CAP = 30_000_000


def _full_rank_mod(matrix: RelationMatrix, p: int) -> bool | None:
    """Full-column-rank test mod p, sized for thousands of columns.

    Columns of weight 1 are struck out with their row, which never changes
    whether the matrix has full column rank; columns of weight 2 are peeled
    by one modular row combination (an elementary operation, rank exact) and
    then struck the same way.  Both cascade.  The surviving core is
    eliminated densely.  A core too large for a dense block returns None:
    inconclusive, the caller decides how optimistic to be.
    """
    rows_p: list[dict[int, int] | None] = [
        {c: v % p for c, v in r.items() if v % p} for r in matrix.rows]
    col_rows: dict[int, set[int]] = {c: set() for c in range(matrix.ncols)}
    for i, r in enumerate(rows_p):
        if not r:
            rows_p[i] = None  # relation vanished mod p, useless here
            continue
        for c in r:
            col_rows[c].add(i)
    queue = [c for c, s in col_rows.items() if len(s) <= 2]
    dead_cols: set[int] = set()

    def drop_row(i):
        for k in rows_p[i]:
            if k not in dead_cols:
                col_rows[k].discard(i)
                if len(col_rows[k]) <= 2:
                    queue.append(k)
        rows_p[i] = None

    while queue:
        c = queue.pop()
        if c in dead_cols or len(col_rows[c]) > 2:
            continue
        rs = col_rows[c]
        if not rs:
            return False  # live column with no support: rank deficient
        if len(rs) == 2:
            r1, r2 = sorted(rs, key=lambda i: len(rows_p[i]))
            mult = rows_p[r2][c] * pow(rows_p[r1][c], p - 2, p) % p
            new = dict(rows_p[r2])
            for k, v in rows_p[r1].items():
                w = (new.get(k, 0) - mult * v) % p
                if w:
                    new[k] = w
                elif k in new:
                    del new[k]
                    if k not in dead_cols and k != c:
                        col_rows[k].discard(r2)
                        if len(col_rows[k]) <= 2:
                            queue.append(k)
            for k in new:
                if k not in dead_cols and k not in rows_p[r2]:
                    col_rows[k].add(r2)
            # an empty combination means r2 was proportional to r1: it dies
            # as a redundant zero row, which says nothing about other columns
            rows_p[r2] = new if new else None
        else:
            (r1,) = rs
        dead_cols.add(c)
        col_rows[c] = set()
        drop_row(r1)
    live_cols = [c for c in range(matrix.ncols)
                 if c not in dead_cols and col_rows[c]]
    if len(live_cols) < matrix.ncols - len(dead_cols):
        return False  # some live column lost its support entirely
    n = len(live_cols)
    if n == 0:
        return True
    live_rows = [i for i, r in enumerate(rows_p) if r]
    if len(live_rows) < n:
        return False
    if len(live_rows) * n > _DENSE_CAP:
        return None
    remap = {c: j for j, c in enumerate(live_cols)}
    a = np.zeros((len(live_rows), n), dtype=np.int64)
    for k, i in enumerate(live_rows):
        for c, v in rows_p[i].items():
            a[k, remap[c]] = v
    return _rank_dense_mod(a, p) == n


def enough_relations(matrix: RelationMatrix, fb_size: int,
                     surplus: int | None = None) -> bool:
    """Full column rank (modular certificate) plus a row surplus."""
    if surplus is None:
        surplus = default_surplus(matrix.ncols)
    if matrix.nrows < matrix.ncols + surplus:
        return False
    for p in _RANK_PRIMES:
        verdict = _full_rank_mod(matrix, p)
        if verdict is None:
            # core too large for a dense block; the surplus already passed
            # and the class-number window is the sound check downstream
            log.warning("rank gate inconclusive at %dx%d, trusting surplus",
                        matrix.nrows, matrix.ncols)
            return True
        if verdict:
            return True
        # a deficient rank may be a mod-p accident; try the other prime
    return False


def default_surplus(ncols: int) -> int:
    return max(20, -(-ncols // 10))


def write_snapshot(matrix: RelationMatrix, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"{matrix.nrows} {matrix.ncols}\n")
        for i, row in enumerate(matrix.rows):
            for c in sorted(row):
                fh.write(f"{i} {c} {row[c]}\n")


def read_snapshot(path: str) -> RelationMatrix:
    with open(path) as fh:
        nrows, ncols = map(int, fh.readline().split())
        rows: list[dict[int, int]] = [dict() for _ in range(nrows)]
        for line in fh:
            if not line.strip():
                continue
            r, c, v = line.split()
            rows[int(r)][int(c)] = int(v)
    out = RelationMatrix(ncols)
    for r in rows:
        if r:
            out.add_row(r)
    return out
