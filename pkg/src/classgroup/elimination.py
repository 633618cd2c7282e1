"""Structured Gaussian elimination over Z with coefficient-aware pivoting.

Columns are eliminated lightest-first in sweeps of growing weight budget.
The rows incident to a column form a complete graph whose edge labels are
the cost of the pivoted (combined) row; cost counts entries of magnitude
<= Q once and heavier entries c times, so pivot choices that blow up
coefficients are penalized.  Recombining along a minimum spanning tree of
that graph, leaves first, eliminates the column: a child always pivots
against its parent's still-original row, so the total recombination cost is
exactly the sum of edge labels, which the MST minimizes.

Lattice hygiene: replacing only the child row by (c2/g) r1 - (c1/g) r2 is
unimodular just when c2/g is a unit, so when the parent's entry does not
divide the child's, the engine applies the full two-row transform
(child, parent) -> ((c2/g) child - (c1/g) parent,  x parent + y child)
with x c2 + y c1 = g, whose determinant is 1: the lattice is preserved
exactly and the parent's column entry drops to the gcd.  Cascading up the
tree leaves the root holding the gcd of the whole column, so the root row
and column can be dropped (a determinant-preserving substitution) whenever
that gcd is 1; columns with a nontrivial gcd are retained and marked
unmergeable.  Row discards are the one remaining lossy step, and the
class-number window downstream certifies against them.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from math import gcd

from .forms import xgcd
from .relations import RelationMatrix

log = logging.getLogger(__name__)


class EliminationError(Exception):
    """Row count fell below column count: not enough surplus relations."""


@dataclass(frozen=True, slots=True)
class CostParams:
    c: int = 100          # penalty multiplier for heavy entries
    q: int = 8            # magnitude threshold; |e| = Q is NOT penalized
    k_discard: int = 10   # rows discarded per sweep
    w: int = 120          # maximum merge level (column weight budget)
    stride: int = 10      # level increment per sweep

    def __post_init__(self):
        if self.c < 1 or self.q < 1 or self.k_discard < 0 or self.w < 1 \
                or self.stride < 1:
            raise ValueError("bad cost parameters")


@dataclass(slots=True)
class EliminationStats:
    records: list[tuple] = field(default_factory=list)  # (nrows, ncols, avg_w, max, min)
    merges: int = 0
    discarded: int = 0
    zero_rows: int = 0
    zero_cols: int = 0
    unmergeable: int = 0
    pair_transforms: int = 0  # two-row gcd steps (parent entry did not divide)

    def record(self, nrows, ncols, avg_weight, emax, emin):
        self.records.append((nrows, ncols, round(avg_weight, 2), emax, emin))

    def table(self) -> str:
        head = f"{'rows':>8} {'cols':>8} {'avg weight':>11} {'max':>12} {'min':>12}"
        lines = [head]
        for r in self.records:
            lines.append(f"{r[0]:>8} {r[1]:>8} {r[2]:>11} {r[3]:>12} {r[4]:>12}")
        return "\n".join(lines)


def cost(row: dict[int, int], params: CostParams) -> int:
    """C(r) = #{1 <= |e| <= Q} + c * #{|e| > Q}; stored entries are nonzero."""
    q, c = params.q, params.c
    return sum(1 if abs(e) <= q else c for e in row.values())


def pivot(r1: dict[int, int], r2: dict[int, int], col: int) -> dict[int, int]:
    """(c2/g) r1 - (c1/g) r2, gcd-reduced, first nonzero entry positive."""
    row, _ = _pivot_full(r1, r2, col)
    return row


def _pivot_full(r1, r2, col):
    c1, c2 = r1[col], r2[col]
    g = gcd(c1, c2)
    a, b = c2 // g, c1 // g
    out = {k: a * v for k, v in r1.items()}
    for k, v in r2.items():
        w = out.get(k, 0) - b * v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    assert col not in out
    if out and out[min(out)] < 0:
        out = {k: -v for k, v in out.items()}
    return out, a


def _combine(r1, r2, a, b):
    """a*r1 + b*r2 as a sparse row."""
    if a == 1:
        out = dict(r1)
    elif a:
        out = {k: a * v for k, v in r1.items()}
    else:
        out = {}
    for k, v in r2.items():
        w = out.get(k, 0) + b * v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def _pivot_cost(r1, r2, col, params, bound):
    """Cost and weight of pivot(r1, r2, col) without materializing it.

    Returns None as soon as the running cost reaches bound (cannot improve
    the current best MST candidate edge).
    """
    c1, c2 = r1[col], r2[col]
    g = gcd(c1, c2)
    a, b = c2 // g, c1 // g
    q, c = params.q, params.c
    total = 0
    weight = 0
    for k in r1.keys() | r2.keys():
        if k == col:
            continue
        v = a * r1.get(k, 0) - b * r2.get(k, 0)
        if v:
            weight += 1
            total += 1 if abs(v) <= q else c
            if bound is not None and total > bound:
                return None  # strict: equal-cost edges finish, for tie-breaks
    return total, weight


class _Elim:
    """Working state: rows by id, column incidence index, liveness sets."""

    def __init__(self, matrix: RelationMatrix, params: CostParams):
        self.params = params
        self.rows: dict[int, dict[int, int]] = {
            i: dict(r) for i, r in enumerate(matrix.rows)}
        self.col_rows: dict[int, set[int]] = {c: set() for c in range(matrix.ncols)}
        for i, row in self.rows.items():
            for c in row:
                self.col_rows[c].add(i)
        self.unmergeable: set[int] = set()
        self.stats = EliminationStats()
        self.heap: list[tuple[int, int]] = []  # (weight, col), lazily stale
        for c, rs in self.col_rows.items():
            heapq.heappush(self.heap, (len(rs), c))

    # -- bookkeeping ------------------------------------------------------

    def _touch(self, col):
        heapq.heappush(self.heap, (len(self.col_rows[col]), col))

    def remove_row(self, i):
        for c in self.rows[i]:
            self.col_rows[c].discard(i)
            self._touch(c)
        del self.rows[i]

    def replace_row(self, i, new):
        for c in self.rows[i]:
            self.col_rows[c].discard(i)
            self._touch(c)
        self.rows[i] = new
        for c in new:
            self.col_rows[c].add(i)
            self._touch(c)

    def remove_col(self, col):
        assert not self.col_rows[col]
        del self.col_rows[col]

    # -- the column merge -------------------------------------------------

    def merge_column(self, col) -> bool:
        """Eliminate col; returns True if the matrix changed."""
        params = self.params
        incident = sorted(self.col_rows[col])
        k = len(incident)
        if k == 0:
            self.remove_col(col)
            self.stats.zero_cols += 1
            return True
        if k == 1:
            i = incident[0]
            if abs(self.rows[i][col]) == 1:
                self.remove_row(i)
                self.remove_col(col)
                self.stats.merges += 1
                return True
            self.unmergeable.add(col)
            self.stats.unmergeable += 1
            return False

        # Prim's MST over the k incident rows; edge labels are pivot costs,
        # computed lazily with early exit at the current best for that node.
        rows = self.rows
        root = incident[0]
        in_tree = {root}
        parent = {root: None}
        best: dict[int, tuple] = {}  # node -> (cost, weight, via)
        last = root
        while len(in_tree) < k:
            for v in incident:
                if v in in_tree:
                    continue
                bound = best[v][0] if v in best else None
                lab = _pivot_cost(rows[last], rows[v], col, params, bound)
                if lab is not None:
                    key = (lab[0], lab[1], last)
                    if v not in best or key < best[v]:
                        best[v] = key
            pick = min((best[v], v) for v in incident
                       if v not in in_tree and v in best)
            _, v = pick
            parent[v] = best[v][2]
            in_tree.add(v)
            del best[v]
            last = v

        # children pivot before their parents (leaf-to-root), so every pivot
        # sees the parent's original row
        children: dict[int, list[int]] = {i: [] for i in incident}
        for v, u in parent.items():
            if u is not None:
                children[u].append(v)
        order = []
        stack = [root]
        while stack:
            u = stack.pop()
            order.append(u)
            stack.extend(children[u])
        for v in reversed(order):
            if v == root:
                continue
            u = parent[v]
            child, par = rows[v], rows[u]
            c1, c2 = child[col], par[col]
            new_child, _ = _pivot_full(child, par, col)
            if c1 % c2:
                # parent entry does not divide the child's: two-row gcd
                # transform (determinant 1); parent's entry drops to the gcd
                g, x, y = xgcd(c2, c1)
                self.replace_row(u, _combine(par, child, x, y))
                self.stats.pair_transforms += 1
            if new_child:
                self.replace_row(v, new_child)
            else:
                self.remove_row(v)
                self.stats.zero_rows += 1
        self.stats.merges += 1
        if abs(rows[root][col]) == 1:
            self.remove_row(root)
            self.remove_col(col)
        else:
            self.unmergeable.add(col)
            self.stats.unmergeable += 1
        return True

    # -- sweep driver -------------------------------------------------------

    def merge_level(self, level) -> int:
        """Merge columns of weight <= level, lightest first, to a fixpoint."""
        done = 0
        while self.heap:
            w, c = self.heap[0]
            if c not in self.col_rows or c in self.unmergeable \
                    or w != len(self.col_rows[c]):
                heapq.heappop(self.heap)  # stale or retired entry
                continue
            if w > level:
                break
            heapq.heappop(self.heap)
            if self.merge_column(c):
                done += 1
            if len(self.rows) < len(self.col_rows):
                raise EliminationError(
                    f"{len(self.rows)} rows < {len(self.col_rows)} columns: "
                    "surplus exhausted, collect more relations")
        return done

    def discard_rows(self, margin, archive) -> int:
        k = self.params.k_discard
        floor = len(self.col_rows) + margin
        if k == 0 or len(self.rows) - k < floor:
            return 0
        ranked = sorted(self.rows.items(),
                        key=lambda kv: (-max(abs(v) for v in kv[1].values()),
                                        kv[0]))
        dropped = 0
        for i, row in ranked:
            if dropped == k:
                break
            if any(len(self.col_rows[c]) == 1 for c in row):
                continue  # sole support of a column: dropping kills rank
            if archive is not None:
                archive.append(dict(row))
            self.remove_row(i)
            dropped += 1
        self.stats.discarded += dropped
        return dropped

    def snapshot_stats(self):
        nr = len(self.rows)
        nc = len(self.col_rows)
        nz = sum(len(r) for r in self.rows.values())
        vals = [v for r in self.rows.values() for v in r.values()]
        self.stats.record(nr, nc, nz / nr if nr else 0.0,
                          max(vals, default=0), min(vals, default=0))

    def to_matrix(self) -> RelationMatrix:
        cols = sorted(self.col_rows)
        remap = {c: j for j, c in enumerate(cols)}
        out = RelationMatrix(len(cols))
        for i in sorted(self.rows):
            out.add_row({remap[c]: v for c, v in self.rows[i].items()})
        return out


def merge_column(matrix: RelationMatrix, col: int,
                 params: CostParams = CostParams()) -> RelationMatrix:
    """Single-column elimination on a copy; the sweep driver does this in bulk."""
    st = _Elim(matrix, params)
    st.merge_column(col)
    return st.to_matrix()


def run(matrix: RelationMatrix, params: CostParams = CostParams(),
        margin: int = 4, archive: list | None = None
        ) -> tuple[RelationMatrix, EliminationStats]:
    """Full elimination schedule: sweeps of k-way merges plus row discard.

    Sweep i merges all columns of current weight <= stride*i (re-scanning as
    weights drop into range), then discards the k_discard rows with the
    largest coefficient magnitudes, provided the row surplus over
    ncols + margin allows it and the sweep did any work at all.  Rows that
    are the sole support of a column are never discarded.  Discarded rows
    are appended to `archive` when given.
    """
    st = _Elim(matrix, params)
    st.snapshot_stats()
    for i in range(1, params.w // params.stride + 1):
        merged = st.merge_level(params.stride * i)
        if merged:
            st.discard_rows(margin, archive)
            st.snapshot_stats()
    log.info("elimination: %d merges, %d discards, %d unmergeable, "
             "%d pair transforms", st.stats.merges, st.stats.discarded,
             st.stats.unmergeable, st.stats.pair_transforms)
    return st.to_matrix(), st.stats
