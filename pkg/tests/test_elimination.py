"""Structured elimination: cost model, MST pivoting, lattice preservation."""

import itertools
import random

import pytest

from classgroup.elimination import (
    CostParams, EliminationError, cost, merge_column, pivot, run,
)
from classgroup.intmat import snf_diagonal
from classgroup.relations import RelationMatrix

P = CostParams()


def test_cost_params_validation():
    for bad in (dict(c=0), dict(q=0), dict(k_discard=-1), dict(w=0),
                dict(stride=0)):
        with pytest.raises(ValueError):
            CostParams(**bad)


def test_cost_examples():
    assert cost({0: 1, 1: -2, 2: 9}, P) == 102  # two light, one heavy
    assert cost({}, P) == 0
    assert cost({0: 8, 1: -8}, P) == 2  # |e| = Q is not penalized


def test_pivot_examples():
    r = pivot({0: 1, 1: 2}, {0: 1, 2: 5}, 0)
    assert r == {1: 2, 2: -5}
    r = pivot({0: 2, 1: 1}, {0: 3, 1: 1}, 0)
    assert r == {1: 1}  # 3*(2,1) - 2*(3,1)
    assert pivot({0: 2, 1: 1}, {0: 2, 1: 1}, 0) == {}


def test_pivot_sign_normalization():
    r = pivot({0: 1, 1: -3}, {0: 1, 1: 2}, 0)
    assert r[min(r)] > 0


def test_merge_k2_unit():
    m = RelationMatrix(3)
    m.add_row({0: 1, 1: 2})
    m.add_row({0: -1, 2: 3})
    out = merge_column(m, 0)
    assert out.nrows == 1 and out.ncols == 2
    assert out.rows[0] == {0: 2, 1: 3}


def test_merge_k3_mst():
    # pairwise pivot costs 5, 7, 9: the 9 edge loses, survivors cost 5 and 7
    m = RelationMatrix(11)
    m.add_row({0: 1, 1: 1, 2: 1})
    m.add_row({0: 1, 2: 3, 3: 1, 4: 1, 5: 1})
    m.add_row({0: 1, 1: 3, 3: 2, 6: 1, 7: 1, 8: 1, 9: 1})
    labels = sorted(cost(pivot(m.rows[i], m.rows[j], 0), P)
                    for i, j in ((0, 1), (0, 2), (1, 2)))
    assert labels == [5, 7, 9]
    out = merge_column(m, 0)
    assert out.nrows == 2 and out.ncols == 10
    assert sorted(cost(r, P) for r in out.rows) == [5, 7]


def _mst_total(k, labels):
    edges = list(labels)
    best = None
    for tree in itertools.combinations(edges, k - 1):
        parent = list(range(k))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for i, j, _ in tree:
            a, b = find(i), find(j)
            if a == b:
                acyclic = False
                break
            parent[a] = b
        if acyclic:
            total = sum(w for _, _, w in tree)
            if best is None or total < best:
                best = total
    return best


def test_merge_matches_brute_force_mst():
    # with unit entries in the merge column every pivot is a plain
    # subtraction against an original row, so the survivors' total cost
    # must equal the minimum spanning tree weight exactly
    rng = random.Random(7)
    for _ in range(40):
        k = rng.randint(3, 6)
        m = RelationMatrix(12)
        for _ in range(k):
            row = {0: rng.choice([-1, 1])}
            for c in rng.sample(range(1, 12), rng.randint(2, 5)):
                row[c] = rng.choice([-9, -3, -1, 1, 3, 9])
            m.add_row(row)
        labels = [(i, j, cost(pivot(m.rows[i], m.rows[j], 0), P))
                  for i in range(k) for j in range(i + 1, k)]
        want = _mst_total(k, labels)
        out = merge_column(m, 0)
        assert sum(cost(r, P) for r in out.rows) == want


def test_weight1_nonunit_column_retained():
    m = RelationMatrix(2)
    m.add_row({0: 2, 1: 1})
    m.add_row({1: 3})
    out = merge_column(m, 0)
    assert out.nrows == 2 and out.ncols == 2


def test_run_noop_above_weight_budget():
    m = RelationMatrix(2)
    for _ in range(3):
        m.add_row({0: 1, 1: 1})
        m.add_row({0: 1, 1: -1})
    out, stats = run(m, CostParams(w=2, stride=1))
    assert out.nrows == m.nrows and out.ncols == m.ncols
    assert [dict(r) for r in out.rows] == [dict(r) for r in m.rows]
    assert stats.merges == 0


def test_run_raises_when_surplus_exhausted():
    m = RelationMatrix(2)
    m.add_row({0: 1, 1: 1})
    m.add_row({0: 1, 1: 1})
    with pytest.raises(EliminationError):
        run(m)


def test_discard_skips_sole_support_rows():
    m = RelationMatrix(4)
    m.add_row({0: 1, 1: 1})       # weight-1 unit column: triggers a merge
    m.add_row({1: 999, 3: 2})     # heaviest, but col 3 has no other row
    for top in (9, 8, 7, 6, 5):
        m.add_row({1: top, 2: 1})
    archive = []
    out, stats = run(m, CostParams(w=1, stride=1, k_discard=2),
                     margin=0, archive=archive)
    assert stats.discarded == 2
    assert sorted(max(abs(v) for v in r.values()) for r in archive) == [8, 9]
    assert any(999 in map(abs, r.values()) for r in out.rows)


def test_snf_chain_preserved_without_discard():
    # unimodular merges plus unit-pivot column drops must keep the full
    # elementary divisor chain when no rows are thrown away
    rng = random.Random(5)
    checked = 0
    for _ in range(60):
        nc = 6
        m = RelationMatrix(nc)
        for _ in range(9):
            row = {c: rng.choice([-2, -1, -1, 1, 1, 2])
                   for c in range(nc) if rng.random() < 0.5}
            if row:
                m.add_row(row)
        div0 = snf_diagonal(m.dense_rows())
        if len(div0) < nc:
            continue
        try:
            out, _ = run(m, CostParams(k_discard=0), margin=0)
        except EliminationError:
            continue
        div1 = snf_diagonal(out.dense_rows()) if out.rows else []
        assert len(div1) == out.ncols
        assert [1] * (nc - out.ncols) + div1 == div0
        checked += 1
    assert checked >= 20
