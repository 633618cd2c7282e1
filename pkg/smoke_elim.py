import sys, random
sys.path.insert(0, "src")
from classgroup.relations import RelationMatrix
from classgroup.elimination import (CostParams, EliminationError, cost, pivot,
                                    merge_column, run, _pivot_full)
from classgroup.intmat import snf_diagonal

P = CostParams()
assert cost({0: 1, 1: -2, 2: 9}, P) == 102
assert cost({}, P) == 0
assert cost({0: 8, 1: -8}, P) == 2
print("cost OK")

# pivot frozen examples
r = pivot({0: 1, 1: 2}, {0: 1, 2: 5}, 0)
assert r == {1: 2, 2: -5}, r
r = pivot({0: 2, 1: 1}, {0: 3, 1: 1}, 0)
assert r == {1: 1}, r
r = pivot({0: 2, 1: 1}, {0: 2, 1: 1}, 0)
assert r == {}, r
print("pivot OK")

# k=2 unit merge: one row and the column removed
m = RelationMatrix(3)
m.add_row({0: 1, 1: 2})
m.add_row({0: -1, 2: 3})
m2 = merge_column(m, 0)
assert m2.nrows == 1 and m2.ncols == 2, (m2.nrows, m2.ncols)
assert m2.rows[0] == {0: 2, 1: 3}, m2.rows  # 2x + 3y, sign-normalized
print("k=2 merge OK")

# k=3 with pairwise pivot costs 5, 7, 9: MST total 12, surviving rows cost 5 and 7
m = RelationMatrix(11)
m.add_row({0: 1, 1: 1, 2: 1})                          # w=2 tail
m.add_row({0: 1, 2: 3, 3: 1, 4: 1, 5: 1})              # w=4 tail
m.add_row({0: 1, 1: 3, 3: 2, 6: 1, 7: 1, 8: 1, 9: 1})  # w=6 tail
r01 = pivot(m.rows[0], m.rows[1], 0)
r02 = pivot(m.rows[0], m.rows[2], 0)
r12 = pivot(m.rows[1], m.rows[2], 0)
assert (cost(r01, P), cost(r02, P), cost(r12, P)) == (5, 7, 9)
m3 = merge_column(m, 0)
assert m3.nrows == 2 and m3.ncols == 10
costs = sorted(cost(r, P) for r in m3.rows)
assert costs == [5, 7], costs
print("k=3 MST merge OK")

# weight-1 column with non-unit entry: retained, marked unmergeable
m = RelationMatrix(2)
m.add_row({0: 2, 1: 1})
m.add_row({1: 3})
m4 = merge_column(m, 0)
assert m4.ncols == 2 and m4.nrows == 2  # nothing removed
print("non-unit k=1 retention OK")

# run: every column weight > w level => output = input
m = RelationMatrix(2)
for _ in range(3):
    m.add_row({0: 1, 1: 1})
    m.add_row({0: 1, 1: -1})
out, st = run(m, CostParams(w=2, stride=1))
assert out.nrows == m.nrows and out.ncols == m.ncols
assert [dict(r) for r in out.rows] == [dict(r) for r in m.rows]
print("no-op run OK")

# SNF divisor-chain preservation: unimodular merges plus unit-pivot
# column removal must keep the full chain when nothing is discarded.
rng = random.Random(5)
checked = 0
for trial in range(60):
    nr, nc = 9, 6
    m = RelationMatrix(nc)
    for _ in range(nr):
        row = {}
        for c in range(nc):
            if rng.random() < 0.5:
                row[c] = rng.choice([-2, -1, -1, 1, 1, 2])
        if row:
            m.add_row(row)
    div0 = snf_diagonal(m.dense_rows())
    if len(div0) < nc:
        continue  # not full column rank; skip
    try:
        out, st = run(m, CostParams(k_discard=0), margin=0)
    except EliminationError:
        continue
    div1 = snf_diagonal(out.dense_rows()) if out.rows else []
    assert len(div1) == out.ncols, (trial, div1, out.ncols)
    assert [1] * (nc - out.ncols) + div1 == div0, (trial, div0, div1)
    checked += 1
print(f"SNF preservation OK ({checked} full-rank cases)")
print("elimination module OK")
