import sys, math, random
sys.path.insert(0, "src")
from classgroup.classnumber import (HStarBound, WindowViolation, hstar,
                                    minimal_denominator, class_number,
                                    essential_hnf, snf, group_structure)
from classgroup.relations import RelationMatrix
from classgroup.oracle import class_number as oracle_h, group_structure as oracle_g
from classgroup.intmat import hnf_echelon, hnf_normalize

# hstar windows on oracle-checkable discriminants
for d in (-3, -4, -7, -8, -15, -23, -47, -71, -10007, -4 * (10**6 + 1), -(10**6 + 3)):
    hs = hstar(d, 1 << 13)
    h = oracle_h(d)
    assert hs.hstar <= h < 2 * hs.hstar, (d, hs.hstar, h)
print("hstar windows OK (including h=2 at -15)")
hs23 = hstar(-23, 10**6)
assert hs23.hstar in (2, 3), hs23

# minimal_denominator frozen examples
assert minimal_denominator([[1, 0], [0, 6]]) == 6
assert minimal_denominator([[1, 0, 3]]) == 1
assert minimal_denominator([[1, 0], [0, 1]]) == 1
try:
    minimal_denominator([[1, 1], [2, 2]])
    raise SystemExit("rank deficiency not caught")
except ValueError:
    pass
print("minimal_denominator OK")

# class_number diagonal example + full-product semantics
m = RelationMatrix(3)
m.add_row({0: 2}); m.add_row({1: 3}); m.add_row({2: 1})
h, hs_list = class_number(m, HStarBound(4, 100, 0.29))
assert h == 6 and hs_list == [2, 3, 1]
# parallel mode identical
h2, hs_list2 = class_number(m, HStarBound(4, 100, 0.29), parallel=True)
assert (h2, hs_list2) == (h, hs_list)

# injected index-2 sublattice -> window violation
m2 = RelationMatrix(3)
m2.add_row({0: 2}); m2.add_row({1: 3}); m2.add_row({2: 2})
try:
    class_number(m2, HStarBound(4, 100, 0.29))
    raise SystemExit("window violation not raised")
except WindowViolation:
    pass
print("class_number OK")

# essential_hnf vs direct dense HNF on random small full-rank matrices
rng = random.Random(9)
for trial in range(40):
    n = rng.randint(2, 6)
    nr = n + rng.randint(0, 3)
    rows = []
    mm = RelationMatrix(n)
    for _ in range(nr):
        row = {c: rng.randint(-4, 4) for c in range(n)}
        row = {c: v for c, v in row.items() if v}
        if row:
            mm.add_row(row)
    piv = hnf_echelon(mm.dense_rows(), n)
    if len(piv) < n:
        continue
    dets = math.prod(piv[i][i] for i in range(n))
    if dets == 0:
        continue
    hnf_normalize(piv)
    live = [j for j in range(n) if piv[j][j] != 1]
    expect = [[piv[i][j] for j in live] for i in live]
    got = essential_hnf(mm, dets)
    assert got == expect, (trial, got, expect)
print("essential vs dense HNF OK")

# snf examples
g = snf([[3]]); assert g.divisors == (3,) and g.h == 3
g = snf([[2, 0], [0, 4]]); assert g.divisors == (2, 4)
g = snf([[2, 0], [0, 3]]); assert g.divisors == (6,) and g.h == 6
try:
    snf([[2, 4], [1, 2]])
    raise SystemExit("singular essential accepted")
except ValueError:
    pass
print("snf OK")

# end-to-end pipeline vs oracle
for d in (-23, -4, -3, -47, -84, -163, -407, -10007, -4 * (10**6 + 1)):
    rep = {}
    g = group_structure(d, seed=3, report=rep)
    og = oracle_g(d)
    assert list(g.divisors) == og, (d, g.divisors, og)
    print(f"  delta={d}: Cl = {g} (h={g.h}) "
          f"retries={rep.get('retries')} fb={rep.get('fb_size')}")
print("pipeline vs oracle OK")
