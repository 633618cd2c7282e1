import sys
sys.path.insert(0, "src")
from classgroup.forms import build_factor_base, Form, principal_form
from classgroup.sieve import (SieveParams, SieveIdeal, make_params, classify_residue,
                              factor_residue, pick_sieve_ideal, sieve_interval,
                              extract_relation, verify_relation, collect,
                              format_relation, parse_relation, write_relations,
                              read_relations, relation_header, Relation)

# classify frozen examples (B1=100, B2=12000, ratio regime of the docs)
P = SieveParams(100, 12000, 2.7, 2, 120)
assert classify_residue(1, P).tag == "full"
r = classify_residue(9973, P); assert (r.tag, r.primes) == ("one", (9973,)), r
r = classify_residue(10403, P); assert (r.tag, r.primes) == ("two", (101, 103)), r
r = classify_residue(101 * 200003, P); assert r.tag == "discard", r
print("classify OK")

assert factor_residue(10403) == (101, 103)
assert factor_residue(10201) == (101, 101)
print("factor_residue OK")

# sieve completeness: delta=-10007, principal form, R=70, B1=100
delta = -10007
fb = build_factor_base(delta, 100)
print("fb size", len(fb), "bound", fb.bound, "primes", [p.p for p in fb.primes][:10])
f0 = principal_form(delta)
print("principal:", f0.tuple())
assert f0.tuple() == (1, 1, 2502), f0.tuple()
params0 = make_params(fb, lp_count=0, tolerance=2.0)
ideal = SieveIdeal(f0, {}, 70, 0, 0)
cands = set(sieve_interval(ideal, fb, params0))


def smooth_b1(n, b):
    for p in [q.p for q in fb.primes]:
        while n % p == 0:
            n //= p
    return n == 1


missed = []
for x in range(-70, 71):
    v = (x + 1) * x + 2502
    if smooth_b1(v, 100) and x not in cands:
        missed.append(x)
assert not missed, f"missed smooth x: {missed}"
nsmooth = sum(1 for x in range(-70, 71) if smooth_b1((x + 1) * x + 2502, 100))
print(f"completeness OK ({nsmooth} smooth, {len(cands)} candidates)")

# extract_relation: x=1 -> phi=2504=2^3*313
params2 = make_params(fb, lp_count=2)
print("params2:", params2)
rel = extract_relation(ideal, 1, fb, params2)
print("rel:", rel)
assert rel is not None
assert rel.large_primes and rel.large_primes[0][0] == 313
assert verify_relation(rel, fb)

# with B1 >= 313 it is a Full relation
fb313 = build_factor_base(delta, 320)
params313 = make_params(fb313, lp_count=2)
rel313 = extract_relation(SieveIdeal(f0, {}, 70, 0, 0), 1, fb313, params313)
print("rel313:", rel313)
assert rel313 is not None and not rel313.large_primes
assert verify_relation(rel313, fb313)
print("extract OK")

# pick_sieve_ideal determinism + delta=-23 frozen composition
fb23 = build_factor_base(-23, 4)
print("fb23 primes", [p.p for p in fb23.primes])
i1 = pick_sieve_ideal(fb23, -23, 42)
i2 = pick_sieve_ideal(fb23, -23, 42)
assert i1 == i2
print("ideal for -23:", i1.form.tuple(), i1.exponents, "R =", i1.radius)
assert i1.form.tuple() == (6, 1, 1), "window [2,8] only admits norms 2,3,6"
assert i1.form.reduced().tuple() == (1, 1, 6)

# collect on delta = -4(10^6+1): every relation verifies; worker invariance
D = -4 * (10**6 + 1)
fbD = build_factor_base(D, size_hint=50)
print("fbD bound", fbD.bound, "size", len(fbD))
pD = make_params(fbD, lp_count=2)
rep1 = collect(D, fbD, pD, 60, rng_seed=7, worker_count=1)
rep3 = collect(D, fbD, pD, 60, rng_seed=7, worker_count=3)
assert [ (r.exponents, r.large_primes) for r in rep1.relations ] == \
       [ (r.exponents, r.large_primes) for r in rep3.relations ], "worker variance"
assert all(verify_relation(r, fbD) for r in rep1.relations)
print("collect OK:", rep1.counts())

# empty target
rep0 = collect(D, fbD, pD, 0, rng_seed=7)
assert rep0.relations == []

# file roundtrip
write_relations("/tmp/rels.txt", D, pD, rep1.relations)
hdr, back = read_relations("/tmp/rels.txt")
assert hdr["delta"] == D and hdr["b1"] == pD.b1 and hdr["lp"] == 2
assert len(back) == len(rep1.relations)
assert all(a.exponents == b.exponents and a.large_primes == b.large_primes
           and a.provenance == b.provenance
           for a, b in zip(rep1.relations, back))
print("file roundtrip OK")
print("sieve module OK")
