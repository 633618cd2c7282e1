"""Class number certification and group structure extraction."""

import random

import pytest
import sympy
from sympy.matrices.normalforms import hermite_normal_form

from classgroup import oracle
from classgroup.classnumber import (
    GroupStructure, HStarBound, WindowViolation, class_number, essential_hnf,
    group_structure, hstar, minimal_denominator, snf,
)
from classgroup.forms import is_fundamental
from classgroup.relations import RelationMatrix

TIER = 1 << 13  # Euler truncation plenty for |delta| well below 1e6


def _window_ok(delta):
    hs = hstar(delta, TIER)
    h = oracle.class_number(delta)
    return hs.hstar <= h < 2 * hs.hstar


def test_hstar_window_known_points():
    assert _window_ok(-23)   # h = 3
    assert _window_ok(-4)    # h = 1, so hstar must be exactly 1
    assert hstar(-4, TIER).hstar == 1
    assert _window_ok(-3)
    assert _window_ok(-10007)


def test_hstar_window_sweep():
    bad = [d for d in range(-3, -2000, -1)
           if d % 4 in (0, 1) and is_fundamental(d) and not _window_ok(d)]
    assert bad == []


def test_hstar_rejects_tiny_truncation():
    with pytest.raises(ValueError):
        hstar(-23, 50)


def test_minimal_denominator_examples():
    assert minimal_denominator([[1, 0], [0, 6]]) == 6
    assert minimal_denominator([[2, 0], [0, 4]]) == 4
    assert minimal_denominator([[1, 0, 3]]) == 1
    assert minimal_denominator([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == 1
    with pytest.raises(ValueError):
        minimal_denominator([[1, 0], [2, 0]])  # columns span a rank-1 lattice


def _min_denominator_brute(a):
    m = sympy.Matrix(a)
    i = m.rows
    base = hermite_normal_form(m)
    det = None
    for cols in range(m.cols):
        sub = m[:, cols:cols + i]
        if sub.cols == i and sub.det() != 0:
            det = abs(sub.det())
            break
    assert det is not None
    for h in sorted(sympy.divisors(det)):
        v = sympy.zeros(i, 1)
        v[i - 1, 0] = h
        if hermite_normal_form(m.row_join(v)) == base:
            return h
    raise AssertionError("det itself must be a valid denominator")


def test_minimal_denominator_brute_force():
    rng = random.Random(23)
    checked = 0
    for _ in range(40):
        i = rng.randint(2, 4)
        m = i + rng.randint(0, 3)
        a = [[rng.randint(-5, 5) for _ in range(m)] for _ in range(i)]
        if sympy.Matrix(a).rank() < i:
            continue
        assert minimal_denominator(a) == _min_denominator_brute(a)
        checked += 1
    assert checked > 20


def _hs_for(h):
    return HStarBound(max(1, h // 2 + 1), 8192, 0.29)


def _diag_matrix(diag):
    m = RelationMatrix(len(diag))
    for i, d in enumerate(diag):
        m.add_row({i: d})
    return m


def test_class_number_diagonal():
    m = _diag_matrix([2, 3])
    h, hs_list = class_number(m, _hs_for(6))
    assert h == 6 and hs_list == [2, 3]


def test_class_number_window_edges():
    m = _diag_matrix([2, 3])
    h, _ = class_number(m, HStarBound(6, 8192, 0.29))  # h == hstar passes
    assert h == 6
    with pytest.raises(WindowViolation):
        class_number(m, HStarBound(3, 8192, 0.29))  # h == 2*hstar is out


def test_class_number_detects_doubled_generator():
    # an index-2 sublattice (one generator relation doubled) must violate
    m = _diag_matrix([2, 6])
    with pytest.raises(WindowViolation):
        class_number(m, _hs_for(6))


def test_class_number_rank_deficient():
    m = RelationMatrix(2)
    m.add_row({0: 1, 1: 1})
    m.add_row({0: 2, 1: 2})
    for par in (False, True):
        with pytest.raises(WindowViolation):
            class_number(m, _hs_for(1), parallel=par)


def test_class_number_parallel_matches_sequential():
    rng = random.Random(29)
    checked = 0
    while checked < 15:
        n = rng.randint(2, 4)
        m = RelationMatrix(n)
        for _ in range(n + 2):
            row = {c: rng.randint(-4, 4) for c in range(n)}
            row = {c: v for c, v in row.items() if v}
            if row:
                m.add_row(row)
        dense = sympy.Matrix(m.dense_rows())
        if dense.rank() < n:
            continue
        want = abs(hermite_normal_form(dense.T).det())
        hs = _hs_for(want)
        h_seq, list_seq = class_number(m, hs)
        h_par, list_par = class_number(m, hs, parallel=True)
        assert h_seq == h_par == want
        assert list_seq == list_par
        checked += 1


def test_class_number_basis_out_spans_lattice():
    rng = random.Random(31)
    checked = 0
    while checked < 10:
        n = rng.randint(2, 4)
        m = RelationMatrix(n)
        for _ in range(n + 3):
            row = {c: rng.randint(-4, 4) for c in range(n)}
            row = {c: v for c, v in row.items() if v}
            if row:
                m.add_row(row)
        dense = sympy.Matrix(m.dense_rows())
        if dense.rank() < n:
            continue
        basis = []
        h, _ = class_number(m, _hs_for(abs(hermite_normal_form(dense.T).det())),
                            basis_out=basis)
        assert len(basis) == n
        assert hermite_normal_form(sympy.Matrix(basis).T) \
            == hermite_normal_form(dense.T)
        checked += 1


def test_essential_hnf_examples():
    m = _diag_matrix([1, 1, 3])
    assert essential_hnf(m, 3) == [[3]]
    assert essential_hnf(_diag_matrix([1, 1]), 1) == []
    assert essential_hnf(RelationMatrix(0), 1) == []


def test_essential_hnf_presents_the_quotient():
    rng = random.Random(37)
    checked = 0
    while checked < 12:
        n = rng.randint(2, 5)
        m = RelationMatrix(n)
        for _ in range(n + 3):
            row = {c: rng.randint(-3, 3) for c in range(n)}
            row = {c: v for c, v in row.items() if v}
            if row:
                m.add_row(row)
        dense = sympy.Matrix(m.dense_rows())
        if dense.rank() < n:
            continue
        h = abs(hermite_normal_form(dense.T).det())
        ess = essential_hnf(m, h)
        from classgroup.intmat import snf_diagonal
        mine = [d for d in snf_diagonal(ess) if d > 1]
        from sympy.matrices.normalforms import smith_normal_form
        s = smith_normal_form(dense)
        theirs = [abs(s[i, i]) for i in range(n) if abs(s[i, i]) > 1]
        assert mine == theirs
        checked += 1


def test_snf_examples():
    assert snf([[3]]).divisors == (3,)
    assert snf([[2, 0], [0, 4]]).divisors == (2, 4)
    assert snf([[2, 0], [0, 3]]) == GroupStructure((6,), 6)
    assert snf([[1]]).divisors == ()
    assert snf([]).h == 1
    with pytest.raises(ValueError):
        snf([[0]])


def test_group_structure_str():
    assert str(GroupStructure((2, 4), 8)) == "C(2) x C(4)"
    assert str(GroupStructure((), 1)) == "trivial"


def test_group_structure_small():
    assert group_structure(-23).divisors == (3,)
    assert group_structure(-4).divisors == ()
    assert group_structure(-84).divisors == (2, 2)
    assert group_structure(-3299).divisors == (3, 9)


def test_group_structure_trivial_short_circuit():
    rec = {}
    g = group_structure(-4, report=rec)
    assert g.h == 1 and rec["fb_size"] == 0


def test_group_structure_rejects_bad_delta():
    for bad in (-5, -6, 0, 4, -2):
        with pytest.raises(ValueError):
            group_structure(bad)


def test_group_structure_matches_oracle_sweep():
    deltas = [d for d in range(-3, -260, -1) if d % 4 in (0, 1)]
    for d in deltas:
        assert group_structure(d).divisors == tuple(oracle.group_structure(d)), d


def test_group_structure_seed_invariance():
    want = group_structure(-10007, seed=1).divisors
    assert want == (77,)
    assert group_structure(-10007, seed=7).divisors == want


def test_relations_path_resume(tmp_path):
    path = str(tmp_path / "rels.txt")
    rec1 = {}
    g1 = group_structure(-3299, relations_path=path, report=rec1)
    assert "resumed" not in rec1
    rec2 = {}
    g2 = group_structure(-3299, relations_path=path, report=rec2)
    assert g2.divisors == g1.divisors == (3, 9)
    assert rec2["resumed"] > 0


def test_relations_path_parameter_mismatch(tmp_path):
    path = str(tmp_path / "rels.txt")
    group_structure(-3299, relations_path=path)
    with pytest.raises(ValueError, match="different parameters"):
        group_structure(-3299, lp_count=0, relations_path=path)


def test_relations_path_unsound_relation(tmp_path):
    path = str(tmp_path / "rels.txt")
    group_structure(-3299, relations_path=path)
    lines = open(path).read().splitlines()
    for i, line in enumerate(lines):
        if line.startswith("R ") and ":" in line[2:]:
            head, _, tail = line.partition(":")
            first = tail.split()[0]
            bumped = str(int(first) + 1)
            lines[i] = head + ":" + bumped + tail[len(first):]
            break
    open(path, "w").write("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="unsound"):
        group_structure(-3299, relations_path=path)
