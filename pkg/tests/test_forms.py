"""Form arithmetic: reduction, composition, prime forms, factor base."""

import random

import pytest

from classgroup.forms import (
    Form, FactorBase, build_factor_base, divides_conductor, is_discriminant,
    is_fundamental, kronecker, prime_form, principal_form, sqrt_mod_p, xgcd,
)


def test_xgcd_bezout():
    rng = random.Random(1)
    for _ in range(200):
        a = rng.randint(-10**6, 10**6)
        b = rng.randint(-10**6, 10**6)
        g, x, y = xgcd(a, b)
        assert g == abs(__import__("math").gcd(a, b))
        assert a * x + b * y == g


def test_kronecker_examples():
    assert kronecker(-23, 5) == -1
    assert kronecker(-23, 23) == 0
    assert kronecker(-23, 2) == 1


def test_kronecker_matches_euler_criterion():
    from classgroup.primes import primes_up_to
    rng = random.Random(2)
    for p in primes_up_to(200):
        if p == 2:
            continue
        for _ in range(5):
            d = rng.randint(-500, 500)
            sym = kronecker(d, p)
            if d % p == 0:
                assert sym == 0
            else:
                euler = pow(d % p, (p - 1) // 2, p)
                assert sym == (1 if euler == 1 else -1)


def test_sqrt_mod_p_examples():
    assert sqrt_mod_p(-23, 3) == 1
    assert sqrt_mod_p(0, 7) == 0
    assert sqrt_mod_p(2, 7) == 3  # smaller-root convention


def test_sqrt_mod_p_random():
    from classgroup.primes import primes_up_to
    rng = random.Random(3)
    for p in primes_up_to(500):
        if p == 2:
            continue
        for _ in range(3):
            d = rng.randint(-10**4, 10**4)
            if kronecker(d, p) == -1:
                with pytest.raises(ValueError):
                    sqrt_mod_p(d, p)
            else:
                r = sqrt_mod_p(d, p)
                assert 0 <= r < p and (r * r - d) % p == 0


def test_prime_form_examples():
    assert prime_form(-23, 2).tuple() == (2, 1, 3)
    assert prime_form(-23, 23).tuple() == (23, 23, 6)
    assert prime_form(-4, 2).tuple() == (2, 2, 1)


def test_prime_form_invariants():
    for delta in (-23, -4, -3, -20, -10007, -4 * (10**6 + 1)):
        fb = build_factor_base(delta, 100)
        for fp in fb:
            f = prime_form(delta, fp.p)
            assert f.a == fp.p
            assert f.discriminant() == delta


def test_prime_form_rejects_inert():
    with pytest.raises(ValueError):
        prime_form(-23, 5)


def test_reduce_examples():
    assert Form(2, 1, 3).reduced().tuple() == (2, 1, 3)
    assert Form(6, 1, 1).reduced().tuple() == (1, 1, 6)
    assert Form(3, -1, 2).reduced().tuple() == (2, 1, 3)


def test_reduce_idempotent_and_reduced():
    rng = random.Random(4)
    for _ in range(300):
        delta = -rng.choice([3, 4, 7, 8, 23, 47, 84, 231, 10007])
        # random form of that discriminant via composing prime forms
        fb = build_factor_base(delta, 60)
        if len(fb) == 0:
            continue
        f = principal_form(delta)
        for _ in range(rng.randint(1, 5)):
            f = f * fb.form(rng.randrange(len(fb)))
        r = f.reduced()
        assert r.is_reduced()
        assert r.reduced() == r
        assert r.discriminant() == delta


def test_compose_examples():
    d = -23
    f = Form(2, 1, 3)
    assert (f * Form(2, -1, 3)).tuple() == (1, 1, 6)
    assert (Form(1, 1, 6) * f).tuple() == (2, 1, 3)
    assert (f * f).tuple() == (2, -1, 3)  # Cl(-23) cyclic of order 3


def test_pow_examples():
    f = Form(2, 1, 3)
    assert (f ** 3).tuple() == (1, 1, 6)
    assert (f ** 1) == f.reduced()
    assert (f ** -1).tuple() == (2, -1, 3)
    assert (f ** 0).tuple() == (1, 1, 6)


def test_group_axioms_random():
    rng = random.Random(5)
    for delta in (-23, -84, -231, -10007):
        fb = build_factor_base(delta, 80)
        forms = [fb.form(i) for i in range(len(fb))]
        one = principal_form(delta)
        for _ in range(60):
            f = rng.choice(forms) ** rng.randint(1, 6)
            g = rng.choice(forms) ** rng.randint(1, 6)
            h = rng.choice(forms)
            assert (f * g) * h == f * (g * h)
            assert f * one == f.reduced()
            assert (f * f.inverse()).is_principal()


def test_principal_form_cases():
    assert principal_form(-23).tuple() == (1, 1, 6)
    assert principal_form(-4).tuple() == (1, 0, 1)


def test_is_discriminant():
    assert is_discriminant(-23)
    assert is_discriminant(-4)
    assert not is_discriminant(-5)
    assert not is_discriminant(23)
    assert not is_discriminant(0)


def test_is_fundamental():
    assert is_fundamental(-23)
    assert is_fundamental(-4)
    assert is_fundamental(-8)
    assert not is_fundamental(-12)   # 4 * (-3)
    assert not is_fundamental(-100)  # 25 * (-4)


def test_build_factor_base_examples():
    fb = build_factor_base(-23, 6)
    assert [fp.p for fp in fb] == [2, 3]
    fb = build_factor_base(-4, 10)
    assert [fp.p for fp in fb] == [2, 5]
    assert len(build_factor_base(-23, 1)) == 0


def test_build_factor_base_matches_kronecker_filter():
    from classgroup.primes import primes_up_to
    for delta in (-23, -4, -84, -10007):
        fb = build_factor_base(delta, 200)
        want = [p for p in primes_up_to(200)
                if kronecker(delta, p) != -1
                and not divides_conductor(delta, p)]
        assert [fp.p for fp in fb] == want
        assert fb.bound == 200
        for fp in fb:
            # b_p normalized: 0 < b_p <= 2p, parity matches delta
            assert 0 < fp.bp <= 2 * fp.p
            assert (fp.bp - delta) % 2 == 0
            assert (fp.bp * fp.bp - delta) % (4 * fp.p) == 0
            assert fp.ramified == (delta % fp.p == 0)


def test_build_factor_base_size_hint():
    fb = build_factor_base(-10007, size_hint=10)
    assert len(fb) == 10
    assert fb.bound >= fb.primes[-1].p
    with pytest.raises(ValueError):
        build_factor_base(-10007)
    with pytest.raises(ValueError):
        build_factor_base(-10007, 100, size_hint=10)


def test_conductor_primes_excluded():
    # -12 = 4 * (-3): conductor 2; -75 = 25 * (-3): conductor 5
    fb = build_factor_base(-12, 20)
    assert all(fp.p != 2 for fp in fb)
    fb = build_factor_base(-75, 20)
    assert all(fp.p != 5 for fp in fb)
    assert divides_conductor(-12, 2)
    assert not divides_conductor(-23, 2)


def test_reduced_forms_land_in_oracle_enumeration():
    from classgroup.oracle import enumerate_reduced
    rng = random.Random(6)
    for delta in (-23, -47, -84, -231):
        classes = {f.tuple() for f in enumerate_reduced(delta)}
        fb = build_factor_base(delta, 60)
        for _ in range(40):
            f = principal_form(delta)
            for _ in range(rng.randint(1, 6)):
                f = f * fb.form(rng.randrange(len(fb)))
            assert f.reduced().tuple() in classes
