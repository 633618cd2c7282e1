"""Ground-truth class groups for small discriminants.

Exhaustively enumerates the reduced primitive forms of discriminant D (their
count is h(D)), then reads off the elementary divisors from element-order
statistics inside each Sylow subgroup: if N_j counts the solutions of
x^(p^j) = 1 in the p-Sylow group, the multiset of p-power divisors is the
conjugate partition of (log_p N_1, log_p N_2 - log_p N_1, ...).  That avoids
any discrete-logarithm machinery and is fast enough for every |D| the oracle
guard admits.
"""

from __future__ import annotations

from math import isqrt

from .forms import Form, is_discriminant, principal_form
from .primes import factorize

ORACLE_LIMIT = 10**9


def _check(delta: int):
    if not is_discriminant(delta):
        raise ValueError(f"not a negative discriminant: {delta}")
    if -delta > ORACLE_LIMIT:
        raise ValueError(f"|delta| > {ORACLE_LIMIT} is beyond the oracle")


def enumerate_reduced(delta: int) -> list[Form]:
    """All reduced primitive forms of discriminant delta, sorted."""
    _check(delta)
    from math import gcd

    out = []
    amax = isqrt(-delta // 3)
    for a in range(1, amax + 1):
        foura = 4 * a
        # b runs over delta's parity class in [-a, a]
        b = -a + ((delta - (-a)) % 2)
        while b <= a:
            t = b * b - delta
            if t % foura == 0:
                c = t // foura
                if c >= a and not (b < 0 and (b == -a or a == c)):
                    if gcd(gcd(a, abs(b)), c) == 1:
                        out.append(Form(a, b, c))
            b += 2
    out.sort(key=Form.tuple)
    return out


def count_reduced_alt(delta: int) -> int:
    """Independent count of reduced primitive forms, looping b-major.

    For each b >= 0 of the right parity, factor (b^2 - delta)/4 = a*c with
    b <= a <= c and count the sign choices; exists purely to cross-check
    enumerate_reduced's edge cases.
    """
    _check(delta)
    from math import gcd

    count = 0
    b = -delta % 2
    while 3 * b * b <= -delta:
        m = (b * b - delta) // 4
        a = max(b, 1)
        while a * a <= m:
            if m % a == 0:
                c = m // a
                if gcd(gcd(a, b), c) == 1:
                    count += 1
                    if b != 0 and b != a and a != c:
                        count += 1  # the -b twin is a distinct reduced form
            a += 1
        b += 2
    return count


def class_number(delta: int) -> int:
    return len(enumerate_reduced(delta))


def _partition_from_counts(levels: list[int], p: int) -> list[int]:
    """Divisor exponents k_1 >= k_2 >= ... from N_j = #{x : x^(p^j) = 1}.

    levels[j] = N_j (levels[0] = 1).  M_j = log_p N_j is concave; the jumps
    M_j - M_{j-1} count the cyclic factors of order >= p^j, i.e. they form the
    conjugate of the sought partition.
    """
    ms = []
    for n in levels:
        e = 0
        while n > 1:
            assert n % p == 0
            n //= p
            e += 1
        ms.append(e)
    jumps = [ms[j] - ms[j - 1] for j in range(1, len(ms))]
    assert all(j >= 0 for j in jumps) and jumps == sorted(jumps, reverse=True)
    # conjugate partition: the i-th largest divisor exponent is #{j : jumps_j >= i}
    out = []
    for i in range(1, jumps[0] + 1):
        out.append(sum(1 for j in jumps if j >= i))
    return out


def group_structure(delta: int) -> list[int]:
    """Elementary divisors [d_1, ..., d_k], d_1 | d_2 | ... | d_k, of Cl(delta)."""
    forms = enumerate_reduced(delta)
    h = len(forms)
    if h == 1:
        return []
    one = principal_form(delta)
    types: dict[int, list[int]] = {}
    for p, e in sorted(factorize(h).items()):
        cof = h // p**e
        syl = {f**cof for f in forms}
        assert len(syl) == p**e
        levels = [1]
        cur = list(syl)
        while levels[-1] < p**e:
            cur = [x**p for x in cur]
            levels.append(sum(1 for x in cur if x == one))
        types[p] = _partition_from_counts(levels, p)
    width = max(len(t) for t in types.values())
    divisors = []
    for i in range(width):
        d = 1
        for p, t in types.items():
            if i < len(t):
                d *= p ** t[i]
        divisors.append(d)
    return sorted(divisors)  # ascending divisibility: d_1 | d_2 | ...
