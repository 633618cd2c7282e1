"""Primality and small-integer factorization utilities.

Everything here operates on word-sized integers: factor-base generation needs a
prime sieve, residue classification needs fast deterministic primality (residues
are < B2^2 < 2^64 at any reasonable parameter choice), and splitting a
double-large-prime residue needs Shanks' square-form factorization with a
Pollard-Brent fallback.
"""

from __future__ import annotations

from math import gcd, isqrt

# Strong-pseudoprime test with these bases is exact below 2^64 (Sinclair set).
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def primes_up_to(n: int) -> list[int]:
    """All primes <= n, ascending (simple byte sieve)."""
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, n + 1, i)))
    return [i for i in range(n + 1) if sieve[i]]


def prime_stream():
    """Yield primes 2, 3, 5, ... without a fixed upper bound."""
    bound = 1 << 10
    yielded = 0
    while True:
        ps = primes_up_to(bound)
        for p in ps[yielded:]:
            yield p
        yielded = len(ps)
        bound *= 4


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin; deterministic for n < 2^64, very strong beyond."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class SplitFailure(Exception):
    """Raised when the bounded factoring attempts give up; caller discards."""


def squfof(n: int, max_iter: int | None = None) -> int:
    """One nontrivial factor of composite n by square-form factorization.

    Classical single-multiplier variant: walk the continued-fraction expansion
    of sqrt(n) until a proper square form appears at an even index (a bounded
    queue screens out squares that would lead back to the trivial factor), then
    walk the inverse square root's cycle to the symmetry point.  Raises
    SplitFailure when the iteration cap (~4 n^(1/4)) is exhausted or only a
    trivial divisor is found.
    """
    if n % 2 == 0:
        return 2
    s = isqrt(n)
    if s * s == n:
        return s
    if max_iter is None:
        max_iter = 4 * isqrt(s) + 32
    L = isqrt(2 * s)
    queue: list[tuple[int, int]] = []

    p_prev = s
    q_prev = 1
    q_cur = n - s * s
    i = 1
    r = 0
    while True:
        if i > max_iter:
            raise SplitFailure(f"squfof: no square form within {max_iter} steps")
        b = (s + p_prev) // q_cur
        p_next = b * q_cur - p_prev
        q_next = q_prev + b * (p_prev - p_next)
        if q_cur <= L:
            if q_cur % 2 == 0:
                queue.append((q_cur // 2, p_prev % (q_cur // 2)))
            elif 2 * q_cur <= L:
                queue.append((q_cur, p_prev % q_cur))
            if len(queue) > 64:
                queue.pop(0)
        if i % 2 == 0:
            r = isqrt(q_cur)
            if r * r == q_cur:
                # Skip improper squares recorded in the queue.
                if r == 1:
                    raise SplitFailure("squfof: traversed the whole cycle")
                if not any(t == r and p_prev % r == m for t, m in queue):
                    break
        q_prev, q_cur = q_cur, q_next
        p_prev = p_next
        i += 1

    # Inverse cycle from the square form down to its symmetry point.
    b0 = (s - p_prev) // r
    p_rev = b0 * r + p_prev
    q_prev = r
    q_cur = (n - p_rev * p_rev) // q_prev
    for _ in range(max_iter):
        b = (s + p_rev) // q_cur
        p_next = b * q_cur - p_rev
        if p_next == p_rev:
            break
        q_prev, q_cur = q_cur, q_prev + b * (p_rev - p_next)
        p_rev = p_next
    else:
        raise SplitFailure("squfof: reverse cycle did not close")
    f = gcd(n, p_rev)
    if 1 < f < n:
        return f
    raise SplitFailure("squfof: trivial divisor")


def pollard_rho(n: int, max_rounds: int = 8) -> int:
    """One nontrivial factor of composite n (Brent's cycle variant)."""
    if n % 2 == 0:
        return 2
    for c in range(1, max_rounds + 1):
        y, r, q = 2, 1, 1
        g = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(128, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = gcd(q, n)
                k += 128
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = gcd(abs(x - ys), n)
        if g != n:
            return g
    raise SplitFailure(f"pollard_rho: gave up on {n}")


def split_semiprime(m: int) -> tuple[int, int]:
    """Split composite m into (p, q), p <= q: SQUFOF first, rho as fallback."""
    r = isqrt(m)
    if r * r == m:
        return r, r
    try:
        f = squfof(m)
    except SplitFailure:
        f = pollard_rho(m)  # may itself raise SplitFailure; caller discards
    g = m // f
    assert f * g == m and 1 < f < m
    return (f, g) if f <= g else (g, f)


def factorize(n: int) -> dict[int, int]:
    """Full factorization of small n (trial division then recursive splitting)."""
    assert n >= 1
    out: dict[int, int] = {}
    for p in _SMALL_PRIMES:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_probable_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        f = split_semiprime(m)[0]
        stack.extend((f, m // f))
    return out


def log2_floor(n: int) -> int:
    return n.bit_length() - 1
