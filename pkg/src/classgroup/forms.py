"""Arithmetic of positive definite binary quadratic forms.

A form (a, b, c) stands for a x^2 + b x y + c y^2 with discriminant
b^2 - 4ac = D < 0 and a > 0.  Classes of primitive forms under SL2(Z)
equivalence form the class group of the order of discriminant D; every class
contains exactly one reduced representative (|b| <= a <= c, with b >= 0 when
|b| = a or a = c), so reduced tuples double as canonical class labels.
Composition follows the classical Gaussian algorithm (Cohen, Alg. 5.4.7 shape);
prime forms (p, b_p, *) are the standard generators lying above a non-inert
prime p.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, isqrt

from .primes import factorize, log2_floor, prime_stream


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, u, v) with u*a + v*b = g = gcd(a, b), g >= 0."""
    old_r, r = a, b
    old_u, u = 1, 0
    old_v, v = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_u, u = u, old_u - q * u
        old_v, v = v, old_v - q * v
    if old_r < 0:
        old_r, old_u, old_v = -old_r, -old_u, -old_v
    return old_r, old_u, old_v


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d|n), n may be any integer."""
    if n == 0:
        return 1 if d in (1, -1) else 0
    if d % 2 == 0 and n % 2 == 0:
        return 0
    sign = 1
    if n < 0:
        n = -n
        if d < 0:
            sign = -sign
    # strip factors of two from n via the (d|2) rule
    while n % 2 == 0:
        n //= 2
        if d % 8 in (3, 5):
            sign = -sign
    d %= n
    # Jacobi loop with reciprocity
    while d:
        while d % 2 == 0:
            d //= 2
            if n % 8 in (3, 5):
                sign = -sign
        d, n = n, d
        if d % 4 == 3 and n % 4 == 3:
            sign = -sign
        d %= n
    return sign if n == 1 else 0


def sqrt_mod_p(d: int, p: int) -> int:
    """Smaller square root of d modulo an odd prime p (Tonelli-Shanks).

    Returns r with r^2 = d (mod p) and r <= p - r; 0 when p | d.
    Raises ValueError when d is a non-residue.
    """
    d %= p
    if d == 0:
        return 0
    if p == 2:
        return 1
    if pow(d, (p - 1) // 2, p) == p - 1:
        raise ValueError(f"{d} is not a square modulo {p}")
    if p % 4 == 3:
        r = pow(d, (p + 1) // 4, p)
        return min(r, p - r)
    # write p - 1 = q 2^s, find a non-residue z scanning 2, 3, 4, ...
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(d, q, p), pow(d, (q + 1) // 2, p)
    while t != 1:
        t2, i = t * t % p, 1
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t = t * c % p
        r = r * b % p
    return min(r, p - r)


def _normalize(a: int, b: int, c: int) -> tuple[int, int, int]:
    """Shift b into (-a, a] by b -> b - 2ka, adjusting c to keep the discriminant."""
    r = b % (2 * a)
    if r > a:
        r -= 2 * a
    if r != b:
        d = b * b - 4 * a * c
        c = (r * r - d) // (4 * a)
        b = r
    return a, b, c


def _reduce(a: int, b: int, c: int) -> tuple[int, int, int]:
    """Gauss reduction to the unique reduced representative of the class."""
    a, b, c = _normalize(a, b, c)
    while a > c:
        a, b, c = c, -b, a
        a, b, c = _normalize(a, b, c)
    if a == c and b < 0:
        b = -b
    return a, b, c


def _compose(f1: tuple[int, int, int], f2: tuple[int, int, int]) -> tuple[int, int, int]:
    """Gaussian composition of two forms of the same discriminant (unreduced)."""
    a1, b1, c1 = f1
    a2, b2, c2 = f2
    if a1 > a2:
        a1, b1, c1, a2, b2, c2 = a2, b2, c2, a1, b1, c1
    s = (b1 + b2) // 2
    n = b2 - s
    if a2 % a1 == 0:
        y1, d = 0, a1
    else:
        d, u, _ = xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        y2, x2, d1 = -1, 0, d
    else:
        d1, u2, v2 = xgcd(s, d)
        x2, y2 = u2, -v2
    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    c3 = (c2 * d1 + r * (b2 + v2 * r)) // v1
    return a3, b3, c3


@dataclass(frozen=True, slots=True)
class Form:
    """A positive definite binary quadratic form (a, b, c)."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a <= 0 or self.discriminant() >= 0:
            raise ValueError(f"not positive definite: {(self.a, self.b, self.c)}")

    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def reduced(self) -> "Form":
        return Form(*_reduce(self.a, self.b, self.c))

    def is_reduced(self) -> bool:
        ok = abs(self.b) <= self.a <= self.c
        if ok and (abs(self.b) == self.a or self.a == self.c):
            ok = self.b >= 0
        return ok

    def inverse(self) -> "Form":
        return Form(self.a, -self.b, self.c).reduced()

    def __mul__(self, other: "Form") -> "Form":
        if self.discriminant() != other.discriminant():
            raise ValueError("discriminant mismatch")
        return Form(*_compose(self.tuple(), other.tuple())).reduced()

    def __pow__(self, e: int) -> "Form":
        d = self.discriminant()
        if e < 0:
            return self.inverse() ** (-e)
        acc = principal_form(d)
        sq = self.reduced()
        while e:
            if e & 1:
                acc = acc * sq
            sq = sq * sq
            e >>= 1
        return acc

    def tuple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def value(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_principal(self) -> bool:
        return self.reduced() == principal_form(self.discriminant())

    def __repr__(self) -> str:
        return f"Form({self.a}, {self.b}, {self.c})"


def principal_form(delta: int) -> Form:
    """The identity class: (1, 0, |delta|/4) or (1, 1, (1+|delta|)/4)."""
    b = delta & 1
    return Form(1, b, (b - delta) // 4)


def compose_raw(f1: Form, f2: Form) -> Form:
    """Composition without reduction; only b is normalized into (-a, a].

    With gcd(a1, a2) = 1 the result has leading coefficient a1*a2, which is what
    the sieve needs: an explicitly B-smooth form norm.
    """
    if f1.discriminant() != f2.discriminant():
        raise ValueError("discriminant mismatch")
    return Form(*_normalize(*_compose(f1.tuple(), f2.tuple())))


def divides_conductor(delta: int, p: int) -> bool:
    """True when p divides the conductor f, where delta = f^2 * delta_0."""
    if p == 2:
        return delta % 16 in (0, 4)
    return delta % (p * p) == 0


def prime_form(delta: int, p: int) -> Form:
    """The reduced-or-not canonical form (p, b_p, c) of norm p above prime p.

    b_p is the smaller square root of delta mod p lifted to the right parity,
    so 0 < b_p <= 2p.  Rejects inert primes and primes dividing the conductor,
    where no invertible prime ideal of norm p exists.
    """
    if divides_conductor(delta, p):
        raise ValueError(f"{p} divides the conductor of {delta}")
    if p == 2:
        m = delta % 8
        if m == 1:
            b = 1
        elif m == 4:
            b = 2
        elif m == 0:
            b = 4
        else:
            raise ValueError(f"2 is inert in discriminant {delta}")
    elif delta % p == 0:
        b = p if delta % 2 else 2 * p
    else:
        if kronecker(delta, p) == -1:
            raise ValueError(f"{p} is inert in discriminant {delta}")
        r = sqrt_mod_p(delta, p)
        b = r if (r - delta) % 2 == 0 else r + p
    c = (b * b - delta) // (4 * p)
    return Form(p, b, c)


def is_discriminant(delta: int) -> bool:
    return delta < 0 and delta % 4 in (0, 1)


def is_fundamental(delta: int) -> bool:
    """True for field discriminants: squarefree delta = 1 mod 4, or 4m with
    squarefree m = 2, 3 mod 4."""
    if not is_discriminant(delta):
        return False
    if delta % 4 == 1:
        return all(e == 1 for e in factorize(-delta).values())
    m = delta // 4
    if (-m) % 4 in (1, 2):  # i.e. m = 3 or 2 mod 4
        return all(e == 1 for e in factorize(-m).values())
    return False


@dataclass(frozen=True, slots=True)
class FactorBasePrime:
    """A factor-base prime p with its root b_p and sieve log weight."""

    p: int
    bp: int
    ramified: bool
    logp: int  # floor(log2 p)


class FactorBase:
    """Ascending non-inert primes <= bound, with conductor primes excluded."""

    def __init__(self, delta: int, primes: list[FactorBasePrime], bound: int,
                 excluded: list[int]):
        self.delta = delta
        self.primes = primes
        self.bound = bound
        self.excluded = excluded  # conductor primes <= bound (divide phi values!)
        self.index = {fp.p: i for i, fp in enumerate(primes)}
        self._forms: list[Form | None] = [None] * len(primes)

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    def __getitem__(self, i: int) -> FactorBasePrime:
        return self.primes[i]

    def form(self, i: int) -> Form:
        f = self._forms[i]
        if f is None:
            fp = self.primes[i]
            f = Form(fp.p, fp.bp, (fp.bp * fp.bp - self.delta) // (4 * fp.p))
            self._forms[i] = f
        return f


def build_factor_base(delta: int, bound: int | None = None,
                      size_hint: int | None = None) -> FactorBase:
    """Factor base for delta: all non-inert primes up to a bound.

    Exactly one of bound / size_hint must be given.  With size_hint the base
    stops after that many primes and reports the implied bound (the largest
    prime included).  Primes dividing the conductor are skipped but remembered:
    trial division must still cast them out of sieve values.
    """
    if not is_discriminant(delta):
        raise ValueError(f"not a negative discriminant: {delta}")
    if (bound is None) == (size_hint is None):
        raise ValueError("give exactly one of bound / size_hint")
    primes: list[FactorBasePrime] = []
    excluded: list[int] = []
    top = 1
    for p in prime_stream():
        if bound is not None and p > bound:
            break
        if size_hint is not None and len(primes) >= size_hint:
            break
        if divides_conductor(delta, p):
            excluded.append(p)
            continue
        if p == 2:
            if delta % 8 not in (0, 1, 4):
                continue
        elif kronecker(delta, p) == -1:
            continue
        f = prime_form(delta, p)
        primes.append(FactorBasePrime(p, f.b, delta % p == 0, log2_floor(p)))
        top = p
    return FactorBase(delta, primes, bound if bound is not None else top, excluded)


