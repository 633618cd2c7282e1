"""Relation generation by sieving values of binary quadratic forms.

A sieve ideal a = p_1 ... p_k (distinct factor-base primes, composed without
reduction so the form's leading coefficient is exactly N(a)) gives a polynomial
phi(x, 1) = a x^2 + b x + c whose values are norms: a * phi(x,1) = N(alpha) for
alpha = a*x + (b + sqrt(D))/2 in a.  Whenever phi(x,1) factors over the base as
prod p^f (times up to lp_count large primes), the principal ideal (alpha)
factors as a * prod p^f up to conjugation, and the signed exponent vector is a
relation in the class group.

Sieving accumulates floor(log2 p) at the root positions of phi mod p over
x in [-R, R]; positions whose score crosses the threshold

    F = floor( log2(sqrt(|D|/2) * R) - T * log2(B_ref) )

are trial divided (B_ref = B2 with large primes enabled, else the largest base
prime).  Residues after trial division are classified as full relations,
1-partial (one prime in (B1, B2]), 2-partial (two such primes, split by
square-form factorization), or discarded.
"""

from __future__ import annotations

import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import isqrt

import numpy as np

from .forms import (Form, FactorBase, compose_raw, divides_conductor,
                    prime_form, principal_form, sqrt_mod_p)
from .primes import SplitFailure, is_probable_prime, split_semiprime

log = logging.getLogger(__name__)

R_MIN = 32
R_MAX = 1 << 20
ROUND_SIZE = 8  # ideals per scheduling round; fixed so worker count never
                # changes which ideals are processed or in what order

DEFAULT_TOLERANCE = {0: 1.5, 1: 2.1, 2: 2.7}


class SieveError(Exception):
    pass


class CollectBudget(Exception):
    """Yield rate pathologically low for the requested target."""


@dataclass(frozen=True, slots=True)
class SieveParams:
    b1: int
    b2: int
    tolerance: float
    lp_count: int
    ratio: int

    def __post_init__(self):
        if self.lp_count not in (0, 1, 2):
            raise ValueError("lp_count must be 0, 1 or 2")
        if self.lp_count == 0 and self.b2 != self.b1:
            raise ValueError("lp_count=0 forces B2 = B1")
        if self.b2 < self.b1:
            raise ValueError("need B1 <= B2")
        # B2 < B1^2 makes residue classification unambiguous; make_params
        # enforces it.  Direct construction tolerates B2 >= B1^2 (useful for
        # tiny illustrative bases); classify_residue then resolves the overlap
        # by testing the composite split window first.


def make_params(fb: FactorBase, lp_count: int = 2, ratio: int = 120,
                tolerance: float | None = None) -> SieveParams:
    """Derive sieve parameters from a factor base.

    B2 = ratio * B1 capped below B1^2 (the classification invariant); tiny
    bases therefore get a squeezed large-prime range rather than an invalid
    one.  Default tolerances widen with lp_count since the threshold is
    measured against bigger admissible residues.
    """
    b1 = max(fb.bound, 2)
    if tolerance is None:
        tolerance = DEFAULT_TOLERANCE[lp_count]
    if lp_count == 0:
        b2 = b1
    else:
        b2 = min(ratio * b1, b1 * b1 - 1)
        if b2 < b1:
            b2 = b1  # degenerate base (B1 <= 2); large primes effectively off
    if lp_count >= 1 and b2 == b1:
        lp_count = 0
    return SieveParams(b1, b2, float(tolerance), lp_count, ratio)


@dataclass(frozen=True, slots=True)
class SieveIdeal:
    form: Form                 # unreduced product: form.a = N(a), B-smooth
    exponents: dict[int, int]  # factor-base index -> 1
    radius: int
    seed: int                  # sub-seed that produced this ideal
    ident: int                 # ideal counter, for provenance


@dataclass(slots=True)
class Relation:
    exponents: dict[int, int]            # fb index -> combined e_i + f_i (signed)
    large_primes: tuple[tuple[int, int], ...]  # (p, +-1), possibly repeated
    provenance: tuple[int, int, int] = (0, 0, 0)  # (seed, ideal, x)


@dataclass(frozen=True, slots=True)
class ResidueClass:
    tag: str                      # "full" | "one" | "two" | "discard"
    primes: tuple[int, ...] = ()


def pick_sieve_ideal(fb: FactorBase, delta: int, rng_seed: int,
                     ident: int = 0) -> SieveIdeal:
    """Random smooth sieve ideal with norm in [B1, B1^3], deterministic in seed.

    Primes come from the upper half of the base (the whole base when it is
    tiny) so relations keep touching the heavy columns; the radius prefers
    R >= 2*B1 when the discriminant is large enough to allow it.
    """
    if len(fb) == 0:
        raise SieveError("empty factor base")
    rng = random.Random(rng_seed)
    pool = list(range(len(fb) // 2, len(fb))) if len(fb) >= 6 else list(range(len(fb)))
    lo, hi = fb.bound, fb.bound ** 3
    sqrt_half = isqrt(-delta // 2)
    soft_cap = sqrt_half // (2 * fb.bound)  # N <= this gives R >= 2*B1
    want_big_r = soft_cap >= lo
    for attempt in range(400):
        k = rng.randint(1, min(3, len(pool)))
        picks = sorted(rng.sample(pool, k))
        norm = 1
        for i in picks:
            norm *= fb[i].p
        if not lo <= norm <= hi:
            continue
        if want_big_r and attempt < 200 and norm > soft_cap:
            continue
        form = fb.form(picks[0])
        for i in picks[1:]:
            form = compose_raw(form, fb.form(i))
        assert form.a == norm
        radius = min(max(round(sqrt_half / norm), R_MIN), R_MAX)
        return SieveIdeal(form, {i: 1 for i in picks}, radius, rng_seed, ident)
    raise SieveError(
        f"no sieve-ideal norm reachable in [{lo}, {hi}]: factor base too small")


def sieve_threshold(ideal: SieveIdeal, fb: FactorBase, params: SieveParams) -> int:
    mval = isqrt(-fb.delta // 2) * ideal.radius
    if params.lp_count >= 1:
        bref = params.b2
    else:
        bref = fb.primes[-1].p if len(fb) else 2
    return math.floor((mval.bit_length() - 1) - params.tolerance * math.log2(bref))


def sieve_interval(ideal: SieveIdeal, fb: FactorBase,
                   params: SieveParams) -> list[int]:
    """All x in [-R, R] whose accumulated prime-log score reaches the threshold."""
    a, b, c = ideal.form.tuple()
    R = ideal.radius
    F = sieve_threshold(ideal, fb, params)
    if F <= 0:
        return list(range(-R, R + 1))
    S = np.zeros(2 * R + 1, dtype=np.int16)
    for fp in fb.primes:
        p = fp.p
        if a % p == 0:
            if b % p == 0:
                continue  # p | gcd(a,b) implies p never divides phi (p inert in c)
            r0 = (-c) * pow(b, p - 2, p) % p  # phi = b x + c (mod p), one root
            S[(r0 + R) % p::p] += fp.logp
        elif p == 2:
            if c % 2 == 0:
                S[R % 2::2] += 1          # x even
            if (a + b + c) % 2 == 0:
                S[(R + 1) % 2::2] += 1    # x odd
        else:
            rt = fp.bp % p                # sqrt of D mod p
            inv2a = pow(2 * a, p - 2, p)
            r1 = (rt - b) * inv2a % p
            S[(r1 + R) % p::p] += fp.logp
            if rt:
                r2 = (-rt - b) * inv2a % p
                S[(r2 + R) % p::p] += fp.logp
    return [int(i) - R for i in np.nonzero(S >= F)[0]]


def factor_residue(m: int) -> tuple[int, int]:
    """Split a 2-partial residue m = p * p' (p <= p'): SQUFOF, then rho.

    Raises SplitFailure when both bounded attempts give up; the caller
    discards the candidate (relations are plentiful).
    """
    return split_semiprime(m)


def classify_residue(m: int, params: SieveParams) -> ResidueClass:
    """Case analysis on the residue after full factor-base trial division.

    Every prime factor of m exceeds B1 (smaller non-inert primes were divided
    out, inert primes cannot divide form norms, conductor primes are discarded
    upstream), which is what makes the classification unambiguous under
    B2 < B1^2.  TwoPartial is gated off when lp_count < 2, OnePartial when
    lp_count < 1.
    """
    if m == 1:
        return ResidueClass("full")
    b1, b2 = params.b1, params.b2
    if m > b2 * b2:
        return ResidueClass("discard")
    if is_probable_prime(m):
        if m <= b2 and params.lp_count >= 1:
            return ResidueClass("one", (m,))
        return ResidueClass("discard")  # prime residue above B2
    if m > b1 * b1:
        if params.lp_count < 2:
            return ResidueClass("discard")
        try:
            p, q = factor_residue(m)
        except SplitFailure:
            return ResidueClass("discard")
        if q <= b2 and is_probable_prime(p) and is_probable_prime(q):
            return ResidueClass("two", (p, q))
        return ResidueClass("discard")
    # composite m <= B1^2 would need two prime factors > B1: impossible
    raise AssertionError(f"composite residue {m} <= B1^2 after trial division")


def extract_relation(ideal: SieveIdeal, x: int, fb: FactorBase,
                     params: SieveParams) -> Relation | None:
    """Trial-divide phi(x,1) over the base and build the signed relation.

    Sign convention: a prime power p^f divides phi with u = 2ax + b congruent
    to b_p (mod p; mod 4 for p = 2) on the principal branch -> exponent +f;
    the conjugate root -> -f; ramified primes are self-conjugate and stored
    positive.  Primes dividing the conductor kill the candidate (the ideal
    above them is not invertible): base-excluded ones are checked first,
    large-prime ones when classifying.
    """
    a, b, c = ideal.form.tuple()
    v = (a * x + b) * x + c
    u = 2 * a * x + b
    delta = fb.delta
    for p in fb.excluded:
        if v % p == 0:
            return None
    exps = dict(ideal.exponents)
    for i, fp in enumerate(fb.primes):
        p = fp.p
        f = 0
        while v % p == 0:
            v //= p
            f += 1
        if not f:
            continue
        if fp.ramified:
            s = 1
        elif p == 2:
            s = 1 if u % 4 == fp.bp % 4 else -1
        else:
            s = 1 if u % p == fp.bp % p else -1
        e = exps.get(i, 0) + s * f
        if e:
            exps[i] = e
        else:
            exps.pop(i, None)
    cls = classify_residue(v, params)
    if cls.tag == "discard":
        return None
    lps = []
    for p in cls.primes:
        if delta % p == 0:
            if divides_conductor(delta, p):
                return None
            lps.append((p, 1))
        else:
            rt = sqrt_mod_p(delta, p)
            s = 1 if u % p == rt else -1
            lps.append((p, s))
    return Relation(exps, tuple(lps), (ideal.seed, ideal.ident, x))


def verify_relation(rel: Relation, fb: FactorBase) -> bool:
    """The load-bearing soundness identity: the relation composes to the identity."""
    delta = fb.delta
    acc = principal_form(delta)
    for i, e in rel.exponents.items():
        acc = acc * (fb.form(i) ** e)
    for p, s in rel.large_primes:
        acc = acc * (prime_form(delta, p) ** s)
    return acc.is_principal()


@dataclass(slots=True)
class CollectReport:
    relations: list[Relation] = field(default_factory=list)
    fulls: int = 0
    partial1: int = 0
    partial2: int = 0
    discarded: int = 0
    duplicates: int = 0
    candidates: int = 0
    ideals: int = 0

    def counts(self) -> dict:
        return {"fulls": self.fulls, "partial1": self.partial1,
                "partial2": self.partial2, "discarded": self.discarded,
                "duplicates": self.duplicates, "candidates": self.candidates,
                "ideals": self.ideals}


def derive_seed(rng_seed: int, ident: int) -> int:
    return (rng_seed * 0x9E3779B97F4A7C15 + ident * 0xBF58476D1CE4E5B9 + 1) % (1 << 63)


def collect(delta: int, fb: FactorBase, params: SieveParams, target_count: int,
            rng_seed: int, worker_count: int = 1, seen=None, writer=None,
            max_ideals: int | None = None, verify: bool = True) -> CollectReport:
    """Sieve ideals until target_count new relations (full + partial) exist.

    Deterministic for a fixed seed regardless of worker_count: ideals are
    numbered, each derives its own sub-seed, rounds of ROUND_SIZE ideals are
    dispatched at once and their results consumed in ideal order.  `seen`
    carries canonical relation keys across calls so resumed collections do
    not double-count; `writer` receives each accepted relation in order.
    """
    report = CollectReport()
    if target_count <= 0:
        return report
    if len(fb) == 0:
        raise SieveError("empty factor base")
    from .relations import RelationMatrix
    seen = set() if seen is None else seen
    if max_ideals is None:
        max_ideals = max(64, 16 * target_count)

    def work(ident: int):
        sub = derive_seed(rng_seed, ident)
        ideal = pick_sieve_ideal(fb, delta, sub, ident)
        xs = sieve_interval(ideal, fb, params)
        found = []
        tallies = [0, 0, 0, 0]  # full, one, two, discard
        for x in xs:
            rel = extract_relation(ideal, x, fb, params)
            if rel is None:
                tallies[3] += 1
                continue
            n_lp = len(rel.large_primes)
            tallies[0 if n_lp == 0 else n_lp] += 1
            if verify and not verify_relation(rel, fb):
                raise AssertionError(
                    f"relation fails verification: {rel} (ideal {ideal})")
            found.append(rel)
        return len(xs), tallies, found

    pool = ThreadPoolExecutor(worker_count) if worker_count > 1 else None
    try:
        ident = 0
        while len(report.relations) < target_count:
            if ident >= max_ideals:
                raise CollectBudget(
                    f"{len(report.relations)}/{target_count} relations after "
                    f"{ident} ideals; parameters yield too little")
            batch = range(ident, ident + ROUND_SIZE)
            results = pool.map(work, batch) if pool else map(work, batch)
            for ncand, tallies, found in results:
                report.candidates += ncand
                report.fulls += tallies[0]
                report.partial1 += tallies[1]
                report.partial2 += tallies[2]
                report.discarded += tallies[3]
                report.ideals += 1
                for rel in found:
                    key = RelationMatrix.relation_key(rel)
                    if key in seen:
                        report.duplicates += 1
                        continue
                    seen.add(key)
                    report.relations.append(rel)
                    if writer is not None:
                        writer(rel)
            ident += ROUND_SIZE
    finally:
        if pool:
            pool.shutdown(wait=False)
    return report


# ---------------------------------------------------------------------------
# Relation file format: self-describing, append-only, mergeable.
#   # relations delta=<D> b1=<B1> b2=<B2> t=<T> lp=<lp_count>
#   R <idx>:<exp> ... [L <p>:<+-1>]* # <seed>/<ideal>/<x>

def format_relation(rel: Relation) -> str:
    parts = ["R"]
    parts.extend(f"{i}:{e}" for i, e in sorted(rel.exponents.items()))
    parts.extend(f"L {p}:{s:+d}" for p, s in rel.large_primes)
    s, ident, x = rel.provenance
    parts.append(f"# {s}/{ident}/{x}")
    return " ".join(parts)


def parse_relation(line: str) -> Relation:
    body, _, prov = line.partition("#")
    toks = body.split()
    assert toks[0] == "R", f"bad relation line: {line!r}"
    exps: dict[int, int] = {}
    lps: list[tuple[int, int]] = []
    it = iter(toks[1:])
    for tok in it:
        if tok == "L":
            p, _, sgn = next(it).partition(":")
            lps.append((int(p), int(sgn)))
        else:
            i, _, e = tok.partition(":")
            exps[int(i)] = int(e)
    seed, ident, x = (int(t) for t in prov.strip().split("/")) if prov.strip() else (0, 0, 0)
    return Relation(exps, tuple(lps), (seed, ident, x))


def relation_header(delta: int, params: SieveParams) -> str:
    return (f"# relations delta={delta} b1={params.b1} b2={params.b2} "
            f"t={params.tolerance} lp={params.lp_count}")


def parse_header(line: str) -> dict:
    assert line.startswith("# relations "), f"bad header: {line!r}"
    out = {}
    for tok in line.split()[2:]:
        k, _, v = tok.partition("=")
        out[k] = float(v) if k == "t" else int(v)
    return out


def write_relations(path: str, delta: int, params: SieveParams,
                    rels: list[Relation], append: bool = False) -> None:
    import os
    fresh = not (append and os.path.exists(path) and os.path.getsize(path) > 0)
    with open(path, "a" if append else "w") as fh:
        if fresh:
            fh.write(relation_header(delta, params) + "\n")
        for rel in rels:
            fh.write(format_relation(rel) + "\n")


def read_relations(path: str) -> tuple[dict, list[Relation]]:
    with open(path) as fh:
        header = parse_header(fh.readline().rstrip("\n"))
        rels = [parse_relation(ln) for ln in fh
                if ln.strip() and ln.startswith("R")]
    return header, rels
