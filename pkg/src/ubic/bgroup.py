"""Composite-order symmetric bilinear groups.

A group of order ``N = p*q*r`` splits as ``G = G_p x G_q x G_r``; the
pairing ``e: G x G -> G_T`` is bilinear and pairs elements of distinct
prime-order subgroups to the identity.

The backend shipped here stores every element as its discrete logarithm
with respect to a fixed generator ``g`` (the formal exponent 1).  Group
multiplication is addition of exponents mod N and the pairing is
multiplication of exponents mod N.  This is completely insecure (discrete
logs are in the clear) but algebraically exact, which is what you want
when testing a pairing-based scheme.  Schemes only use the methods of
:class:`GroupParams` and the element operators, so a real pairing backend
can replace this one without touching them.

>>> import random
>>> G = group_gen(16, random.Random(1))
>>> g = G.generator()
>>> pair(g ** 2, g ** 3) == pair(g, g) ** 6
True
>>> pair(G.subgroup_generator(G.p), G.subgroup_generator(G.q)) == G.target_identity()
True
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import UbicError

MIN_PRIME_BITS = 8
MILLER_RABIN_ROUNDS = 40

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


class GroupMismatch(UbicError, ValueError):
    code = "bgroup.mismatch"


def is_probable_prime(n: int, rng: random.Random | None = None,
                      rounds: int = MILLER_RABIN_ROUNDS) -> bool:
    """Miller-Rabin primality test."""
    if n < 2:
        return False
    for sp in _SMALL_PRIMES:
        if n % sp == 0:
            return n == sp
    rng = rng or random.Random(n)
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(bits: int, rng: random.Random) -> int:
    """Uniform-ish random prime with exactly ``bits`` bits."""
    while True:
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_probable_prime(cand, rng):
            return cand


@dataclass(frozen=True)
class GroupParams:
    """Description ``(p, q, r, G, G_T, e)`` of a composite-order group."""

    p: int
    q: int
    r: int

    def __post_init__(self):
        if len({self.p, self.q, self.r}) != 3:
            raise ValueError("p, q, r must be pairwise distinct")

    @property
    def N(self) -> int:
        return self.p * self.q * self.r

    def element(self, value: int) -> GroupElement:
        return GroupElement(self, value % self.N)

    def target(self, value: int) -> TargetElement:
        return TargetElement(self, value % self.N)

    def generator(self) -> GroupElement:
        return GroupElement(self, 1)

    def identity(self) -> GroupElement:
        return GroupElement(self, 0)

    def target_identity(self) -> TargetElement:
        return TargetElement(self, 0)

    def subgroup_generator(self, s: int) -> GroupElement:
        """Generator of the order-``s`` subgroup, ``g^(N/s)``."""
        if s not in (self.p, self.q, self.r):
            raise ValueError(f"{s} is not one of the group's primes")
        return self.generator() ** (self.N // s)

    def random_exponent(self, rng: random.Random, modulus: int | None = None) -> int:
        return rng.randrange(modulus or self.N)

    def random_in_subgroup(self, s: int, rng: random.Random) -> GroupElement:
        return self.subgroup_generator(s) ** rng.randrange(s)

    def random_target(self, rng: random.Random) -> TargetElement:
        return TargetElement(self, rng.randrange(self.N))

    def pair(self, a: GroupElement, b: GroupElement) -> TargetElement:
        return pair(a, b)


class _Element:
    __slots__ = ()

    params: GroupParams
    value: int

    def _check(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.params != self.params:
            raise GroupMismatch("elements belong to different groups")

    def __mul__(self, other):
        self._check(other)
        return type(self)(self.params, (self.value + other.value) % self.params.N)

    def __truediv__(self, other):
        return self * other.inverse()

    def __pow__(self, k: int):
        return type(self)(self.params, (self.value * k) % self.params.N)

    def inverse(self):
        return type(self)(self.params, (-self.value) % self.params.N)

    def is_identity(self) -> bool:
        return self.value == 0


@dataclass(frozen=True)
class GroupElement(_Element):
    """Element of G, stored as its exponent to the base ``g``."""

    params: GroupParams
    value: int


@dataclass(frozen=True)
class TargetElement(_Element):
    """Element of G_T, stored as its exponent to the base ``e(g, g)``."""

    params: GroupParams
    value: int

    def to_bytes(self) -> bytes:
        width = (self.params.N.bit_length() + 7) // 8
        return self.value.to_bytes(width, "big")


def pair(a: GroupElement, b: GroupElement) -> TargetElement:
    if not isinstance(a, GroupElement) or not isinstance(b, GroupElement):
        raise TypeError("pairing is defined on GroupElement operands")
    if a.params != b.params:
        raise GroupMismatch("pairing operands belong to different groups")
    return TargetElement(a.params, (a.value * b.value) % a.params.N)


def group_gen(security_param: int, rng: random.Random | None = None) -> GroupParams:
    """Sample three distinct primes of ``security_param`` bits each."""
    if security_param < MIN_PRIME_BITS:
        raise ValueError(f"security_param must be at least {MIN_PRIME_BITS} bits")
    rng = rng if rng is not None else random.SystemRandom()
    primes: list[int] = []
    while len(primes) < 3:
        cand = random_prime(security_param, rng)
        if cand not in primes:
            primes.append(cand)
    return GroupParams(*primes)
