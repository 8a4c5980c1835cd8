"""Katz-Sahai-Waters inner-product predicate encryption.

A key for vector ``v`` opens a ciphertext for attribute vector ``x`` iff
``<x, v> = 0 (mod N)``.  Both flavours are provided: predicate-only
(decryption returns a boolean) and message mode, where the plaintext is an
element of ``G_T``.

In message mode a non-matching key still yields *some* element of G_T (a
random-looking one).  Callers that need a hard failure should derive a
symmetric key from the element and rely on authenticated decryption
downstream, as :mod:`ubic.hiding` does.

Randomness used inside the algorithms (``R_0``, ``R_{1,i}``, ``R_{2,i}``,
``h_{1,i}``, ``h_{2,i}``, ``gamma``, ``h`` at setup; ``r_{1,i}``,
``r_{2,i}``, ``f_1``, ``f_2``, ``R_5``, ``Q_6`` at key generation; ``s``,
``alpha``, ``beta``, ``R_{3,i}``, ``R_{4,i}`` at encryption) is sampled
fresh on every call and never stored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .bgroup import GroupElement, GroupParams, TargetElement
from .errors import UbicError
from .tokens import Reader, TokenError, tlv, u32, read_u32


class Mode(Enum):
    PREDICATE_ONLY = 1
    MESSAGE = 2


class IpeError(UbicError, ValueError):
    code = "ipe.invalid"


@dataclass(frozen=True)
class IpePublicKey:
    params: GroupParams
    mode: Mode
    g_p: GroupElement
    g_r: GroupElement
    Q: GroupElement
    H1: tuple[GroupElement, ...]
    H2: tuple[GroupElement, ...]
    P: TargetElement | None = None

    @property
    def n(self) -> int:
        return len(self.H1)


@dataclass(frozen=True)
class IpeMasterSecret:
    params: GroupParams
    mode: Mode
    g_p: GroupElement
    g_q: GroupElement
    g_r: GroupElement
    h1: tuple[GroupElement, ...]
    h2: tuple[GroupElement, ...]
    h_gamma_inv: GroupElement | None = None

    @property
    def n(self) -> int:
        return len(self.h1)


@dataclass(frozen=True)
class IpeSecretKey:
    params: GroupParams
    mode: Mode
    K0: GroupElement
    K1: tuple[GroupElement, ...]
    K2: tuple[GroupElement, ...]
    # kept for tests and diagnostics; not part of the key material
    v: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return len(self.K1)


@dataclass(frozen=True)
class IpeCiphertext:
    params: GroupParams
    mode: Mode
    C0: GroupElement
    C1: tuple[GroupElement, ...]
    C2: tuple[GroupElement, ...]
    C_prime: TargetElement | None = None

    @property
    def n(self) -> int:
        return len(self.C1)


def inner_product(x: Sequence[int], v: Sequence[int], N: int) -> int:
    if len(x) != len(v):
        raise IpeError("vector lengths differ")
    return sum(a * b for a, b in zip(x, v)) % N


def setup(params: GroupParams, n: int, mode: Mode = Mode.MESSAGE,
          rng: random.Random | None = None) -> tuple[IpePublicKey, IpeMasterSecret]:
    if n < 1:
        raise IpeError("vector length must be at least 1")
    rng = rng if rng is not None else random.SystemRandom()
    p, q, r = params.p, params.q, params.r
    g_p, g_q, g_r = (params.subgroup_generator(s) for s in (p, q, r))
    R0 = params.random_in_subgroup(r, rng)
    h1, h2, H1, H2 = [], [], [], []
    for _ in range(n):
        R1 = params.random_in_subgroup(r, rng)
        R2 = params.random_in_subgroup(r, rng)
        a = params.random_in_subgroup(p, rng)
        b = params.random_in_subgroup(p, rng)
        h1.append(a)
        h2.append(b)
        H1.append(a * R1)
        H2.append(b * R2)
    Q = g_q * R0
    P = h_gamma_inv = None
    if mode is Mode.MESSAGE:
        gamma = params.random_exponent(rng)
        h = params.random_in_subgroup(p, rng)
        P = params.pair(g_p, h) ** gamma
        h_gamma_inv = h ** (-gamma)
    pk = IpePublicKey(params, mode, g_p, g_r, Q, tuple(H1), tuple(H2), P)
    msk = IpeMasterSecret(params, mode, g_p, g_q, g_r, tuple(h1), tuple(h2), h_gamma_inv)
    return pk, msk


def keygen(msk: IpeMasterSecret, v: Sequence[int], rng: random.Random | None = None) -> IpeSecretKey:
    if len(v) != msk.n:
        raise IpeError(f"predicate vector must have length {msk.n}")
    rng = rng if rng is not None else random.SystemRandom()
    params = msk.params
    N, p, q, r = params.N, params.p, params.q, params.r
    v = tuple(int(vi) % N for vi in v)
    # all randomness is drawn before v is used
    r1 = [rng.randrange(p) for _ in range(msk.n)]
    r2 = [rng.randrange(p) for _ in range(msk.n)]
    f1, f2 = rng.randrange(q), rng.randrange(q)
    R5 = params.random_in_subgroup(r, rng)
    Q6 = params.random_in_subgroup(q, rng)

    K0 = R5 * Q6
    if msk.mode is Mode.MESSAGE:
        K0 = K0 * msk.h_gamma_inv
    K1, K2 = [], []
    for i in range(msk.n):
        K0 = K0 * msk.h1[i] ** (-r1[i]) * msk.h2[i] ** (-r2[i])
        K1.append(msk.g_p ** r1[i] * msk.g_q ** (f1 * v[i]))
        K2.append(msk.g_p ** r2[i] * msk.g_q ** (f2 * v[i]))
    return IpeSecretKey(params, msk.mode, K0, tuple(K1), tuple(K2), v)


def encrypt(pk: IpePublicKey, x: Sequence[int], m: TargetElement | None = None,
            rng: random.Random | None = None) -> IpeCiphertext:
    if len(x) != pk.n:
        raise IpeError(f"attribute vector must have length {pk.n}")
    if (m is None) != (pk.mode is Mode.PREDICATE_ONLY):
        raise IpeError("a message is required in message mode and forbidden otherwise")
    if m is not None and (not isinstance(m, TargetElement) or m.params != pk.params):
        raise IpeError("message must be an element of G_T of the same group")
    rng = rng if rng is not None else random.SystemRandom()
    params = pk.params
    N, r = params.N, params.r
    x = [int(xi) % N for xi in x]
    s, alpha, beta = (params.random_exponent(rng) for _ in range(3))
    C1, C2 = [], []
    for i in range(pk.n):
        R3 = params.random_in_subgroup(r, rng)
        R4 = params.random_in_subgroup(r, rng)
        C1.append(pk.H1[i] ** s * pk.Q ** (alpha * x[i]) * R3)
        C2.append(pk.H2[i] ** s * pk.Q ** (beta * x[i]) * R4)
    C_prime = m * pk.P ** s if m is not None else None
    return IpeCiphertext(params, pk.mode, pk.g_p ** s, tuple(C1), tuple(C2), C_prime)


def pairing_product(sk: IpeSecretKey, c: IpeCiphertext) -> TargetElement:
    """``e(C0, K0) * prod_i e(C1i, K1i) * e(C2i, K2i)``."""
    if sk.n != c.n:
        raise IpeError("key and ciphertext dimensions differ")
    if sk.params != c.params:
        raise IpeError("key and ciphertext come from different groups")
    pair = sk.params.pair
    acc = pair(c.C0, sk.K0)
    for i in range(c.n):
        acc = acc * pair(c.C1[i], sk.K1[i]) * pair(c.C2[i], sk.K2[i])
    return acc


def decrypt(sk: IpeSecretKey, c: IpeCiphertext) -> bool | TargetElement:
    """Predicate-only: whether the predicate holds.  Message mode: the recovered element."""
    if sk.mode is not c.mode:
        raise IpeError("key and ciphertext modes differ")
    prod = pairing_product(sk, c)
    if c.mode is Mode.PREDICATE_ONLY:
        return prod.is_identity()
    return c.C_prime * prod


# -- equality encoding ------------------------------------------------------

def equality_attribute(a: int, N: int) -> tuple[int, int]:
    """Attribute vector ``(1, a)``."""
    return (1, a % N)


def equality_predicate(b: int, N: int) -> tuple[int, int]:
    """Predicate vector ``(b, N-1)``; ``<(1, a), (b, N-1)> = b - a (mod N)``."""
    return (b % N, N - 1)


# -- serialization ----------------------------------------------------------

_T_PARAMS, _T_MODE, _T_ELEM, _T_ELEMS, _T_VEC = 0x70, 0x71, 0x72, 0x73, 0x74
_T_P, _T_Q, _T_R = 0x75, 0x76, 0x77
_T_NONE = 0x7F


def _int_bytes(v: int) -> bytes:
    return v.to_bytes(max(1, (v.bit_length() + 7) // 8), "big")


def _read_int(b: bytes) -> int:
    if not b or (len(b) > 1 and b[0] == 0):
        raise TokenError("integer must be minimally encoded")
    return int.from_bytes(b, "big")


def encode_params(params: GroupParams) -> bytes:
    return tlv(_T_P, _int_bytes(params.p)) + tlv(_T_Q, _int_bytes(params.q)) + tlv(_T_R, _int_bytes(params.r))


def decode_params(b: bytes) -> GroupParams:
    rd = Reader(b)
    p, q, r = (_read_int(rd.take(t)) for t in (_T_P, _T_Q, _T_R))
    rd.finish()
    try:
        return GroupParams(p, q, r)
    except ValueError as exc:
        raise TokenError(str(exc)) from None


class _Writer:
    def __init__(self, params: GroupParams, mode: Mode):
        self.width = (params.N.bit_length() + 7) // 8
        self.out = [tlv(_T_PARAMS, encode_params(params)), tlv(_T_MODE, bytes([mode.value]))]

    def elem(self, e):
        self.out.append(tlv(_T_NONE, b"") if e is None else tlv(_T_ELEM, e.value.to_bytes(self.width, "big")))

    def elems(self, es):
        self.out.append(tlv(_T_ELEMS, u32(len(es)) + b"".join(e.value.to_bytes(self.width, "big") for e in es)))

    def ints(self, vs):
        self.out.append(tlv(_T_VEC, u32(len(vs)) + b"".join(v.to_bytes(self.width, "big") for v in vs)))

    def bytes(self) -> bytes:
        return b"".join(self.out)


class _Parser:
    def __init__(self, data: bytes):
        self.rd = Reader(data)
        self.params = decode_params(self.rd.take(_T_PARAMS))
        try:
            self.mode = Mode(self.rd.take(_T_MODE, 1)[0])
        except ValueError:
            raise TokenError("unknown predicate-encryption mode") from None
        self.width = (self.params.N.bit_length() + 7) // 8

    def _value(self, b: bytes) -> int:
        v = int.from_bytes(b, "big")
        if v >= self.params.N:
            raise TokenError("group element out of range")
        return v

    def elem(self, cls, optional=False):
        if optional and self.rd.peek_tag() == _T_NONE:
            self.rd.take(_T_NONE, 0)
            return None
        return cls(self.params, self._value(self.rd.take(_T_ELEM, self.width)))

    def _list(self, tag):
        b = self.rd.take(tag)
        if len(b) < 4:
            raise TokenError("truncated input")
        count = read_u32(b[:4])
        body = b[4:]
        if len(body) != count * self.width:
            raise TokenError("element list length mismatch")
        return [self._value(body[i:i + self.width]) for i in range(0, len(body), self.width)]

    def elems(self):
        return tuple(GroupElement(self.params, v) for v in self._list(_T_ELEMS))

    def ints(self):
        return tuple(self._list(_T_VEC))

    def finish(self):
        self.rd.finish()


def encode_public_key(pk: IpePublicKey) -> bytes:
    w = _Writer(pk.params, pk.mode)
    for e in (pk.g_p, pk.g_r, pk.Q):
        w.elem(e)
    w.elem(pk.P)
    w.elems(pk.H1)
    w.elems(pk.H2)
    return w.bytes()


def decode_public_key(data: bytes) -> IpePublicKey:
    ps = _Parser(data)
    g_p, g_r, Q = (ps.elem(GroupElement) for _ in range(3))
    P = ps.elem(TargetElement, optional=True)
    H1, H2 = ps.elems(), ps.elems()
    ps.finish()
    if len(H1) != len(H2) or not H1:
        raise TokenError("public key lists must have equal nonzero length")
    return IpePublicKey(ps.params, ps.mode, g_p, g_r, Q, H1, H2, P)


def encode_master_secret(msk: IpeMasterSecret) -> bytes:
    w = _Writer(msk.params, msk.mode)
    for e in (msk.g_p, msk.g_q, msk.g_r):
        w.elem(e)
    w.elem(msk.h_gamma_inv)
    w.elems(msk.h1)
    w.elems(msk.h2)
    return w.bytes()


def decode_master_secret(data: bytes) -> IpeMasterSecret:
    ps = _Parser(data)
    g_p, g_q, g_r = (ps.elem(GroupElement) for _ in range(3))
    hg = ps.elem(GroupElement, optional=True)
    h1, h2 = ps.elems(), ps.elems()
    ps.finish()
    if len(h1) != len(h2) or not h1:
        raise TokenError("master key lists must have equal nonzero length")
    return IpeMasterSecret(ps.params, ps.mode, g_p, g_q, g_r, h1, h2, hg)


def encode_secret_key(sk: IpeSecretKey) -> bytes:
    w = _Writer(sk.params, sk.mode)
    w.elem(sk.K0)
    w.elems(sk.K1)
    w.elems(sk.K2)
    w.ints(sk.v)
    return w.bytes()


def decode_secret_key(data: bytes) -> IpeSecretKey:
    ps = _Parser(data)
    K0 = ps.elem(GroupElement)
    K1, K2 = ps.elems(), ps.elems()
    v = ps.ints()
    ps.finish()
    if len(K1) != len(K2) or not K1:
        raise TokenError("secret key lists must have equal nonzero length")
    return IpeSecretKey(ps.params, ps.mode, K0, K1, K2, v)


def encode_ciphertext(c: IpeCiphertext) -> bytes:
    w = _Writer(c.params, c.mode)
    w.elem(c.C_prime)
    w.elem(c.C0)
    w.elems(c.C1)
    w.elems(c.C2)
    return w.bytes()


def decode_ciphertext(data: bytes) -> IpeCiphertext:
    ps = _Parser(data)
    C_prime = ps.elem(TargetElement, optional=True)
    C0 = ps.elem(GroupElement)
    C1, C2 = ps.elems(), ps.elems()
    ps.finish()
    if len(C1) != len(C2) or not C1:
        raise TokenError("ciphertext lists must have equal nonzero length")
    if (C_prime is None) != (ps.mode is Mode.PREDICATE_ONLY):
        raise TokenError("ciphertext mode and C' presence disagree")
    return IpeCiphertext(ps.params, ps.mode, C0, C1, C2, C_prime)
