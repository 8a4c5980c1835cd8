import random

import pytest
from hypothesis import given, settings, strategies as st

from ubic import bgroup, ipe
from ubic.tokens import TokenError

from oracles import inner_product_is_zero as oracle, orthogonal


@pytest.mark.parametrize("mode", list(ipe.Mode))
def test_setup_structure(group32, mode):
    pk, msk = ipe.setup(group32, 1, mode, random.Random(1))
    assert len(pk.H1) == len(pk.H2) == 1
    assert (pk.P is not None) == (mode is ipe.Mode.MESSAGE)
    assert (msk.h_gamma_inv is not None) == (mode is ipe.Mode.MESSAGE)


def test_public_h_components_differ_from_master_by_r_part(group32):
    pk, msk = ipe.setup(group32, 3, ipe.Mode.MESSAGE, random.Random(2))
    G = group32
    for H, h in zip(pk.H1 + pk.H2, msk.h1 + msk.h2):
        residue = (H / h).value
        assert residue % (G.p * G.q) == 0


def test_rejects_bad_dimensions(group32, message_scheme):
    pk, msk = message_scheme
    with pytest.raises(ipe.IpeError):
        ipe.setup(group32, 0)
    with pytest.raises(ipe.IpeError):
        ipe.keygen(msk, [1, 2, 3])
    with pytest.raises(ipe.IpeError):
        ipe.encrypt(pk, [1], group32.random_target(random.Random(1)))


def test_mode_and_message_must_agree(group32, message_scheme):
    pk, _ = message_scheme
    with pytest.raises(ipe.IpeError):
        ipe.encrypt(pk, [1, 1])
    po_pk, _ = ipe.setup(group32, 2, ipe.Mode.PREDICATE_ONLY, random.Random(3))
    with pytest.raises(ipe.IpeError):
        ipe.encrypt(po_pk, [1, 1], group32.random_target(random.Random(1)))


def test_component_counts(group32):
    for n in (1, 4):
        for mode in ipe.Mode:
            pk, msk = ipe.setup(group32, n, mode, random.Random(n))
            sk = ipe.keygen(msk, [0] * n, random.Random(1))
            m = group32.random_target(random.Random(2)) if mode is ipe.Mode.MESSAGE else None
            c = ipe.encrypt(pk, [1] * n, m, random.Random(3))
            assert 1 + len(sk.K1) + len(sk.K2) == 1 + 2 * n
            extra = 1 if mode is ipe.Mode.MESSAGE else 0
            assert 1 + len(c.C1) + len(c.C2) + (c.C_prime is not None) == 1 + 2 * n + extra


def test_zero_predicate_matches_everything(group32, message_scheme):
    pk, msk = message_scheme
    rng = random.Random(4)
    sk = ipe.keygen(msk, [0, 0], rng)
    for _ in range(20):
        m = group32.random_target(rng)
        x = [rng.randrange(group32.N) for _ in range(2)]
        assert ipe.decrypt(sk, ipe.encrypt(pk, x, m, rng)) == m


def test_worked_examples(group32):
    N = group32.N
    rng = random.Random(5)
    pk, msk = ipe.setup(group32, 2, ipe.Mode.PREDICATE_ONLY, rng)
    assert ipe.decrypt(ipe.keygen(msk, (1, N - 1), rng), ipe.encrypt(pk, (1, 1), rng=rng)) is True
    sk = ipe.keygen(msk, (1, 1), rng)
    assert oracle((1, N - 1), (1, 1), N) and not oracle((1, 1), (1, 1), N)
    assert ipe.decrypt(sk, ipe.encrypt(pk, (1, N - 1), rng=rng)) is True
    assert ipe.decrypt(sk, ipe.encrypt(pk, (1, 1), rng=rng)) is False


def test_message_mode_recovers_message_exactly(group32, message_scheme):
    pk, msk = message_scheme
    rng = random.Random(6)
    x = [rng.randrange(1, group32.N) for _ in range(2)]
    sk = ipe.keygen(msk, orthogonal(x, group32.N, rng), rng)
    m = group32.random_target(rng)
    assert ipe.decrypt(sk, ipe.encrypt(pk, x, m, rng)) == m
    wrong = ipe.keygen(msk, [1, 1], rng)
    assert ipe.decrypt(wrong, ipe.encrypt(pk, x, m, rng)) != m


def test_encryption_is_probabilistic(group32, message_scheme):
    pk, _ = message_scheme
    m = group32.random_target(random.Random(1))
    assert ipe.encrypt(pk, [1, 2], m, random.Random(1)) != ipe.encrypt(pk, [1, 2], m, random.Random(2))


def test_independent_keys_agree_on_100_ciphertexts(group32):
    rng = random.Random(8)
    N = group32.N
    pk, msk = ipe.setup(group32, 3, ipe.Mode.PREDICATE_ONLY, rng)
    v = [rng.randrange(N) for _ in range(3)]
    k1, k2 = ipe.keygen(msk, v, random.Random(100)), ipe.keygen(msk, v, random.Random(200))
    assert k1 != k2
    for t in range(100):
        x = orthogonal([rng.randrange(1, N) for _ in range(2)] + [v[-1] or 1], N, rng) if t % 2 else \
            [rng.randrange(N) for _ in range(3)]
        c = ipe.encrypt(pk, x, rng=rng)
        assert ipe.decrypt(k1, c) == ipe.decrypt(k2, c) == oracle(x, v, N)


def test_pairing_product_is_linear_in_the_predicate(group32):
    """With shared key randomness the product exponent is linear in v and lives in G_q."""
    rng = random.Random(9)
    G = group32
    pk, msk = ipe.setup(G, 3, ipe.Mode.PREDICATE_ONLY, rng)
    x = [rng.randrange(G.N) for _ in range(3)]
    c = ipe.encrypt(pk, x, rng=rng)
    v = [rng.randrange(G.N) for _ in range(3)]
    w = [rng.randrange(G.N) for _ in range(3)]
    vw = [(a + b) % G.N for a, b in zip(v, w)]
    P = {name: ipe.pairing_product(ipe.keygen(msk, vec, random.Random(42)), c)
         for name, vec in (("v", v), ("w", w), ("vw", vw), ("0", [0, 0, 0]))}
    assert P["0"].is_identity()
    assert P["v"] * P["w"] == P["vw"]
    assert P["v"].value % (G.p * G.r) == 0
    assert not P["v"].is_identity()


def test_correctness_sweep_against_integer_oracle():
    rng = random.Random(2024)
    groups = [bgroup.group_gen(32, rng) for _ in range(3)]
    failures = 0
    trials = 0
    for mode in ipe.Mode:
        for t in range(500):
            G = groups[t % 3]
            N = G.N
            n = rng.randint(1, 6)
            pk, msk = ipe.setup(G, n, mode, rng)
            x = [rng.randrange(1, N) for _ in range(n)]
            v = orthogonal(x, N, rng) if t % 2 else [rng.randrange(N) for _ in range(n)]
            m = G.random_target(rng) if mode is ipe.Mode.MESSAGE else None
            out = ipe.decrypt(ipe.keygen(msk, v, rng), ipe.encrypt(pk, x, m, rng))
            got = out if mode is ipe.Mode.PREDICATE_ONLY else out == m
            failures += got != oracle(x, v, N)
            trials += 1
    assert trials >= 1000 and failures == 0


def test_equality_encoding(group32):
    N = group32.N
    for a, b in ((5, 5), (5, 6), (0, N - 1)):
        x, v = ipe.equality_attribute(a, N), ipe.equality_predicate(b, N)
        assert oracle(x, v, N) == (a % N == b % N)


def test_serialization_round_trip(group32, message_scheme):
    pk, msk = message_scheme
    rng = random.Random(10)
    sk = ipe.keygen(msk, [3, 4], rng)
    c = ipe.encrypt(pk, [4, 3], group32.random_target(rng), rng)
    assert ipe.decode_public_key(ipe.encode_public_key(pk)) == pk
    assert ipe.decode_master_secret(ipe.encode_master_secret(msk)) == msk
    assert ipe.decode_secret_key(ipe.encode_secret_key(sk)) == sk
    assert ipe.decode_ciphertext(ipe.encode_ciphertext(c)) == c
    assert ipe.decode_params(ipe.encode_params(group32)) == group32
    po_pk, _ = ipe.setup(group32, 1, ipe.Mode.PREDICATE_ONLY, rng)
    assert ipe.decode_public_key(ipe.encode_public_key(po_pk)) == po_pk


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_decoders_reject_garbage_cleanly(data):
    for decode in (ipe.decode_public_key, ipe.decode_secret_key, ipe.decode_ciphertext,
                   ipe.decode_master_secret):
        try:
            decode(data)
        except (TokenError, ipe.IpeError):
            pass


def test_mutated_encodings_fail_with_typed_errors(group32, message_scheme):
    pk, msk = message_scheme
    rng = random.Random(12)
    sk = ipe.keygen(msk, [1, 2], rng)
    c = ipe.encrypt(pk, [2, 3], group32.random_target(rng), rng)
    cases = [(ipe.encode_public_key(pk), ipe.decode_public_key),
             (ipe.encode_secret_key(sk), ipe.decode_secret_key),
             (ipe.encode_ciphertext(c), ipe.decode_ciphertext),
             (ipe.encode_master_secret(msk), ipe.decode_master_secret)]
    for enc, dec in cases:
        for _ in range(500):
            b = bytearray(enc)
            kind = rng.randrange(3)
            if kind == 0:
                b[rng.randrange(len(b))] ^= 1 << rng.randrange(8)
            elif kind == 1:
                del b[rng.randrange(len(b)):]
            else:
                b.insert(rng.randrange(len(b)), rng.randrange(256))
            try:
                dec(bytes(b))
            except (TokenError, ipe.IpeError):
                pass
