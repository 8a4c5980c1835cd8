import itertools
import random

import pytest

from ubic import codec, hiding, ipe, primitives
from ubic.hiding import ChunkStatus, HeaderUnreadable, HiddenDocument, WrongKey
from ubic.tokens import ChunkToken, HideHeader, decode_as


@pytest.fixture
def alice(rng):
    return primitives.pke_keygen(rng)


def test_round_trip(alice, rng):
    m = rng.randbytes(3000)
    doc = hiding.hide_encrypt(m, ek=alice.ek, rng=rng)
    rec = hiding.hide_decrypt(doc, dk=alice.dk)
    assert rec.joined() == m and not rec.damaged


def test_chunk_count(alice, rng):
    doc = hiding.hide_encrypt(bytes(10 * 1024), ek=alice.ek, chunk_size=512, rng=rng)
    assert len(doc.chunks) == 20
    assert decode_as(doc.header, HideHeader).chunk_count == 20


def test_bad_arguments(alice, rng, message_scheme):
    with pytest.raises(ValueError):
        hiding.hide_encrypt(b"", ek=alice.ek, rng=rng)
    with pytest.raises(ValueError):
        hiding.hide_encrypt(b"x", rng=rng)
    with pytest.raises(ValueError):
        hiding.hide_encrypt(b"x", ek=alice.ek, chunk_size=codec.byte_capacity("M"), rng=rng)
    with pytest.raises(ValueError):
        hiding.hide_encrypt(b"x", mpk=message_scheme[0], rng=rng)


def test_largest_chunk_fits_a_code(alice, rng):
    size = codec.byte_capacity("H") - hiding.CHUNK_TOKEN_OVERHEAD
    doc = hiding.hide_encrypt(bytes(size), ek=alice.ek, chunk_size=size, ec="H", rng=rng)
    assert len(doc.chunks[0]) == codec.byte_capacity("H")
    codec.encode_visual(doc.chunks[0], "H")


def test_wrong_recipient_fails_at_header(alice, rng):
    doc = hiding.hide_encrypt(b"secret", ek=alice.ek, rng=rng)
    with pytest.raises(WrongKey):
        hiding.hide_decrypt(doc, dk=primitives.pke_keygen(rng).dk)
    with pytest.raises(WrongKey):
        hiding.hide_decrypt(doc)


def _damage(chunk: bytes, rng) -> bytes | None:
    if rng.random() < 0.5:
        return None
    b = bytearray(chunk)
    b[rng.randrange(len(b))] ^= 0x40
    return bytes(b)


def test_every_damage_subset_of_six_chunks(alice):
    rng = random.Random(1)
    m = rng.randbytes(6 * 100)
    doc = hiding.hide_encrypt(m, ek=alice.ek, chunk_size=100, rng=rng)
    parts = [m[i * 100:(i + 1) * 100] for i in range(6)]
    for size in range(7):
        for subset in itertools.combinations(range(1, 7), size):
            chunks = [(_damage(c, rng) if i in subset else c) for i, c in enumerate(doc.chunks, 1)]
            rec = hiding.hide_decrypt(HiddenDocument(doc.header, chunks), dk=alice.dk)
            assert rec.damaged == list(subset)
            assert rec.plaintexts == {i: parts[i - 1] for i in range(1, 7) if i not in subset}


def test_random_damage_on_long_documents(alice):
    rng = random.Random(2)
    doc = hiding.hide_encrypt(rng.randbytes(40 * 50), ek=alice.ek, chunk_size=50, rng=rng)
    for _ in range(50):
        subset = set(rng.sample(range(1, 41), rng.randint(0, 40)))
        chunks = [(_damage(c, rng) if i in subset else c) for i, c in enumerate(doc.chunks, 1)]
        rec = hiding.hide_decrypt(HiddenDocument(doc.header, chunks), dk=alice.dk)
        assert set(rec.damaged) == subset and set(rec.plaintexts) == set(range(1, 41)) - subset


def test_destroying_two_of_ten(alice, rng):
    doc = hiding.hide_encrypt(rng.randbytes(5000), ek=alice.ek, chunk_size=500, rng=rng)
    chunks = list(doc.chunks)
    chunks[1] = chunks[4] = None
    rec = hiding.hide_decrypt(HiddenDocument(doc.header, chunks), dk=alice.dk)
    assert len(rec.plaintexts) == 8 and rec.damaged == [2, 5]
    assert rec.status[2] is ChunkStatus.DAMAGED and rec.status[1] is ChunkStatus.OK


def test_transplanted_chunks_are_flagged(alice, rng):
    a = hiding.hide_encrypt(rng.randbytes(1000), ek=alice.ek, chunk_size=100, rng=rng)
    b = hiding.hide_encrypt(rng.randbytes(1000), ek=alice.ek, chunk_size=100, rng=rng)
    chunks = list(a.chunks)
    chunks[3] = a.chunks[6]          # same document, wrong slot
    chunks[5] = b.chunks[5]          # other document, same slot
    relabeled = decode_as(a.chunks[8], ChunkToken)
    chunks[2] = ChunkToken(3, relabeled.ciphertext).encode()   # index rewritten
    rec = hiding.hide_decrypt(HiddenDocument(a.header, chunks), dk=alice.dk)
    assert rec.damaged == [3, 4, 6]


def test_partial_decryption_touches_only_the_wanted_chunk(alice, rng):
    m = rng.randbytes(10 * 64)
    doc = hiding.hide_encrypt(m, ek=alice.ek, chunk_size=64, rng=rng)

    class Watched(list):
        touched = []

        def __getitem__(self, i):
            self.touched.append(i)
            return super().__getitem__(i)

    chunks = Watched(doc.chunks)
    rec = hiding.hide_decrypt(HiddenDocument(doc.header, chunks), dk=alice.dk, wanted=[7])
    assert rec.plaintexts == {7: m[6 * 64:7 * 64]}
    assert Watched.touched == [6]
    with pytest.raises(ValueError):
        hiding.hide_decrypt(doc, dk=alice.dk, wanted=[11])


def test_destroyed_header(alice, rng):
    doc = hiding.hide_encrypt(b"x" * 100, ek=alice.ek, rng=rng)
    with pytest.raises(HeaderUnreadable):
        hiding.hide_decrypt(HiddenDocument(None, doc.chunks), dk=alice.dk)
    with pytest.raises(HeaderUnreadable):
        hiding.hide_decrypt(HiddenDocument(doc.header[:-3], doc.chunks), dk=alice.dk)


def test_header_key_tamper_is_a_wrong_key(alice, rng):
    doc = hiding.hide_encrypt(b"x" * 100, ek=alice.ek, rng=rng)
    h = decode_as(doc.header, HideHeader)
    bad = HideHeader(h.doc_nonce, h.chunk_count, h.predicate, h.key, bytes(16))
    with pytest.raises(WrongKey):
        hiding.hide_decrypt(HiddenDocument(bad.encode(), doc.chunks), dk=alice.dk)


# -- predicate mode -----------------------------------------------------------

def test_predicate_mode_matching_and_non_matching(message_scheme, rng):
    pk, msk = message_scheme
    N = pk.params.N
    doc = hiding.hide_encrypt(b"staff only", mpk=pk, attribute=hiding.attribute_vector("Emp", N), rng=rng)
    good = ipe.keygen(msk, hiding.predicate_vector("Emp", N), rng)
    bad = ipe.keygen(msk, hiding.predicate_vector("Stud", N), rng)
    assert hiding.hide_decrypt(doc, sk=good).joined() == b"staff only"
    with pytest.raises(WrongKey):
        hiding.hide_decrypt(doc, sk=bad)
    with pytest.raises(WrongKey):
        hiding.hide_decrypt(doc, dk=primitives.pke_keygen(rng).dk)


ALLOWED = {("Prof", "Prof"), ("Prof", "Emp"), ("Prof", "Stud"), ("Emp", "Emp"), ("Stud", "Stud")}


def test_toy_policy_access_matrix(message_scheme, rng):
    pk, msk = message_scheme
    N = pk.params.N
    keys = {role: hiding.clearance_keys(msk, role, rng=rng) for role in hiding.TOY_POLICY}
    for label in hiding.TOY_POLICY:
        m = f"{label} material".encode()
        doc = hiding.hide_encrypt(m, mpk=pk, attribute=hiding.attribute_vector(label, N), rng=rng)
        for role in hiding.TOY_POLICY:
            if (role, label) in ALLOWED:
                assert hiding.hide_decrypt(doc, sk=keys[role]).joined() == m
            else:
                with pytest.raises(WrongKey):
                    hiding.hide_decrypt(doc, sk=keys[role])


def test_keys_from_another_authority_are_ignored(message_scheme, group32, rng):
    pk, _ = message_scheme
    _, other_msk = ipe.setup(group32, 2, ipe.Mode.MESSAGE, random.Random(99))
    N = pk.params.N
    doc = hiding.hide_encrypt(b"m", mpk=pk, attribute=hiding.attribute_vector("Emp", N), rng=rng)
    with pytest.raises(WrongKey):
        hiding.hide_decrypt(doc, sk=hiding.clearance_keys(other_msk, "Prof", rng=rng))


@pytest.mark.parametrize("transport", ["loopback", "qr"])
def test_saved_hidden_document(alice, rng, tmp_path, transport):
    m = rng.randbytes(1200)
    doc = hiding.hide_encrypt(m, ek=alice.ek, chunk_size=400, rng=rng)
    path = hiding.save_hidden(doc, tmp_path / "h", codec.transport(transport))
    assert hiding.hide_decrypt(hiding.load_hidden(path), dk=alice.dk).joined() == m
    next(path.glob("chunk-2.*")).unlink()
    rec = hiding.hide_decrypt(hiding.load_hidden(path), dk=alice.dk)
    assert rec.damaged == [2] and set(rec.plaintexts) == {1, 3}
    next(path.glob("header.*")).unlink()
    with pytest.raises(HeaderUnreadable):
        hiding.hide_decrypt(hiding.load_hidden(path), dk=alice.dk)
