import random

import pytest

from ubic import ident, primitives
from ubic.directory import Directory, DirectoryTampered, Role, make_id
from ubic.tokens import IdentHeader, decode_as

NOW = 1_700_000_000


@pytest.fixture
def sc(rng):
    return ident.build_scenario(rng)


def run(sc, rng, now=NOW):
    hdr = sc.near.issue_challenge(sc.user.uid, now, rng)
    resp = sc.user.answer_challenge(hdr, now, sc.near.gps)
    return sc.near.check_response(sc.user.uid, resp, now)


def resign(token, header):
    return IdentHeader(header.tid, header.uid, header.gps, header.enc_challenge, header.timestamp,
                       primitives.sign(token.keys.sk, header.signed_bytes())).encode()


def test_completeness_over_many_seeds():
    for seed in range(200):
        rng = random.Random(seed)
        assert run(ident.build_scenario(rng), rng)


def test_header_fields_and_signature(sc, rng):
    raw = sc.near.issue_challenge(sc.user.uid, NOW, rng)
    h = decode_as(raw, IdentHeader)
    assert (h.tid, h.uid, h.gps, h.timestamp) == (sc.near.tid, sc.user.uid, sc.near.gps, NOW)
    assert primitives.verify(sc.near.keys.vk, h.signed_bytes(), h.signature)
    assert len(h.enc_challenge) == sc.near.policy.digits + primitives.PKE_OVERHEAD


def test_unknown_uid(sc, rng):
    with pytest.raises(KeyError):
        sc.near.issue_challenge(make_id("mallory"), NOW, rng)


def test_second_issue_replaces_first(sc, rng):
    first = sc.near.issue_challenge(sc.user.uid, NOW, rng)
    sc.near.issue_challenge(sc.user.uid, NOW, rng)
    old = sc.user.answer_challenge(first, NOW, sc.near.gps)
    pending = sc.near.pending[sc.user.uid].challenge.display
    assert old != pending  # the seeded draws differ
    assert not sc.near.check_response(sc.user.uid, old, NOW)


def test_response_checks(sc, rng):
    hdr = sc.near.issue_challenge(sc.user.uid, NOW, rng)
    resp = sc.user.answer_challenge(hdr, NOW, sc.near.gps)
    assert sc.near.check_response(sc.user.uid, resp, NOW + 5)
    with pytest.raises(ident.NoPendingChallenge):
        sc.near.check_response(sc.user.uid, resp, NOW + 6)

    sc.near.issue_challenge(sc.user.uid, NOW, rng)
    assert not sc.near.check_response(sc.user.uid, "000000" if resp != "000000" else "111111", NOW)

    hdr = sc.near.issue_challenge(sc.user.uid, NOW, rng)
    resp = sc.user.answer_challenge(hdr, NOW, sc.near.gps)
    assert not sc.near.check_response(sc.user.uid, resp, NOW + 121)


def test_challenge_digits_are_configurable(rng):
    policy = ident.Policy(digits=9)
    sc = ident.build_scenario(rng, policy=policy)
    hdr = sc.near.issue_challenge(sc.user.uid, NOW, rng)
    resp = sc.user.answer_challenge(hdr, NOW, sc.near.gps)
    assert len(resp) == 9 and resp.isdigit()


def test_user_side_error_classes(sc, rng):
    uid, user = sc.user.uid, sc.user
    hdr = decode_as(sc.near.issue_challenge(uid, NOW, rng), IdentHeader)

    with pytest.raises(ident.BadSignature):
        user.answer_challenge(resign(ident.Token(sc.near.tid, primitives.sig_keygen(rng), (0, 0),
                                                 sc.directory), hdr), NOW, sc.near.gps)
    with pytest.raises(ident.BadSignature):
        user.answer_challenge(b"garbage", NOW, sc.near.gps)
    with pytest.raises(ident.StaleTimestamp):
        user.answer_challenge(hdr.encode(), NOW + 121, sc.near.gps)
    with pytest.raises(ident.LocationMismatch):
        user.answer_challenge(sc.far.issue_challenge(uid, NOW, rng), NOW, sc.near.gps)
    with pytest.raises(ident.DecryptFailed):
        bad = IdentHeader(hdr.tid, hdr.uid, hdr.gps, hdr.enc_challenge[:-1] + b"\0", hdr.timestamp)
        user.answer_challenge(resign(sc.near, bad), NOW, sc.near.gps)


def test_unknown_token_is_a_bad_signature(sc, rng):
    stranger = ident.Token(make_id("atm-x"), primitives.sig_keygen(rng), sc.near.gps, sc.directory)
    with pytest.raises(ident.BadSignature):
        sc.user.answer_challenge(stranger.issue_challenge(sc.user.uid, NOW, rng), NOW, sc.near.gps)


def test_location_radius_boundary():
    here = ident.to_microdegrees(49.0, 7.0)
    north = (here[0] + 4_000, here[1])  # about 445 m
    assert 440 < ident.haversine_m(here, north) < 450
    assert ident.haversine_m(here, here) == 0


def _tamper_field(h: IdentHeader, field: str, rng: random.Random, other_uid: bytes) -> IdentHeader:
    vals = dict(tid=h.tid, uid=h.uid, gps=h.gps, enc_challenge=h.enc_challenge,
                timestamp=h.timestamp, signature=h.signature)
    if field == "tid":
        vals["tid"] = make_id("atm-far")
    elif field == "uid":
        vals["uid"] = other_uid
    elif field == "gps":
        vals["gps"] = (h.gps[0] + rng.randrange(10_000, 1_000_000), h.gps[1])
    elif field == "enc_challenge":
        b = bytearray(h.enc_challenge)
        b[rng.randrange(len(b))] ^= rng.randrange(1, 256)
        vals["enc_challenge"] = bytes(b)
    elif field == "timestamp":
        vals["timestamp"] = h.timestamp + rng.choice([-1, 1]) * rng.randrange(121, 10 ** 6)
    else:
        b = bytearray(h.signature)
        b[rng.randrange(len(b))] ^= rng.randrange(1, 256)
        vals["signature"] = bytes(b)
    return IdentHeader(**vals)


FIELDS = ["tid", "uid", "gps", "enc_challenge", "timestamp", "signature"]
RESIGNED_EXPECTATION = {"uid": ident.DecryptFailed, "gps": ident.LocationMismatch,
                        "enc_challenge": ident.DecryptFailed, "timestamp": ident.StaleTimestamp}


def test_random_single_field_tampering_is_always_rejected(rng):
    sc = ident.build_scenario(rng)
    bob = make_id("bob")
    sc.directory.register(bob, Role.USER, primitives.pke_keygen(rng).ek)
    for trial in range(600):
        h = decode_as(sc.near.issue_challenge(sc.user.uid, NOW, rng), IdentHeader)
        field = FIELDS[trial % len(FIELDS)]
        forged = _tamper_field(h, field, rng, bob)
        # an outsider cannot re-sign: every change breaks the signature
        with pytest.raises(ident.BadSignature):
            sc.user.answer_challenge(forged.encode(), NOW, sc.near.gps)
        # a holder of the token key re-signing the change still hits the dedicated check
        if field in RESIGNED_EXPECTATION:
            with pytest.raises(RESIGNED_EXPECTATION[field]):
                sc.user.answer_challenge(resign(sc.near, forged), NOW, sc.near.gps)


def test_rewrapped_challenge_from_other_token_does_not_decrypt(rng):
    """A compromised near token re-signs the far token's challenge as its own."""
    assert ident.simulate_adversary("active", 200, rng) == 0


def test_adversary_simulations(rng):
    assert ident.simulate_adversary("mitm", 300, rng, separation_m=10_000) == 0
    assert ident.simulate_adversary("passive", 3000, rng) <= 1
    # relaying between tokens standing next to each other works: the scheme assumes distinct places
    assert ident.simulate_adversary("mitm", 50, rng, separation_m=100) == 50
    with pytest.raises(ValueError):
        ident.simulate_adversary("telepathy", 1, rng)


def test_directory_round_trip_and_tamper(rng):
    root = primitives.sig_keygen(rng)
    d = Directory()
    d.register(make_id("alice"), Role.USER, b"k" * 32)
    d.register(make_id("atm"), Role.TOKEN, b"v" * 32)
    data = d.encode(root)
    back = Directory.decode(data, root.vk)
    assert back.records() == d.records()
    i = data.index(b"k" * 32)
    with pytest.raises(DirectoryTampered):
        Directory.decode(data[:i] + b"K" + data[i + 1:], root.vk)
    with pytest.raises(DirectoryTampered):
        Directory.decode(data, primitives.sig_keygen(rng).vk)
