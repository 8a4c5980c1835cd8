"""Challenge-response identification in front of a token (ATM, door).

1. The user announces ``uid``.  The token looks up the user's encryption
   key, draws a random decimal challenge, encrypts it for the user and
   shows a signed :class:`~ubic.tokens.IdentHeader` carrying its own id,
   GPS position and a timestamp.
2. The user checks the signature against the directory, the freshness of
   the timestamp and that the signed position is close to where they
   stand, then decrypts the challenge and types it on the keypad.
3. The token accepts iff the digits match the pending challenge and the
   challenge is still fresh.  Each challenge is consumed by its first
   answer attempt.

The challenge ciphertext is bound to ``tid | uid`` as associated data, so
a challenge issued by one token cannot be re-wrapped into another token's
header and still decrypt.
"""

from __future__ import annotations

import hmac
import math
import random
import threading
import time
from dataclasses import dataclass, field

from . import primitives
from .directory import Directory, Role, UnknownIdentity, make_id
from .errors import Rejected
from .tokens import IdentHeader, TokenError, decode_as

EARTH_RADIUS_M = 6_371_008.8


class IdentError(Rejected):
    code = "ident.rejected"


class BadSignature(IdentError):
    code = "ident.bad-signature"


class StaleTimestamp(IdentError):
    code = "ident.stale-timestamp"


class LocationMismatch(IdentError):
    code = "ident.location-mismatch"


class DecryptFailed(IdentError):
    code = "ident.decrypt-failed"


class NoPendingChallenge(IdentError):
    code = "ident.no-pending-challenge"


@dataclass(frozen=True)
class Policy:
    freshness_s: int = 120
    radius_m: float = 500.0
    digits: int = 6


def to_microdegrees(lat: float, lon: float) -> tuple[int, int]:
    return round(lat * 1e6), round(lon * 1e6)


def haversine_m(a: tuple[int, int], b: tuple[int, int]) -> float:
    """Great-circle distance in metres between two micro-degree positions."""
    lat1, lon1, lat2, lon2 = (math.radians(v / 1e6) for v in (*a, *b))
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def challenge_aad(tid: bytes, uid: bytes) -> bytes:
    return b"ubic/ident/v1" + tid + uid


@dataclass(frozen=True)
class Challenge:
    display: str

    @property
    def ch(self) -> bytes:
        return self.display.encode("ascii")


@dataclass
class PendingChallenge:
    challenge: Challenge
    issued_at: float


@dataclass
class Token:
    """Token-side state: signing keys, position and pending challenges."""

    tid: bytes
    keys: primitives.SigKeyPair
    gps: tuple[int, int]
    directory: Directory
    policy: Policy = field(default_factory=Policy)
    pending: dict[bytes, PendingChallenge] = field(default_factory=dict)

    def __post_init__(self):
        self._lock = threading.Lock()

    def issue_challenge(self, uid: bytes, now: float | None = None,
                        rng: random.Random | None = None) -> bytes:
        """Encoded, signed identification header for ``uid``."""
        rng = rng if rng is not None else random.SystemRandom()
        now = time.time() if now is None else now
        ek = self.directory.lookup(uid, Role.USER)
        challenge = Challenge(f"{rng.randrange(10 ** self.policy.digits):0{self.policy.digits}d}")
        enc = primitives.pke_encrypt(ek, challenge.ch, rng, challenge_aad(self.tid, uid))
        header = IdentHeader(self.tid, uid, self.gps, enc, int(now))
        header = IdentHeader(self.tid, uid, self.gps, enc, int(now),
                             primitives.sign(self.keys.sk, header.signed_bytes()))
        with self._lock:
            self.pending[uid] = PendingChallenge(challenge, now)
        return header.encode()

    def check_response(self, uid: bytes, response: str, now: float | None = None) -> bool:
        now = time.time() if now is None else now
        with self._lock:
            entry = self.pending.pop(uid, None)
        if entry is None:
            raise NoPendingChallenge(f"no pending challenge for this user")
        fresh = now - entry.issued_at <= self.policy.freshness_s
        return fresh and hmac.compare_digest(response.encode(), entry.challenge.ch)


@dataclass
class User:
    """User-side state: decryption key, trusted directory and policy."""

    uid: bytes
    keys: primitives.PkeKeyPair
    directory: Directory
    policy: Policy = field(default_factory=Policy)

    def answer_challenge(self, header_bytes: bytes, now: float | None = None,
                         here: tuple[int, int] | None = None) -> str:
        """Run every user-side check and return the challenge digits."""
        now = time.time() if now is None else now
        try:
            header = decode_as(header_bytes, IdentHeader)
        except TokenError as exc:
            raise BadSignature(f"unreadable header: {exc}") from None
        try:
            vk = self.directory.lookup(header.tid, Role.TOKEN)
        except UnknownIdentity:
            raise BadSignature("header signed by an unknown token") from None
        if not primitives.verify(vk, header.signed_bytes(), header.signature):
            raise BadSignature("header signature does not verify")
        if abs(now - header.timestamp) > self.policy.freshness_s:
            raise StaleTimestamp(f"header is {abs(now - header.timestamp):.0f} s old")
        if here is not None:
            dist = haversine_m(here, header.gps)
            if dist > self.policy.radius_m:
                raise LocationMismatch(f"token claims a position {dist:.0f} m away")
        if header.uid != self.uid:
            raise DecryptFailed("challenge is addressed to another user")
        try:
            ch = primitives.pke_decrypt(self.keys.dk, header.enc_challenge,
                                        challenge_aad(header.tid, header.uid))
        except primitives.AuthenticationError:
            raise DecryptFailed("challenge does not decrypt") from None
        display = ch.decode("ascii", errors="replace")
        if not display.isdigit() or len(display) != self.policy.digits:
            raise DecryptFailed("decrypted challenge is malformed")
        return display


# -- adversary simulation ----------------------------------------------------

@dataclass
class Scenario:
    """Two tokens, one user standing next to the first, sharing one directory."""

    directory: Directory
    user: User
    near: Token
    far: Token


def build_scenario(rng: random.Random, separation_m: float = 10_000.0,
                   policy: Policy | None = None) -> Scenario:
    policy = policy or Policy()
    home = to_microdegrees(49.2577, 7.0450)
    # displace the second token due north
    far = (home[0] + round(separation_m / EARTH_RADIUS_M * 180 / math.pi * 1e6), home[1])
    directory = Directory()
    uid = make_id("alice")
    user_keys = primitives.pke_keygen(rng)
    directory.register(uid, Role.USER, user_keys.ek)
    tokens = []
    for name, pos in (("atm-near", home), ("atm-far", far)):
        keys = primitives.sig_keygen(rng)
        directory.register(make_id(name), Role.TOKEN, keys.vk)
        tokens.append(Token(make_id(name), keys, pos, directory, policy))
    user = User(uid, user_keys, directory, policy)
    return Scenario(directory, user, tokens[0], tokens[1])


def simulate_adversary(kind: str, trials: int, rng: random.Random | None = None,
                       separation_m: float = 10_000.0, policy: Policy | None = None,
                       observed: int = 10) -> int:
    """Count successful impersonations over ``trials`` attempts.

    ``passive``
        watches ``observed`` honest sessions, then answers a fresh challenge
        either by replaying an observed response or by guessing.
    ``mitm``
        stands in front of the user posing as the near token and relays the
        far token's header; succeeds if the user's answer opens the far token.
    ``active``
        controls the near token (all of its secrets) and re-signs the far
        token's encrypted challenge under the near token's identity and
        position, hoping the user will decrypt it.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = rng if rng is not None else random.SystemRandom()
    sc = build_scenario(rng, separation_m, policy)
    uid, user = sc.user.uid, sc.user
    now = 1_700_000_000
    here = sc.near.gps
    wins = 0

    if kind == "passive":
        transcripts = []
        for _ in range(observed):
            hdr = sc.far.issue_challenge(uid, now, rng)
            resp = user.answer_challenge(hdr, now, sc.far.gps)
            sc.far.check_response(uid, resp, now)
            transcripts.append((hdr, resp))
        digits = sc.far.policy.digits
        for _ in range(trials):
            sc.far.issue_challenge(uid, now, rng)
            if rng.random() < 0.5:
                guess = rng.choice(transcripts)[1]
            else:
                guess = f"{rng.randrange(10 ** digits):0{digits}d}"
            wins += sc.far.check_response(uid, guess, now)
        return wins

    for _ in range(trials):
        hdr = sc.far.issue_challenge(uid, now, rng)
        if kind == "active":
            far_hdr = decode_as(hdr, IdentHeader)
            forged = IdentHeader(sc.near.tid, uid, sc.near.gps, far_hdr.enc_challenge, now)
            hdr = IdentHeader(sc.near.tid, uid, sc.near.gps, far_hdr.enc_challenge, now,
                              primitives.sign(sc.near.keys.sk, forged.signed_bytes())).encode()
        elif kind != "mitm":
            raise ValueError(f"unknown adversary kind {kind!r}")
        try:
            resp = user.answer_challenge(hdr, now, here)
        except IdentError:
            sc.far.pending.pop(uid, None)
            continue
        wins += sc.far.check_response(uid, resp, now)
    return wins
