"""Location-bound challenge-response between a user's phone and a token (say, an ATM)."""

import random

from ubic import ident
from ubic.tokens import IdentHeader, decode_as

rng = random.Random(3)
sc = ident.build_scenario(rng)
now = 1_700_000_000

header = sc.near.issue_challenge(sc.user.uid, now, rng)
h = decode_as(header, IdentHeader)
print(f"token shows a {len(header)}-byte code; position {h.gps[0] / 1e6:.4f}, {h.gps[1] / 1e6:.4f}")

digits = sc.user.answer_challenge(header, now, sc.near.gps)
print("phone decrypts the challenge and displays:", digits)
print("token accepts:", sc.near.check_response(sc.user.uid, digits, now))

# a relay: the user stands at the near token but is shown the far token's code
far_header = sc.far.issue_challenge(sc.user.uid, now, rng)
try:
    sc.user.answer_challenge(far_header, now, sc.near.gps)
except ident.IdentError as exc:
    print(f"relayed code from 10 km away refused by the phone: {exc.code}")

print("\nadversary simulations")
print("  passive guesser, 20000 tries:", ident.simulate_adversary("passive", 20_000, rng), "wins")
print("  relay across 1 km, 500 tries:", ident.simulate_adversary("mitm", 500, rng, separation_m=1000), "wins")
print("  rogue token re-signing, 500 tries:", ident.simulate_adversary("active", 500, rng), "wins")
