"""Inner-product predicate encryption on the toy composite-order group.

A key for vector v opens a ciphertext for attribute x exactly when
<x, v> = 0 mod N.  The toy group stores discrete logarithms, so it is fast
and transparent but offers no security.
"""

import random

from ubic import bgroup, ipe

rng = random.Random(2)
G = bgroup.group_gen(32, rng)
print(f"N = p*q*r = {G.N}  ({G.N.bit_length()} bits)")

pk, msk = ipe.setup(G, 3, ipe.Mode.MESSAGE, rng)
x = [5, 7, 11]
v_match = [7, -5 % G.N, 0]        # 5*7 - 7*5 + 0 = 0
v_miss = [1, 1, 1]
m = G.random_target(rng)
c = ipe.encrypt(pk, x, m, rng)

for name, v in (("orthogonal key", v_match), ("unrelated key", v_miss)):
    out = ipe.decrypt(ipe.keygen(msk, v, rng), c)
    print(f"{name:15s} <x,v> mod N = {ipe.inner_product(x, v, G.N):>10d}  recovers m: {out == m}")

# equality test as a special case: attribute a, predicate b, match iff a == b
po_pk, po_msk = ipe.setup(G, 2, ipe.Mode.PREDICATE_ONLY, rng)
cipher = ipe.encrypt(po_pk, ipe.equality_attribute(42, G.N), rng=rng)
for b in (41, 42):
    key = ipe.keygen(po_msk, ipe.equality_predicate(b, G.N), rng)
    print(f"equality key for {b}: predicate holds = {ipe.decrypt(key, cipher)}")

print(f"\nserialized sizes: public key {len(ipe.encode_public_key(pk))} B, "
      f"ciphertext {len(ipe.encode_ciphertext(c))} B")
