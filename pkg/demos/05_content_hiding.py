"""Printing a document as encrypted chunks; damaged chunks only cost themselves."""

import random

from ubic import bgroup, hiding, ipe, primitives
from ubic.hiding import HiddenDocument

rng = random.Random(5)
alice = primitives.pke_keygen(rng)
text = b"Diagnosis: healthy. " * 30
doc = hiding.hide_encrypt(text, ek=alice.ek, chunk_size=100, rng=rng)
print(f"{len(text)} bytes -> header + {len(doc.chunks)} chunk codes")

damaged = HiddenDocument(doc.header, [c if i != 3 else None for i, c in enumerate(doc.chunks, 1)])
rec = hiding.hide_decrypt(damaged, dk=alice.dk)
print("chunk 3 unreadable; recovered", sorted(rec.plaintexts), "damaged", rec.damaged)

mallory = primitives.pke_keygen(rng)
try:
    hiding.hide_decrypt(doc, dk=mallory.dk)
except hiding.WrongKey as exc:
    print("another user's key:", exc.code)

# attribute-based access with a three-role clearance policy
G = bgroup.group_gen(32, rng)
pk, msk = ipe.setup(G, 2, ipe.Mode.MESSAGE, rng)
keys = {role: hiding.clearance_keys(msk, role, rng=rng) for role in hiding.TOY_POLICY}
print("\nwho can read what (rows: reader, columns: document label)")
print("        " + "  ".join(f"{label:5s}" for label in hiding.TOY_POLICY))
for reader, ks in keys.items():
    row = []
    for label in hiding.TOY_POLICY:
        hidden = hiding.hide_encrypt(b"memo", mpk=pk, attribute=hiding.attribute_vector(label, G.N), rng=rng)
        try:
            hiding.hide_decrypt(hidden, sk=ks)
            row.append("yes  ")
        except hiding.WrongKey:
            row.append("-    ")
    print(f"  {reader:5s} " + "  ".join(row))
