"""Per-block signatures on a printed document, and the attacks they stop."""

import random

from ubic import primitives, veridoc
from ubic.directory import Directory, Role, make_id

rng = random.Random(4)
keys = primitives.sig_keygen(rng)
bank = make_id("bank")
directory = Directory()
directory.register(bank, Role.SIGNER, keys.vk)

statement = ["Account holder: A. Example", "Balance: EUR 1,234.56", "Date: 2024-06-01"]
doc = veridoc.sign_document(keys.sk, bank, statement, rng=rng)
print(f"header code {len(doc.header_bytes)} B, block codes "
      f"{[len(t) for _, t in doc.physical_blocks()]} B")
print("honest copy verifies, blocks:", veridoc.verify_bundle(directory, doc).block_count)

blocks = doc.physical_blocks()
other = veridoc.sign_document(keys.sk, bank, ["x", "Balance: EUR 9,999,999.00", "y"], rng=rng)
attacks = {
    "edit the balance": [blocks[0], ("Balance: EUR 9,234.56", blocks[1][1]), blocks[2]],
    "swap two blocks": [blocks[1], blocks[0], blocks[2]],
    "splice from another": [blocks[0], other.physical_blocks()[1], blocks[2]],
    "cut the last block": blocks[:2],
}
for name, tampered in attacks.items():
    try:
        veridoc.verify_document(directory, doc.header_bytes, tampered)
        print(f"  {name:20s} ACCEPTED (should not happen)")
    except veridoc.VerificationError as exc:
        print(f"  {name:20s} rejected: {exc.code} ({exc})")
