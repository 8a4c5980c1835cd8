"""How much fits into one printed code, and what a round trip through pixels looks like."""

import os

from ubic import codec

print("byte-mode capacity at version 40 (alphanumeric chars / recovery %):")
for level in "LMQH":
    chars, pct = codec.capacity(level)
    print(f"  {level}: {chars:5d} chars, {pct:2d}% recoverable, {codec.byte_capacity(level)} bytes")

payload = os.urandom(300)
bitmap = codec.encode_visual(payload, "H")
print(f"\n300 random bytes at level H -> {bitmap.size}x{bitmap.size} modules")
image = bitmap.render(4)
print("decoded from rendered pixels:", codec.read_image(image) == payload)

# a solid smudge over part of the data area is absorbed by the error correction
h, w = image.shape
smudged = image.copy()
smudged[h // 2: h // 2 + h // 12, w // 2: w // 2 + w // 12] = 0
print("decoded after a smudge over ~0.7% of the area:", codec.read_image(smudged) == payload)

print("\nchunk plan for a 20 kB document at level M:", codec.plan_chunks(20_000, "M"))
