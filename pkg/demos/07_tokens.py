"""The canonical binary format shared by every printed code."""

from ubic.tokens import BlockToken, ChunkToken, TokenError, decode_token, encode_token

tok = BlockToken(2, b"\x01" * 64)
raw = encode_token(tok)
print("block token:", raw.hex())
print("magic, version, mode:", raw[:4], raw[4], raw[5])
print("decodes back to the same value:", decode_token(raw) == tok)

for name, bad in (("flipped magic", b"X" + raw[1:]), ("trailing byte", raw + b"\x00"),
                  ("truncated", raw[:-1])):
    try:
        decode_token(bad)
    except TokenError as exc:
        print(f"{name:14s} -> {exc}")

print("chunk token size for 100 ciphertext bytes:", len(encode_token(ChunkToken(1, bytes(100)))))
