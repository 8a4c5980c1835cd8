"""``ubic`` command-line front end.

Exit codes: 0 success or accept, 1 cryptographic rejection, 2 usage or
I/O error.  Failures print ``error[<code>]: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import time
from pathlib import Path

import numpy as np

from . import codec, hiding, ident, ipe, veridoc, vision
from .directory import Role, id_name, make_id
from .errors import Rejected, UbicError
from .keystore import ROLE_NAMES, Keystore

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2


class UsageError(UbicError):
    code = "usage.error"


# -- helpers ------------------------------------------------------------------

def _rng(args) -> random.Random:
    if not hasattr(args, "rng"):
        args.rng = random.Random(args.seed) if args.seed is not None else random.SystemRandom()
    return args.rng


def _passphrase(args) -> str:
    value = args.passphrase if args.passphrase is not None else os.environ.get("UBIC_PASSPHRASE")
    if not value:
        raise UsageError("a passphrase is required (--passphrase or UBIC_PASSPHRASE)")
    return value


def _store(args, need_secret: bool = True) -> Keystore:
    return Keystore(args.home, _passphrase(args) if need_secret else "", _rng(args))


def _now(args) -> float:
    return time.time() if args.now is None else args.now


def _transport(args):
    return codec.transport(args.transport, args.ec, args.module_px)


def _points(text: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError("points must be comma-separated numbers") from None
    if len(vals) != 8:
        raise UsageError("expected four points: x1,y1,...,x4,y4")
    return np.array(vals).reshape(4, 2)


def _pair(text: str, name: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{name} must be two integers W,H") from None
    return a, b


def _split_blocks(text: str) -> list[str]:
    return [b.strip("\n") for b in text.split("\n\n") if b.strip()]


def _load_token(store: Keystore, name: str) -> ident.Token:
    d = store.private(name, "token")
    pending = {bytes.fromhex(uid): ident.PendingChallenge(ident.Challenge(disp), at)
               for uid, (disp, at) in d["pending"].items()}
    return ident.Token(make_id(name), store.sig_keys(name, "token"), tuple(d["gps"]),
                       store.directory(), pending=pending)


def _save_pending(store: Keystore, name: str, token: ident.Token):
    d = store.private(name, "token")
    d["pending"] = {uid.hex(): [p.challenge.display, p.issued_at] for uid, p in token.pending.items()}
    store.update_private(name, d)


# -- commands -----------------------------------------------------------------

def cmd_keygen(args):
    gps = ident.to_microdegrees(args.lat, args.lon) if args.lat is not None else None
    _store(args).keygen(args.role, args.id, gps=gps, n=args.n, bits=args.bits)
    print(f"created {args.role} {args.id}")


def cmd_capacity(args):
    levels = [args.ec] if args.ec else [e.value for e in codec.EcLevel]
    for level in levels:
        chars, pct = codec.capacity(level)
        print(f"{chars}/{pct}" if args.ec else f"{level} {chars}/{pct}")


def cmd_ident_issue(args):
    store = _store(args)
    token = _load_token(store, args.token)
    header = token.issue_challenge(make_id(args.uid), _now(args), _rng(args))
    _save_pending(store, args.token, token)
    print(_transport(args).write(header, Path(args.out)))


def cmd_ident_answer(args):
    store = _store(args)
    user = ident.User(make_id(args.user), store.pke_keys(args.user), store.directory())
    here = ident.to_microdegrees(args.lat, args.lon)
    print(user.answer_challenge(codec.read_token_file(args.inp), _now(args), here))


def cmd_ident_check(args):
    store = _store(args)
    token = _load_token(store, args.token)
    try:
        ok = token.check_response(make_id(args.uid), args.response, _now(args))
    finally:
        _save_pending(store, args.token, token)
    if not ok:
        raise ident.IdentError("response does not match the challenge")
    print("accept")


def cmd_doc_sign(args):
    store = _store(args)
    blocks = _split_blocks(Path(args.inp).read_text(encoding="utf-8"))
    bundle = veridoc.sign_document(store.sig_keys(args.signer, "signer").sk, make_id(args.signer),
                                   blocks, rng=_rng(args))
    print(veridoc.save_document(bundle, args.out, _transport(args)))


def cmd_doc_verify(args):
    header = veridoc.verify_saved(_store(args, need_secret=False).directory(), args.inp)
    print(f"valid: signer {id_name(header.sid)}, {header.block_count} block(s)")


def cmd_hide_encrypt(args):
    store = _store(args, need_secret=False)
    m = Path(args.inp).read_bytes()
    common = dict(chunk_size=args.chunk_size, ec=args.ec, rng=_rng(args))
    if args.to:
        doc = hiding.hide_encrypt(m, ek=store.directory().lookup(make_id(args.to), Role.USER), **common)
    else:
        if not (args.authority and args.attr):
            raise UsageError("give --to USER or --authority A --attr NAME")
        mpk = store.pe_public(args.authority)
        doc = hiding.hide_encrypt(m, mpk=mpk, attribute=hiding.attribute_vector(args.attr[0], mpk.params.N),
                                  **common)
    print(hiding.save_hidden(doc, args.out, _transport(args)))


def cmd_hide_decrypt(args):
    store = _store(args)
    doc = hiding.load_hidden(args.inp)
    if args.user:
        rec = hiding.hide_decrypt(doc, dk=store.pke_keys(args.user).dk, wanted=args.chunk)
    elif args.holder:
        rec = hiding.hide_decrypt(doc, sk=store.pe_keys(args.holder), wanted=args.chunk)
    else:
        raise UsageError("give --user U or --holder H")
    out = Path(args.out) if args.out else None
    data = b"".join(rec.plaintexts[i] for i in sorted(rec.plaintexts))
    if out:
        out.write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    if rec.damaged:
        raise hiding.ChunkDamaged(rec.damaged)


def cmd_pe_setup(args):
    _store(args).keygen("pe-authority", args.id, n=args.n, bits=args.bits)
    print(f"created pe-authority {args.id}")


def cmd_pe_keygen(args):
    store = _store(args)
    msk = store.pe_master(args.authority)
    if args.role:
        keys = hiding.clearance_keys(msk, args.role, rng=_rng(args))
    elif args.attr:
        keys = [ipe.keygen(msk, hiding.predicate_vector(a, msk.params.N), _rng(args)) for a in args.attr]
    else:
        raise UsageError("give --role or --attr")
    store.add_pe_keys(args.holder, keys)
    print(f"issued {len(keys)} key(s) to {args.holder}")


def cmd_vision_extract(args):
    photo = codec.load_png(args.inp).astype(float) / 255.0
    ex = vision.extract_block(photo, _points(args.points), _pair(args.size, "--size"), args.ratio,
                              snap_radius=args.snap_radius)
    codec.save_png(np.clip(np.rint(ex.block * 255), 0, 255), args.out_block)
    print(args.out_block)
    if args.out_token:
        Path(args.out_token).write_bytes(codec.read_image(ex.code))
        print(args.out_token)


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ubic", description="Visual cryptography tokens on files.")
    p.add_argument("--home", default=os.environ.get("UBIC_HOME", ".ubic"), help="keystore directory")
    p.add_argument("--passphrase", help="keystore passphrase (or UBIC_PASSPHRASE)")
    p.add_argument("--seed", type=int, help="seed every random choice")
    p.add_argument("--transport", choices=["loopback", "qr"], default="qr")
    p.add_argument("--ec", choices=[e.value for e in codec.EcLevel], default=None)
    p.add_argument("--module-px", type=int, default=4)
    p.add_argument("--now", type=float, help="override the clock (unix seconds)")
    sub = p.add_subparsers(dest="command", required=True)

    k = sub.add_parser("keygen", help="create an identity")
    k.add_argument("--role", choices=sorted(ROLE_NAMES), required=True)
    k.add_argument("--id", required=True)
    k.add_argument("--lat", type=float)
    k.add_argument("--lon", type=float)
    k.add_argument("--n", type=int, default=2, help="predicate vector length")
    k.add_argument("--bits", type=int, default=32, help="prime size of the toy group")
    k.set_defaults(func=cmd_keygen)

    c = sub.add_parser("capacity", help="QR capacity per error-correction level")
    c.add_argument("--ec", choices=[e.value for e in codec.EcLevel], default=argparse.SUPPRESS)
    c.set_defaults(func=cmd_capacity)

    idp = sub.add_parser("ident", help="identification protocol").add_subparsers(dest="step", required=True)
    s = idp.add_parser("issue")
    s.add_argument("--token", required=True)
    s.add_argument("--uid", required=True)
    s.add_argument("--out", default="header")
    s.set_defaults(func=cmd_ident_issue)
    s = idp.add_parser("answer")
    s.add_argument("--user", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--lat", type=float, required=True)
    s.add_argument("--lon", type=float, required=True)
    s.set_defaults(func=cmd_ident_answer)
    s = idp.add_parser("check")
    s.add_argument("--token", required=True)
    s.add_argument("--uid", required=True)
    s.add_argument("--response", required=True)
    s.set_defaults(func=cmd_ident_check)

    dp = sub.add_parser("doc", help="signed documents").add_subparsers(dest="step", required=True)
    s = dp.add_parser("sign")
    s.add_argument("--signer", required=True)
    s.add_argument("--in", dest="inp", required=True, help="text file, blocks separated by blank lines")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_doc_sign)
    s = dp.add_parser("verify")
    s.add_argument("--in", dest="inp", required=True)
    s.set_defaults(func=cmd_doc_verify)

    hp = sub.add_parser("hide", help="content hiding").add_subparsers(dest="step", required=True)
    s = hp.add_parser("encrypt")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--to", help="recipient user id")
    s.add_argument("--authority", help="predicate-encryption authority id")
    s.add_argument("--attr", action="append", help="attribute the document is labelled with")
    s.add_argument("--chunk-size", type=int, default=codec.DEFAULT_CHUNK_SIZE)
    s.set_defaults(func=cmd_hide_encrypt)
    s = hp.add_parser("decrypt")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out")
    s.add_argument("--user")
    s.add_argument("--holder")
    s.add_argument("--chunk", type=int, action="append", help="decrypt only these chunks")
    s.set_defaults(func=cmd_hide_decrypt)

    pp = sub.add_parser("pe", help="predicate-encryption authority").add_subparsers(dest="step", required=True)
    s = pp.add_parser("setup")
    s.add_argument("--id", required=True)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--bits", type=int, default=32)
    s.set_defaults(func=cmd_pe_setup)
    s = pp.add_parser("keygen")
    s.add_argument("--authority", required=True)
    s.add_argument("--holder", required=True)
    s.add_argument("--role", choices=sorted(hiding.TOY_POLICY))
    s.add_argument("--attr", action="append")
    s.set_defaults(func=cmd_pe_keygen)

    vp = sub.add_parser("vision", help="photo processing").add_subparsers(dest="step", required=True)
    s = vp.add_parser("extract")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--points", required=True, help="x1,y1,...,x4,y4 clockwise from top-left")
    s.add_argument("--size", default="480,200", help="output block W,H")
    s.add_argument("--ratio", type=float, default=0.55, help="text share of the block")
    s.add_argument("--snap-radius", type=float, default=20.0)
    s.add_argument("--out-block", default="block.png")
    s.add_argument("--out-token")
    s.set_defaults(func=cmd_vision_extract)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.ec is None:
        args.ec = codec.EcLevel.M.value if args.command != "capacity" else None
    try:
        args.func(args)
    except Rejected as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_REJECT
    except UbicError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"error[io.error]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
