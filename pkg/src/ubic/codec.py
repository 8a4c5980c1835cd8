"""Visual encoder: token bytes <-> QR code bitmaps.

QR symbols are produced with ``segno`` (byte mode) and read back with
``zxing-cpp``.  A :class:`LoopbackTransport` implements the same
write/read interface with plain files so protocol code can be exercised
without any image processing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import segno
import zxingcpp
from PIL import Image

from .errors import UbicError

DEFAULT_CHUNK_SIZE = 512
QUIET_ZONE = 4


class EcLevel(Enum):
    L = "L"
    M = "M"
    Q = "Q"
    H = "H"


# version-40 figures: alphanumeric characters and recoverable damage (%)
_TABLE = {
    EcLevel.L: (4296, 7),
    EcLevel.M: (3391, 15),
    EcLevel.Q: (2420, 25),
    EcLevel.H: (1852, 30),
}

# version-40 byte-mode capacity (ISO/IEC 18004)
_BYTE_CAPACITY = {
    EcLevel.L: 2953,
    EcLevel.M: 2331,
    EcLevel.Q: 1663,
    EcLevel.H: 1273,
}


class CapacityError(UbicError, ValueError):
    code = "codec.capacity"


class DecodeError(UbicError):
    code = "codec.undecodable"


def capacity(ec: EcLevel | str) -> tuple[int, int]:
    """``(max alphanumeric characters, max damage %)`` of a version-40 code."""
    return _TABLE[EcLevel(ec)]


def byte_capacity(ec: EcLevel | str) -> int:
    return _BYTE_CAPACITY[EcLevel(ec)]


@dataclass(frozen=True, eq=False)
class BarcodeBitmap:
    """Dark-module matrix of a QR symbol (True = dark), without quiet zone."""

    modules: np.ndarray
    version: int
    border: int = QUIET_ZONE

    def __post_init__(self):
        n = 17 + 4 * self.version
        if self.modules.shape != (n, n):
            raise ValueError(f"version {self.version} symbols are {n}x{n} modules")

    @property
    def size(self) -> int:
        return self.modules.shape[0]

    def __eq__(self, other):
        return (isinstance(other, BarcodeBitmap) and self.version == other.version
                and np.array_equal(self.modules, other.modules))

    def render(self, module_px: int = 4) -> np.ndarray:
        """8-bit grayscale image (0 = dark) including the quiet zone."""
        m = np.pad(self.modules, self.border)
        img = np.where(m, 0, 255).astype(np.uint8)
        return np.kron(img, np.ones((module_px, module_px), dtype=np.uint8))

    def render_to(self, side_px: int) -> np.ndarray:
        """Render to a ``side_px`` square by nearest-neighbour sampling."""
        m = np.pad(self.modules, self.border)
        idx = (np.arange(side_px) * m.shape[0]) // side_px
        return np.where(m[np.ix_(idx, idx)], 0, 255).astype(np.uint8)


def encode_visual(payload: bytes, ec: EcLevel | str = EcLevel.M) -> BarcodeBitmap:
    ec = EcLevel(ec)
    if len(payload) > _BYTE_CAPACITY[ec]:
        raise CapacityError(f"{len(payload)} bytes exceed the level-{ec.value} capacity "
                            f"of {_BYTE_CAPACITY[ec]} bytes")
    try:
        qr = segno.make(bytes(payload), error=ec.value.lower(), mode="byte",
                        micro=False, boost_error=False)
    except segno.DataOverflowError as exc:
        raise CapacityError(str(exc)) from None
    return BarcodeBitmap(np.array(qr.matrix, dtype=bool), qr.version)


def read_image(img: np.ndarray) -> bytes:
    """Decode the first QR code found in a grayscale image (uint8 or floats in [0, 1])."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        img = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    found = zxingcpp.read_barcodes(np.ascontiguousarray(img), formats=zxingcpp.BarcodeFormat.QRCode)
    for res in found:
        if res.valid:
            return bytes(res.bytes)
    raise DecodeError("no readable QR code found")


def decode_visual(bitmap: BarcodeBitmap, module_px: int = 4) -> bytes:
    return read_image(bitmap.render(module_px))


def save_png(img: np.ndarray, path: str | Path):
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path, format="PNG")


def load_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im.convert("L"))


def plan_chunks(total_bytes: int, ec: EcLevel | str = EcLevel.M,
                chunk_size: int | None = None) -> list[int]:
    """Split ``total_bytes`` into per-code chunk sizes.

    ``chunk_size`` defaults to :data:`DEFAULT_CHUNK_SIZE` and is clamped to
    the byte capacity of the level.
    """
    if total_bytes <= 0:
        raise ValueError("total_bytes must be positive")
    cap = byte_capacity(ec)
    size = min(chunk_size or DEFAULT_CHUNK_SIZE, cap)
    count = math.ceil(total_bytes / size)
    return [size] * (count - 1) + [total_bytes - size * (count - 1)]


# -- transports ---------------------------------------------------------------

class LoopbackTransport:
    """Stores tokens as raw ``.bin`` files."""

    suffix = ".bin"

    def write(self, payload: bytes, stem: str | Path) -> Path:
        path = Path(stem).with_suffix(self.suffix)
        path.write_bytes(payload)
        return path

    def read(self, path: str | Path) -> bytes:
        return Path(path).read_bytes()


class QrTransport:
    """Stores tokens as PNG images of QR codes."""

    suffix = ".png"

    def __init__(self, ec: EcLevel | str = EcLevel.M, module_px: int = 4):
        self.ec = EcLevel(ec)
        self.module_px = module_px

    def write(self, payload: bytes, stem: str | Path) -> Path:
        path = Path(stem).with_suffix(self.suffix)
        save_png(encode_visual(payload, self.ec).render(self.module_px), path)
        return path

    def read(self, path: str | Path) -> bytes:
        return read_image(load_png(path))


def transport(name: str, ec: EcLevel | str = EcLevel.M, module_px: int = 4):
    if name == "loopback":
        return LoopbackTransport()
    if name == "qr":
        return QrTransport(ec, module_px)
    raise ValueError(f"unknown transport {name!r}")


def find_token(stem: str | Path) -> Path:
    """Locate ``stem.bin`` or ``stem.png``, whichever exists."""
    stem = Path(stem)
    for suffix in (".bin", ".png"):
        p = stem.with_suffix(suffix)
        if p.exists():
            return p
    raise FileNotFoundError(f"no token file for {stem}")


def read_token_file(path: str | Path) -> bytes:
    """Read a code from a file; a path without a file behind it is tried as a stem."""
    path = Path(path)
    if not path.exists():
        path = find_token(path)
    if path.suffix == ".png":
        return read_image(load_png(path))
    return path.read_bytes()

