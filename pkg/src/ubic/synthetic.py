"""Synthetic document blocks and camera views for exercising the vision pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import codec
from .vision import Homography, block_corners, unwarp


def render_rectangle(shape, x0: int, y0: int, x1: int, y1: int,
                     fg: float = 0.0, bg: float = 1.0) -> np.ndarray:
    """Filled rectangle covering pixels ``x0 <= x < x1``, ``y0 <= y < y1``."""
    img = np.full(shape, bg, dtype=float)
    img[y0:y1, x0:x1] = fg
    return img


def render_text_lines(width: int, height: int, rng: np.random.Generator,
                      line_px: int = 14, margin: int = 14) -> np.ndarray:
    """Rows of dark word-like bars standing in for printed text."""
    img = np.ones((height, width))
    y = margin
    while y + line_px <= height - margin:
        x = margin
        while True:
            word = int(rng.integers(12, 48))
            if x + word > width - margin:
                break
            img[y:y + line_px - 5, x:x + word] = 0.1
            x += word + int(rng.integers(6, 10))
        y += line_px + 4
    return img


def render_block(payload: bytes, width: int = 480, height: int = 200, ratio: float = 0.55,
                 rng: np.random.Generator | None = None,
                 ec: codec.EcLevel | str = codec.EcLevel.M) -> np.ndarray:
    """Frontal block: text area on the left, QR code of ``payload`` on the right."""
    rng = rng if rng is not None else np.random.default_rng()
    cut = round(ratio * width)
    block = np.ones((height, width))
    block[:, :cut] = render_text_lines(cut, height, rng)
    bitmap = codec.encode_visual(payload, ec)
    side = bitmap.size + 2 * bitmap.border
    avail = min(width - cut, height) - 8
    px = avail // side
    if px < 2:
        raise ValueError("code area too small for the payload")
    qr = bitmap.render(px).astype(float) / 255.0
    oy = (height - qr.shape[0]) // 2
    ox = cut + (width - cut - qr.shape[1]) // 2
    block[oy:oy + qr.shape[0], ox:ox + qr.shape[1]] = qr
    return block


def rotation(tilt_x: float, tilt_y: float, roll: float) -> np.ndarray:
    cx, sx = math.cos(tilt_x), math.sin(tilt_x)
    cy, sy = math.cos(tilt_y), math.sin(tilt_y)
    cz, sz = math.cos(roll), math.sin(roll)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def camera_homography(block_size: tuple[int, int], photo_size: tuple[int, int],
                      tilt_x: float, tilt_y: float, roll: float = 0.0,
                      focal: float = 800.0, fill: float = 0.7,
                      offset: tuple[float, float] = (0.0, 0.0)) -> Homography:
    """Pinhole view of a planar block, mapping frontal block pixels to photo pixels.

    The block is centred on the optical axis, rotated by the given angles
    (radians) and placed at the distance where its width spans ``fill`` of
    the photo width when seen head-on.
    """
    bw, bh = block_size
    pw, ph = photo_size
    dist = focal * bw / (fill * pw)
    K = np.array([[focal, 0, pw / 2 + offset[0]], [0, focal, ph / 2 + offset[1]], [0, 0, 1]])
    R = rotation(tilt_x, tilt_y, roll)
    t = np.array([0, 0, dist])
    # frontal pixel (u, v) -> plane point (u - bw/2, v - bh/2, 0) in block-pixel units
    S = np.array([[1, 0, -(bw - 1) / 2], [0, 1, -(bh - 1) / 2], [0, 0, 1]])
    return Homography(K @ np.column_stack([R[:, 0], R[:, 1], t]) @ S)


@dataclass(frozen=True, eq=False)
class View:
    photo: np.ndarray
    homography: Homography
    corners: np.ndarray


def photograph(block: np.ndarray, photo_size: tuple[int, int], H: Homography,
               background: float = 0.15, blur: float = 0.0, noise: float = 0.0,
               rng: np.random.Generator | None = None) -> View:
    """Render the photo of ``block`` seen through ``H`` (frontal -> photo)."""
    from scipy import ndimage

    photo = unwarp(block, H.inverse(), photo_size, fill=background)
    if blur > 0:
        photo = ndimage.gaussian_filter(photo, blur, mode="nearest")
    if noise > 0:
        rng = rng if rng is not None else np.random.default_rng()
        photo = photo + rng.normal(0, noise, photo.shape)
    photo = np.clip(photo, 0.0, 1.0)
    h, w = block.shape
    return View(photo, H, H.apply(block_corners(w, h)))


TEXT_MATCH = 0.75


@dataclass(frozen=True)
class TrialResult:
    payload_ok: bool
    text_corr: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.payload_ok and self.text_corr >= TEXT_MATCH


def perspective_trial(seed: int, max_tilt_deg: float = 30.0, block_size=(480, 200),
                      photo_size=(640, 480), ratio: float = 0.55, bracket_noise: float = 6.0,
                      blur: float = 0.6, noise: float = 0.01) -> TrialResult:
    """Photograph a random block under a random tilt and try to read it back.

    Success means the QR payload decodes exactly and the rectified text
    area correlates with the frontal rendering at least ``TEXT_MATCH``.
    """
    from . import vision

    rng = np.random.default_rng(seed)
    payload = rng.bytes(120)
    w, h = block_size
    block = render_block(payload, w, h, ratio, rng)
    tilt = math.radians(max_tilt_deg)
    tx, ty = rng.uniform(-1, 1, 2) * tilt
    roll = math.radians(rng.uniform(-10, 10))
    H = camera_homography(block_size, photo_size, tx, ty, roll)
    view = photograph(block, photo_size, H, blur=blur, noise=noise, rng=rng)
    brackets = view.corners + rng.uniform(-bracket_noise, bracket_noise, (4, 2))
    try:
        ex = vision.extract_block(view.photo, brackets, block_size, ratio)
        got = codec.read_image(ex.code)
    except (vision.VisionError, codec.DecodeError) as exc:
        return TrialResult(False, 0.0, f"{type(exc).__name__}: {exc}")
    truth = vision.split_content(block, ratio)[0]
    corr = float(np.corrcoef(ex.text.ravel(), truth.ravel())[0, 1])
    return TrialResult(got == payload, corr)
