"""Block alignment: corner detection, bracket snapping, rectification.

Images are 2-D float arrays with values in [0, 1], indexed ``img[y, x]``.
Points are ``(x, y)`` pairs in pixel coordinates (pixel centres at integer
positions).

Pipeline for one document block: detect corners with a multi-scale Harris
detector, snap the four rough user brackets to the nearest corners,
estimate the homography that maps the frontal block to the photo, resample
the block frontally and split it into its text and code areas.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import UbicError

KAPPA = 0.04
MIN_SIDE = 16
DEFAULT_SCALES = ((1.0, 2.0), (1.5, 3.0), (2.0, 4.0), (3.0, 6.0), (4.0, 8.0))


class VisionError(UbicError):
    code = "vision.error"


class ImageTooSmall(VisionError, ValueError):
    code = "vision.image-too-small"


class DegenerateConfiguration(VisionError, ValueError):
    code = "vision.degenerate"


class SingularHomography(VisionError, ValueError):
    code = "vision.singular"


class NoCornerNearby(VisionError):
    code = "vision.no-corner"

    def __init__(self, index: int):
        super().__init__(f"no corner near bracket {index}")
        self.index = index


class AmbiguousSnap(VisionError):
    code = "vision.ambiguous-snap"


# -- filtering ---------------------------------------------------------------

def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled Gaussian truncated at 3 sigma and renormalized to sum 1."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = max(1, math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


DERIVATIVE_KERNEL = np.array([-0.5, 0.0, 0.5])


def smooth(img: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(img, k, axis=0, mode="reflect")
    return ndimage.correlate1d(out, k, axis=1, mode="reflect")


def gradients(img: np.ndarray, sigma_d: float) -> tuple[np.ndarray, np.ndarray]:
    """Central differences of the image pre-smoothed at the detection scale."""
    L = smooth(img, sigma_d)
    Ix = ndimage.correlate1d(L, DERIVATIVE_KERNEL, axis=1, mode="reflect")
    Iy = ndimage.correlate1d(L, DERIVATIVE_KERNEL, axis=0, mode="reflect")
    return Ix, Iy


@dataclass(frozen=True, eq=False)
class CornerResponse:
    M: np.ndarray
    sigma_d: float
    sigma_i: float
    kappa: float


def _as_image(img) -> np.ndarray:
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D grayscale image")
    return img


def harris_response(img, sigma_d: float = 1.0, sigma_i: float = 2.0, kappa: float = KAPPA,
                    normalized: bool = False) -> CornerResponse:
    """Harris measure ``det(A) - kappa * trace(A)^2`` of the smoothed structure tensor.

    With ``normalized`` the derivatives are multiplied by ``sigma_d`` so
    responses at different scales are comparable.
    """
    img = _as_image(img)
    if min(img.shape) < MIN_SIDE:
        raise ImageTooSmall(f"image must be at least {MIN_SIDE}x{MIN_SIDE}")
    if sigma_d <= 0 or sigma_i <= 0:
        raise ValueError("scales must be positive")
    Ix, Iy = gradients(img, sigma_d)
    if normalized:
        Ix, Iy = Ix * sigma_d, Iy * sigma_d
    Sxx = smooth(Ix * Ix, sigma_i)
    Syy = smooth(Iy * Iy, sigma_i)
    Sxy = smooth(Ix * Iy, sigma_i)
    M = Sxx * Syy - Sxy * Sxy - kappa * (Sxx + Syy) ** 2
    return CornerResponse(M, sigma_d, sigma_i, kappa)


@dataclass(frozen=True)
class Corner:
    x: float
    y: float
    sigma_d: float
    sigma_i: float
    response: float

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


def multiscale_harris(img, scales=DEFAULT_SCALES, threshold: float = 0.1,
                      kappa: float = KAPPA) -> list[Corner]:
    """Corners found at any of ``scales`` (pairs of detection/integration sigma).

    A candidate is a spatial local maximum of the scale-normalized response
    exceeding ``threshold`` times the strongest response over all scales.
    Candidates are then suppressed across space and scale: going from the
    finest scale to the coarsest, a candidate is dropped if a kept corner
    lies within ``2 * sigma_i + 2`` pixels.  Each corner therefore reports
    the finest scale at which it is detectable.
    """
    if not scales:
        raise ValueError("need at least one scale")
    img = _as_image(img)
    responses = [harris_response(img, sd, si, kappa, normalized=True) for sd, si in scales]
    peak = max(float(r.M.max()) for r in responses)
    if peak <= 0:
        return []
    cands = []
    for order, r in enumerate(responses):
        size = 2 * math.ceil(r.sigma_i) + 1
        is_max = (r.M == ndimage.maximum_filter(r.M, size=size, mode="nearest"))
        ys, xs = np.nonzero(is_max & (r.M > threshold * peak))
        for y, x in zip(ys, xs):
            cands.append((order, -float(r.M[y, x]), int(x), int(y), r))
    cands.sort(key=lambda c: (c[0], c[1]))
    kept: list[Corner] = []
    for _, neg, x, y, r in cands:
        radius = 2 * r.sigma_i + 2
        if any((c.x - x) ** 2 + (c.y - y) ** 2 <= radius ** 2 for c in kept):
            continue
        kept.append(Corner(float(x), float(y), r.sigma_d, r.sigma_i, -neg))
    return kept


def snap_brackets(points, corners, radius: float = 20.0) -> np.ndarray:
    """Move each rough bracket to the nearest detected corner within ``radius``."""
    pts = np.asarray(points, dtype=float)
    if pts.shape != (4, 2):
        raise ValueError("need exactly four bracket points")
    cs = np.asarray([c.xy if isinstance(c, Corner) else c for c in corners], dtype=float)
    if cs.size == 0:
        raise NoCornerNearby(0)
    cs = cs.reshape(-1, 2)
    chosen = []
    for i, p in enumerate(pts):
        d = np.hypot(*(cs - p).T)
        j = int(np.argmin(d))
        if d[j] > radius:
            raise NoCornerNearby(i)
        chosen.append(j)
    if len(set(chosen)) != 4:
        raise AmbiguousSnap("two brackets snapped to the same corner")
    return cs[chosen]


# -- homographies -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Homography:
    """Projective map ``p' ~ H p`` on homogeneous pixel coordinates."""

    H: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        if H.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        if abs(H[2, 2]) > 1e-12:
            H = H / H[2, 2]
        if not np.all(np.isfinite(H)) or np.linalg.cond(H) > 1e12:
            raise SingularHomography("homography is not invertible")
        object.__setattr__(self, "H", H)

    def apply(self, points) -> np.ndarray:
        return apply_homography(self.H, points)

    def inverse(self) -> Homography:
        return Homography(np.linalg.inv(self.H))

    def __matmul__(self, other: Homography) -> Homography:
        return Homography(self.H @ other.H)


def apply_homography(H, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    hom = np.column_stack([pts, np.ones(len(pts))]) @ np.asarray(H, dtype=float).T
    return hom[:, :2] / hom[:, 2:3]


def _check_general_position(pts: np.ndarray, name: str):
    scale = max(np.ptp(pts, axis=0).max(), 1e-300)
    for a, b, c in itertools.combinations(pts, 3):
        area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(area) <= 1e-9 * scale * scale:
            raise DegenerateConfiguration(f"three {name} points are collinear")


def _normalizer(pts: np.ndarray) -> np.ndarray:
    c = pts.mean(axis=0)
    rms = np.sqrt(((pts - c) ** 2).sum(axis=1).mean())
    s = math.sqrt(2) / rms
    return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1]])


def estimate_homography(src, dst) -> Homography:
    """Normalized DLT from four correspondences, ``dst ~ H src``."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise ValueError("need four source and four destination points")
    _check_general_position(src, "source")
    _check_general_position(dst, "destination")
    Ts, Td = _normalizer(src), _normalizer(dst)
    s = apply_homography(Ts, src)
    d = apply_homography(Td, dst)
    A = np.zeros((8, 9))
    for k, ((x, y), (u, v)) in enumerate(zip(s, d)):
        A[2 * k] = [-x, -y, -1, 0, 0, 0, u * x, u * y, u]
        A[2 * k + 1] = [0, 0, 0, -x, -y, -1, v * x, v * y, v]
    _, _, Vt = np.linalg.svd(A)
    Hn = Vt[-1].reshape(3, 3)
    return Homography(np.linalg.inv(Td) @ Hn @ Ts)


# -- resampling ---------------------------------------------------------------

def unwarp(img, H, out_dims: tuple[int, int], fill: float = 1.0) -> np.ndarray:
    """Resample ``img`` on an ``out_dims = (width, height)`` grid.

    Output pixel ``p`` takes the bilinearly interpolated value of ``img`` at
    ``H p``; samples outside the image get ``fill``.
    """
    img = _as_image(img)
    Hm = H.H if isinstance(H, Homography) else Homography(H).H
    w, h = out_dims
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    src = apply_homography(Hm, np.column_stack([xs.ravel(), ys.ravel()]))
    coords = np.vstack([src[:, 1], src[:, 0]])
    out = ndimage.map_coordinates(img, coords, order=1, mode="constant", cval=fill)
    return out.reshape(h, w)


def split_content(block, ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Cut a block into text and code regions along its long axis."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    block = np.asarray(block)
    h, w = block.shape[:2]
    if w >= h:
        cut = round(ratio * w)
        return block[:, :cut], block[:, cut:]
    cut = round(ratio * h)
    return block[:cut], block[cut:]


def block_corners(width: int, height: int) -> np.ndarray:
    """Outer corners of a ``width`` x ``height`` pixel block, clockwise from top-left."""
    return np.array([[-0.5, -0.5], [width - 0.5, -0.5],
                     [width - 0.5, height - 0.5], [-0.5, height - 0.5]])


def corners_near(photo, point, radius: float, threshold: float = 0.1,
                 scales=DEFAULT_SCALES) -> list[Corner]:
    """Multi-scale corners within ``radius`` of ``point``, in photo coordinates.

    Detection runs on a window large enough to hold the coarsest filter
    support around the search disc.
    """
    photo = _as_image(photo)
    h, w = photo.shape
    margin = math.ceil(radius + 3 * max(si for _, si in scales) + 3 * max(sd for sd, _ in scales))
    x, y = float(point[0]), float(point[1])
    x0, x1 = max(0, math.floor(x) - margin), min(w, math.ceil(x) + margin + 1)
    y0, y1 = max(0, math.floor(y) - margin), min(h, math.ceil(y) + margin + 1)
    if x1 - x0 < MIN_SIDE or y1 - y0 < MIN_SIDE:
        return []
    found = multiscale_harris(photo[y0:y1, x0:x1], scales, threshold)
    out = [Corner(c.x + x0, c.y + y0, c.sigma_d, c.sigma_i, c.response) for c in found]
    return [c for c in out if (c.x - x) ** 2 + (c.y - y) ** 2 <= radius ** 2]


@dataclass(frozen=True, eq=False)
class Extraction:
    corners: np.ndarray
    homography: Homography
    block: np.ndarray
    text: np.ndarray
    code: np.ndarray


def extract_block(photo, brackets, out_dims: tuple[int, int], ratio: float,
                  snap_radius: float = 20.0, threshold: float = 0.1,
                  scales=DEFAULT_SCALES) -> Extraction:
    """Snap brackets (clockwise from top-left), rectify and split one block."""
    photo = _as_image(photo)
    brackets = np.asarray(brackets, dtype=float)
    corners = [c for p in brackets for c in corners_near(photo, p, snap_radius, threshold, scales)]
    snapped = snap_brackets(brackets, corners, snap_radius)
    H = estimate_homography(block_corners(*out_dims), snapped)
    block = unwarp(photo, H, out_dims)
    text, code = split_content(block, ratio)
    return Extraction(snapped, H, block, text, code)
