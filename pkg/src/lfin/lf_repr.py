"""4D light-field data model and the exact layout transforms between it,
the sub-aperture-image (SAI) array and the macro-pixel image (MacPI).

A light field is stored canonically as a 4D array indexed (u, v, h, w):
u, v are angular coordinates (which view), h, w are spatial coordinates
(which pixel inside a view). Both 2D flattenings are derived by explicit
axis permutation:

* SAI array: an A x A grid of H x W view blocks. Pixel (x, y) of the 2D
  image equals light-field value (u, v, h, w) with x = (u-1)*H + h,
  y = (v-1)*W + w (1-based).
* MacPI: an H x W grid of A x A macro-pixel blocks. Pixel (xi, eta)
  equals value (u, v, h, w) with xi = (h-1)*A + u, eta = (w-1)*A + v.

Public functions document coordinates 1-based; internally everything is
0-based numpy. All instances are immutable after construction (backing
arrays are marked read-only) and therefore safe to share across threads.

Note on the closed-form MacPI->SAI map: with 1-based coordinates the
mapping is x = H*(xi-1) + floor((xi-1)/A)*(1-A*H) + 1 ... which is what
``macpi_to_sai_coords`` implements. It is verified against the blockwise
permutation in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoordinateError, ParameterError, ShapeError


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LightField:
    """Canonical 4D array of Y-channel intensities, shape (A, A, H, W)."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if d.ndim != 4:
            raise ShapeError(f"light field must be 4D (u,v,h,w), got ndim={d.ndim}")
        if d.shape[0] != d.shape[1]:
            raise ShapeError(f"angular grid must be square, got {d.shape[:2]}")
        if d.shape[0] < 1 or d.shape[2] < 1 or d.shape[3] < 1:
            raise ShapeError(f"empty light field: shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ShapeError("light field contains non-finite values")
        object.__setattr__(self, "data", _freeze(d))

    @property
    def ang_res(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]


@dataclass(frozen=True)
class SaiArrayImage:
    """2D tiling of all views in an A x A grid of H x W blocks."""

    data: np.ndarray
    ang_res: int

    def __post_init__(self):
        _check_2d_layout(self.data, self.ang_res, "SAI array")
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def view_h(self) -> int:
        return self.data.shape[0] // self.ang_res

    @property
    def view_w(self) -> int:
        return self.data.shape[1] // self.ang_res


@dataclass(frozen=True)
class MacPiImage:
    """2D tiling of all macro-pixels in an H x W grid of A x A blocks."""

    data: np.ndarray
    ang_res: int

    def __post_init__(self):
        _check_2d_layout(self.data, self.ang_res, "MacPI")
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def view_h(self) -> int:
        return self.data.shape[0] // self.ang_res

    @property
    def view_w(self) -> int:
        return self.data.shape[1] // self.ang_res


def _check_2d_layout(d: np.ndarray, ang_res: int, what: str) -> None:
    if d.ndim != 2:
        raise ShapeError(f"{what} must be 2D, got ndim={d.ndim}")
    if ang_res < 1:
        raise ParameterError(f"angular resolution must be >= 1, got {ang_res}")
    if d.shape[0] % ang_res or d.shape[1] % ang_res:
        raise ShapeError(
            f"{what} extents {d.shape} not divisible by angular resolution {ang_res}"
        )


# ---------------------------------------------------------------------------
# layout transforms (pure axis permutations on the canonical 4D array)
# ---------------------------------------------------------------------------

def lf_to_sai_2d(a: np.ndarray) -> np.ndarray:
    """(A, A, H, W) -> (A*H, A*W) SAI-array pattern."""
    A, _, H, W = a.shape
    return a.transpose(0, 2, 1, 3).reshape(A * H, A * W)


def sai_2d_to_lf(d: np.ndarray, ang_res: int) -> np.ndarray:
    """(A*H, A*W) SAI-array pattern -> (A, A, H, W)."""
    A = ang_res
    H, W = d.shape[0] // A, d.shape[1] // A
    return d.reshape(A, H, A, W).transpose(0, 2, 1, 3)


def lf_to_macpi_2d(a: np.ndarray) -> np.ndarray:
    """(A, A, H, W) -> (A*H, A*W) MacPI pattern."""
    A, _, H, W = a.shape
    return a.transpose(2, 0, 3, 1).reshape(A * H, A * W)


def macpi_2d_to_lf(d: np.ndarray, ang_res: int) -> np.ndarray:
    """(A*H, A*W) MacPI pattern -> (A, A, H, W)."""
    A = ang_res
    H, W = d.shape[0] // A, d.shape[1] // A
    return d.reshape(H, A, W, A).transpose(1, 3, 0, 2)


def lf_to_macpi(lf: LightField) -> MacPiImage:
    return MacPiImage(lf_to_macpi_2d(lf.data), lf.ang_res)


def macpi_to_lf(m: MacPiImage) -> LightField:
    return LightField(macpi_2d_to_lf(m.data, m.ang_res))


def lf_to_sai_array(lf: LightField) -> SaiArrayImage:
    return SaiArrayImage(lf_to_sai_2d(lf.data), lf.ang_res)


def sai_array_to_lf(s: SaiArrayImage) -> LightField:
    return LightField(sai_2d_to_lf(s.data, s.ang_res))


def macpi_to_sai_2d(d: np.ndarray, ang_res: int) -> np.ndarray:
    """Direct MacPI -> SAI-array coordinate map on a 2D array."""
    return lf_to_sai_2d(macpi_2d_to_lf(d, ang_res))


def sai_to_macpi_2d(d: np.ndarray, ang_res: int) -> np.ndarray:
    """Direct SAI-array -> MacPI coordinate map on a 2D array."""
    return lf_to_macpi_2d(sai_2d_to_lf(d, ang_res))


def macpi_to_sai(m: MacPiImage) -> SaiArrayImage:
    return SaiArrayImage(macpi_to_sai_2d(m.data, m.ang_res), m.ang_res)


def macpi_to_sai_coords(xi: int, eta: int, ang_res: int, view_h: int, view_w: int):
    """Closed-form MacPI->SAI coordinate map, 1-based on both sides.

    Uses floor((xi-1)/A); the naive floor(xi/A) variant maps boundary
    pixels out of range (e.g. A=2, H=2, xi=4).
    """
    A, H, W = ang_res, view_h, view_w
    x = H * (xi - 1) + ((xi - 1) // A) * (1 - A * H) + 1
    y = W * (eta - 1) + ((eta - 1) // A) * (1 - A * W) + 1
    return x, y


# ---------------------------------------------------------------------------
# slicing and cropping
# ---------------------------------------------------------------------------

def extract_view(lf: LightField, u: int, v: int) -> np.ndarray:
    """View (u, v), 1-based. Returns an H x W copy."""
    A = lf.ang_res
    if not (1 <= u <= A and 1 <= v <= A):
        raise CoordinateError(f"view ({u},{v}) out of range for A={A}")
    return np.array(lf.data[u - 1, v - 1])


def extract_macro_pixel(lf: LightField, h: int, w: int) -> np.ndarray:
    """Macro-pixel at spatial coordinate (h, w), 1-based. Returns A x A copy."""
    if not (1 <= h <= lf.height and 1 <= w <= lf.width):
        raise CoordinateError(
            f"pixel ({h},{w}) out of range for {lf.height}x{lf.width}"
        )
    return np.array(lf.data[:, :, h - 1, w - 1])


def center_crop_angular(lf: LightField, a: int) -> LightField:
    """Keep the centered a x a views; requires an exactly centered window."""
    A = lf.ang_res
    if not 1 <= a <= A:
        raise ParameterError(f"crop size {a} not in 1..{A}")
    if (A - a) % 2:
        raise ParameterError(
            f"cannot center a {a}x{a} window in a {A}x{A} grid exactly"
        )
    off = (A - a) // 2
    return LightField(lf.data[off:off + a, off:off + a])


# ---------------------------------------------------------------------------
# joint dihedral transforms (spatial + angular), used by data augmentation
# ---------------------------------------------------------------------------

DIHEDRAL_CODES = range(8)
# code = 4*flip + rot: optional flip of the (v, w) axes, then `rot`
# counter-clockwise quarter turns applied jointly to (u,v) and (h,w).
DIHEDRAL_INVERSE = (0, 3, 2, 1, 4, 5, 6, 7)


def dihedral_4d(a: np.ndarray, code: int) -> np.ndarray:
    """Apply dihedral element `code` jointly to angular and spatial axes."""
    if code not in DIHEDRAL_CODES:
        raise ParameterError(f"dihedral code must be 0..7, got {code}")
    rot = code % 4
    if rot and (a.shape[2] != a.shape[3] or a.shape[0] != a.shape[1]):
        raise ParameterError("rotations require square views and angular grid")
    if code >= 4:
        a = a[:, ::-1, :, ::-1]
    if rot:
        a = np.rot90(np.rot90(a, rot, axes=(2, 3)), rot, axes=(0, 1))
    return np.ascontiguousarray(a)


def dihedral_2d(img: np.ndarray, code: int) -> np.ndarray:
    """Same group element acting on a plain 2D image (e.g. a MacPI)."""
    if code not in DIHEDRAL_CODES:
        raise ParameterError(f"dihedral code must be 0..7, got {code}")
    rot = code % 4
    if rot and img.shape[0] != img.shape[1]:
        raise ParameterError("rotations require a square image")
    if code >= 4:
        img = img[:, ::-1]
    if rot:
        img = np.rot90(img, rot)
    return np.ascontiguousarray(img)
