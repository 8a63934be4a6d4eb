"""Non-differentiable image utilities: bicubic resampling and YCbCr color
conversion.

The bicubic kernel uses a = -0.5. When downscaling, the kernel is widened
by 1/scale (antialiasing) and contribution weights are renormalized after
border clamping -- the degradation convention the SR literature shares.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import ParameterError, ShapeError


def cubic_kernel(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Keys cubic interpolation kernel."""
    ax = np.abs(x)
    ax2, ax3 = ax * ax, ax * ax * ax
    inner = (a + 2) * ax3 - (a + 3) * ax2 + 1
    outer = a * ax3 - 5 * a * ax2 + 8 * a * ax - 4 * a
    return np.where(ax <= 1, inner, np.where(ax < 2, outer, 0.0))


def _resize_matrix(n_in: int, scale: float, dtype=np.float64) -> np.ndarray:
    """Dense 1D resampling matrix (n_out x n_in) for the cubic kernel."""
    n_out = int(round(n_in * scale))
    if n_out < 1:
        raise ParameterError(f"scale {scale} collapses axis of length {n_in}")
    if scale < 1.0:
        width = 4.0 / scale

        def kernel(x):
            return scale * cubic_kernel(scale * x)
    else:
        width = 4.0

        def kernel(x):
            return cubic_kernel(x)

    taps = int(np.ceil(width)) + 2
    u = (np.arange(n_out) + 0.5) / scale - 0.5
    left = np.floor(u - width / 2).astype(int)
    idx = left[:, None] + np.arange(taps)[None, :]
    wts = kernel(u[:, None] - idx)
    wts /= wts.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, n_in - 1)
    m = np.zeros((n_out, n_in), dtype=dtype)
    rows = np.repeat(np.arange(n_out), taps)
    np.add.at(m, (rows, idx.ravel()), wts.ravel())
    return m


def bicubic_resize(img: np.ndarray, scale: float) -> np.ndarray:
    """Resample a 2D image by `scale` along both axes."""
    if img.ndim != 2:
        raise ShapeError(f"expected a 2D image, got ndim={img.ndim}")
    if not scale > 0:
        raise ParameterError(f"scale must be positive, got {scale}")
    if scale == 1.0:
        return np.array(img)
    mh = _resize_matrix(img.shape[0], scale, dtype=np.float64)
    mw = _resize_matrix(img.shape[1], scale, dtype=np.float64)
    out = mh @ img.astype(np.float64) @ mw.T
    return out.astype(img.dtype) if img.dtype.kind == "f" else out


# ---------------------------------------------------------------------------
# BT.601 studio-range color conversion, RGB in [0, 1]
# ---------------------------------------------------------------------------

_YCBCR_FROM_RGB = np.array(
    [[65.481, 128.553, 24.966],
     [-37.797, -74.203, 112.0],
     [112.0, -93.786, -18.214]]
) / 255.0
_YCBCR_OFFSET = np.array([16.0, 128.0, 128.0]) / 255.0


def _clamped_rgb(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ShapeError(f"last axis must hold RGB, got extent {rgb.shape[-1]}")
    if rgb.min() < 0.0 or rgb.max() > 1.0:
        warnings.warn("RGB values outside [0, 1]; clamping", stacklevel=3)
        rgb = np.clip(rgb, 0.0, 1.0)
    return rgb


def rgb_to_ycbcr(rgb: np.ndarray) -> np.ndarray:
    """RGB (..., 3) in [0,1] -> YCbCr (..., 3), Y in [16/255, 235/255]."""
    rgb = _clamped_rgb(rgb)
    return rgb @ _YCBCR_FROM_RGB.T + _YCBCR_OFFSET


def ycbcr_to_rgb(ycbcr: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_ycbcr`; output clipped to [0, 1]."""
    ycbcr = np.asarray(ycbcr, dtype=np.float64)
    if ycbcr.shape[-1] != 3:
        raise ShapeError(f"last axis must hold YCbCr, got {ycbcr.shape[-1]}")
    rgb = (ycbcr - _YCBCR_OFFSET) @ np.linalg.inv(_YCBCR_FROM_RGB).T
    return np.clip(rgb, 0.0, 1.0)


def rgb_to_y(rgb: np.ndarray) -> np.ndarray:
    """Y channel only: (16 + 65.481 R + 128.553 G + 24.966 B) / 255."""
    rgb = _clamped_rgb(rgb)
    return rgb @ _YCBCR_FROM_RGB[0] + _YCBCR_OFFSET[0]


def recombine_ycbcr(y_sr: np.ndarray, cb_up: np.ndarray, cr_up: np.ndarray) -> np.ndarray:
    """Stack a super-resolved Y with (already upsampled) chroma planes."""
    if y_sr.shape != cb_up.shape or y_sr.shape != cr_up.shape:
        raise ShapeError("Y/Cb/Cr plane shapes disagree")
    return ycbcr_to_rgb(np.stack([y_sr, cb_up, cr_up], axis=-1))
