"""PSNR/SSIM on Y-channel images plus the two-level aggregation protocol:
a scene's score is the mean over its A^2 views, a dataset's score is the
mean over its scenes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError, ShapeError

PSNR_CAP_DB = 100.0


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for values in [0, 1].

    Capped at 100 dB when the images are identical, so aggregation stays
    finite.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB))


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a: np.ndarray, b: np.ndarray, k1: float = 0.01, k2: float = 0.03,
         win_size: int = 11, sigma: float = 1.5) -> float:
    """Single-scale SSIM with a Gaussian window, dynamic range 1.

    Local statistics are computed over valid (fully interior) windows
    and the map is averaged.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim != 2:
        raise ShapeError(f"expected 2D images, got ndim={a.ndim}")
    if min(a.shape) < win_size:
        raise ShapeError(
            f"image {a.shape} smaller than the {win_size}x{win_size} window"
        )
    w = _gaussian_window(win_size, sigma)

    def filt(img):
        win = sliding_window_view(img, (win_size, win_size))
        return np.einsum("hwij,ij->hw", win, w, optimize=True)

    mu_a, mu_b = filt(a), filt(b)
    saa = filt(a * a) - mu_a ** 2
    sbb = filt(b * b) - mu_b ** 2
    sab = filt(a * b) - mu_a * mu_b
    c1, c2 = k1 ** 2, k2 ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (saa + sbb + c2)
    return float(np.mean(num / den))


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneReport:
    """Per-view score matrices (A x A) for one scene."""

    scene: str
    psnr_views: np.ndarray
    ssim_views: np.ndarray

    def __post_init__(self):
        p, s = np.asarray(self.psnr_views), np.asarray(self.ssim_views)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape != s.shape:
            raise ParameterError("per-view matrices must be square and equal-shaped")
        object.__setattr__(self, "psnr_views", np.array(p, dtype=np.float64))
        object.__setattr__(self, "ssim_views", np.array(s, dtype=np.float64))

    @property
    def psnr_mean(self) -> float:
        return float(self.psnr_views.mean())

    @property
    def ssim_mean(self) -> float:
        return float(self.ssim_views.mean())


@dataclass(frozen=True)
class MetricReport:
    """Dataset-level aggregate: mean of per-scene means."""

    scenes: tuple
    psnr_mean: float
    ssim_mean: float


def aggregate(reports: list[SceneReport]) -> MetricReport:
    """Two-level mean: per-scene over views, then over scenes."""
    if not reports:
        raise ParameterError("no scene reports to aggregate")
    return MetricReport(
        scenes=tuple(reports),
        psnr_mean=float(np.mean([r.psnr_mean for r in reports])),
        ssim_mean=float(np.mean([r.ssim_mean for r in reports])),
    )


def score_views(sr_lf: np.ndarray, gt_lf: np.ndarray, scene: str,
                crop_border: int = 0) -> SceneReport:
    """Per-view PSNR/SSIM between two (A, A, H, W) Y-channel arrays."""
    if sr_lf.shape != gt_lf.shape:
        raise ShapeError(f"shape mismatch {sr_lf.shape} vs {gt_lf.shape}")
    if crop_border < 0:
        raise ParameterError("crop_border must be >= 0")
    A = sr_lf.shape[0]
    c = crop_border
    sl = slice(c, -c) if c else slice(None)
    p = np.empty((A, A))
    s = np.empty((A, A))
    for u in range(A):
        for v in range(A):
            x, y = sr_lf[u, v, sl, sl], gt_lf[u, v, sl, sl]
            p[u, v] = psnr(x, y)
            s[u, v] = ssim(x, y)
    return SceneReport(scene, p, s)
