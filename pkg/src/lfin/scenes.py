"""Scene ingestion and export.

Three on-disk layouts are supported:

* views-dir: a directory of exactly A^2 files named ``view_UU_VV.png``
  (1-indexed, zero-padded);
* sai-grid: a single image tiling the views in an A x A grid;
* macpi: a single image in macro-pixel order.

Only 8-bit PNG is required; 16-bit PNGs are accepted and rescaled.
Color images keep their RGB planes alongside the Y channel so chroma can
be recombined after super-resolution.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import lf_repr
from .errors import LoadError, ParameterError
from .imageproc import rgb_to_y
from .lf_repr import LightField, center_crop_angular

LAYOUTS = ("views-dir", "sai-grid", "macpi")
_VIEW_RE = re.compile(r"view_(\d{2})_(\d{2})\.png$")


@dataclass(frozen=True)
class Scene:
    """A light field plus, when the source was color, its RGB planes."""

    name: str
    y: LightField
    rgb: np.ndarray = None  # (A, A, H, W, 3) in [0, 1], or None

    def __post_init__(self):
        if self.rgb is not None:
            if self.rgb.shape != self.y.data.shape + (3,):
                raise LoadError("RGB planes do not match the Y light field")


def _read_image(path: Path) -> np.ndarray:
    """PNG -> float array in [0, 1]; (H, W) for gray, (H, W, 3) for color."""
    try:
        img = Image.open(path)
    except OSError as e:
        raise LoadError(f"cannot read image {path}: {e}") from e
    if img.mode in ("I", "I;16", "I;16B"):
        return np.asarray(img, dtype=np.float64) / 65535.0
    if img.mode == "L":
        return np.asarray(img, dtype=np.float64) / 255.0
    if img.mode in ("RGB", "RGBA", "P", "LA"):
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    raise LoadError(f"unsupported image mode {img.mode} in {path}")


def _write_image(path: Path, arr: np.ndarray) -> None:
    """Float array in [0, 1] -> 8-bit PNG (gray or RGB)."""
    a = np.clip(np.asarray(arr), 0.0, 1.0)
    b = np.round(a * 255.0).astype(np.uint8)
    Image.fromarray(b).save(path)


def infer_layout(path) -> str:
    return "views-dir" if Path(path).is_dir() else "sai-grid"


def load_scene(path, layout: str = None, ang_res: int = None,
               crop_ang: int = None) -> Scene:
    """Load a scene into the canonical representation.

    `ang_res` declares the source's angular resolution (required for the
    single-image layouts, validated against the file count for
    views-dir). `crop_ang` keeps only the central crop_ang x crop_ang
    views, per the angular-resolution ablation protocol.
    """
    path = Path(path)
    layout = layout or infer_layout(path)
    if layout not in LAYOUTS:
        raise ParameterError(f"unknown layout {layout!r}")
    if layout == "views-dir":
        scene = _load_views_dir(path, ang_res)
    else:
        if ang_res is None:
            raise ParameterError(f"layout {layout} requires an angular resolution")
        img = _read_image(path)
        scene = _from_2d(path.stem, img, layout, ang_res)
    if crop_ang is not None and crop_ang != scene.y.ang_res:
        if crop_ang > scene.y.ang_res:
            raise ParameterError(
                f"cannot crop to {crop_ang} views from {scene.y.ang_res}"
            )
        y = center_crop_angular(scene.y, crop_ang)
        rgb = scene.rgb
        if rgb is not None:
            off = (scene.y.ang_res - crop_ang) // 2
            rgb = rgb[off:off + crop_ang, off:off + crop_ang]
        scene = Scene(scene.name, y, rgb)
    return scene


def _load_views_dir(path: Path, ang_res: int = None) -> Scene:
    if not path.is_dir():
        raise LoadError(f"{path} is not a directory")
    files = {}
    for f in sorted(path.iterdir()):
        m = _VIEW_RE.match(f.name)
        if m:
            files[(int(m.group(1)), int(m.group(2)))] = f
    if not files:
        raise LoadError(f"no view_UU_VV.png files in {path}")
    a = int(round(len(files) ** 0.5))
    if a * a != len(files):
        raise LoadError(f"{len(files)} view files do not form a square grid")
    if ang_res is not None and ang_res != a:
        raise LoadError(f"declared A={ang_res} but found {a}x{a} views")
    expected = {(u, v) for u in range(1, a + 1) for v in range(1, a + 1)}
    if set(files) != expected:
        missing = sorted(expected - set(files))[:3]
        raise LoadError(f"missing view files, e.g. {missing}")
    imgs = {}
    shape = None
    for uv, f in files.items():
        img = _read_image(f)
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise LoadError(
                f"inconsistent view sizes: {f.name} is {img.shape}, expected {shape}"
            )
        imgs[uv] = img
    stack = np.stack([
        np.stack([imgs[(u, v)] for v in range(1, a + 1)])
        for u in range(1, a + 1)
    ])
    if stack.ndim == 5:  # color
        return Scene(path.name, LightField(rgb_to_y(stack)), stack)
    return Scene(path.name, LightField(stack))


def _from_2d(name: str, img: np.ndarray, layout: str, ang_res: int) -> Scene:
    to_lf = (lf_repr.sai_2d_to_lf if layout == "sai-grid"
             else lf_repr.macpi_2d_to_lf)
    if img.shape[0] % ang_res or img.shape[1] % ang_res:
        raise LoadError(
            f"image extents {img.shape[:2]} not divisible by A={ang_res}"
        )
    if img.ndim == 3:
        rgb = np.stack([to_lf(img[..., c], ang_res) for c in range(3)], axis=-1)
        return Scene(name, LightField(rgb_to_y(rgb)), rgb)
    return Scene(name, LightField(to_lf(img, ang_res)))


def save_scene(scene: Scene, path, layout: str) -> None:
    """Write a scene in the requested layout (8-bit PNG)."""
    if layout not in LAYOUTS:
        raise ParameterError(f"unknown layout {layout!r}")
    path = Path(path)
    data = scene.rgb if scene.rgb is not None else scene.y.data
    A = scene.y.ang_res
    if layout == "views-dir":
        path.mkdir(parents=True, exist_ok=True)
        for u in range(A):
            for v in range(A):
                _write_image(path / f"view_{u + 1:02d}_{v + 1:02d}.png",
                             data[u, v])
        return
    to_2d = (lf_repr.lf_to_sai_2d if layout == "sai-grid"
             else lf_repr.lf_to_macpi_2d)
    if data.ndim == 5:
        img = np.stack([to_2d(data[..., c]) for c in range(3)], axis=-1)
    else:
        img = to_2d(data)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_image(path, img)


def discover_scenes(data_dir) -> list[Path]:
    """Scene sources under a dataset directory, lexicographic order:
    subdirectories (views-dir) and .png files (sai-grid)."""
    root = Path(data_dir)
    if not root.is_dir():
        raise LoadError(f"{root} is not a directory")
    out = [p for p in sorted(root.iterdir())
           if p.is_dir() or p.suffix.lower() == ".png"]
    if not out:
        raise LoadError(f"no scenes found under {root}")
    return out
