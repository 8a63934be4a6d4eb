"""Binary weight-file format.

Layout (all integers little-endian):

    magic   4s   = b"LFIN"
    version u32  = 1
    config       N, K, C, A, scale as u16; variant, ang_upsample as u8
    count   u32  number of tensors
    tensor *     name_len u16, UTF-8 name, ndims u8, dims u32[ndims],
                 payload float32 little-endian
    crc32   u32  CRC-32 of all preceding bytes

Tensors are stored in enumeration order, `<layer>.kernel` then
`<layer>.bias` for every layer the embedded config induces; load
validates the CRC and that names/shapes match that enumeration exactly.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .autodiff import ConvWeights, Tensor
from .errors import ChecksumError, FormatError, LoadError, ShapeError
from .model import ANG_UPSAMPLE_MODES, ModelParams, NetConfig, VARIANTS, layer_specs

MAGIC = b"LFIN"
VERSION = 1


def _pack_config(cfg: NetConfig) -> bytes:
    return struct.pack(
        "<5H2B",
        cfg.n_groups, cfg.blocks_per_group, cfg.channels, cfg.ang_res,
        cfg.scale,
        VARIANTS.index(cfg.variant),
        ANG_UPSAMPLE_MODES.index(cfg.ang_upsample),
    )


def _unpack_config(blob: bytes) -> NetConfig:
    n, k, c, a, scale, variant, ups = struct.unpack("<5H2B", blob)
    if variant >= len(VARIANTS) or ups >= len(ANG_UPSAMPLE_MODES):
        raise FormatError(f"unknown variant/upsample codes ({variant}, {ups})")
    return NetConfig(
        n_groups=n, blocks_per_group=k, channels=c, ang_res=a, scale=scale,
        variant=VARIANTS[variant], ang_upsample=ANG_UPSAMPLE_MODES[ups],
    )


def _expected_tensors(cfg: NetConfig) -> list[tuple[str, tuple]]:
    out = []
    for s in layer_specs(cfg):
        out.append((f"{s.name}.kernel", (s.out_c, s.in_c, s.k, s.k)))
        out.append((f"{s.name}.bias", (s.out_c,)))
    return out


def save_weights(path, params: ModelParams, cfg: NetConfig) -> None:
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<I", VERSION)
    buf += _pack_config(cfg)
    expected = _expected_tensors(cfg)
    buf += struct.pack("<I", len(expected))
    flat = {}
    for name, w in params.items():
        flat[f"{name}.kernel"] = w.kernel.data
        flat[f"{name}.bias"] = w.bias.data
    for name, shape in expected:
        if name not in flat:
            raise ShapeError(f"params missing tensor {name} required by config")
        arr = np.ascontiguousarray(flat[name], dtype="<f4")
        if arr.shape != shape:
            raise ShapeError(
                f"tensor {name} has shape {arr.shape}, config implies {shape}"
            )
        nb = name.encode("utf-8")
        buf += struct.pack("<H", len(nb)) + nb
        buf += struct.pack("<B", arr.ndim)
        buf += struct.pack(f"<{arr.ndim}I", *arr.shape)
        buf += arr.tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    with open(path, "wb") as f:
        f.write(bytes(buf))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError("truncated weight file")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(path, expected_cfg: NetConfig = None):
    """Load and validate a weight file; returns (params, cfg)."""
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise LoadError(f"cannot read weight file {path}: {e}") from e
    if len(blob) < 4 + 4 + 12 + 4 + 4:
        raise FormatError("file too small to be a weight file")
    stored_crc, = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError("CRC32 mismatch: weight file is corrupted")
    r = _Reader(blob[:-4])
    if r.take(4) != MAGIC:
        raise FormatError("bad magic: not a weight file")
    version, = r.unpack("<I")
    if version != VERSION:
        raise FormatError(f"unsupported weight-file version {version}")
    cfg = _unpack_config(r.take(struct.calcsize("<5H2B")))
    if expected_cfg is not None and cfg != expected_cfg:
        raise ShapeError(
            f"weight-file config {cfg} does not match requested {expected_cfg}"
        )
    count, = r.unpack("<I")
    expected = _expected_tensors(cfg)
    if count != len(expected):
        raise ShapeError(
            f"file holds {count} tensors, config implies {len(expected)}"
        )
    tensors = {}
    for exp_name, exp_shape in expected:
        name_len, = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        ndims, = r.unpack("<B")
        dims = r.unpack(f"<{ndims}I")
        if name != exp_name or dims != exp_shape:
            raise ShapeError(
                f"tensor {name}{dims} does not match expected {exp_name}{exp_shape}"
            )
        n = int(np.prod(dims, dtype=np.int64)) if dims else 1
        arr = np.frombuffer(r.take(4 * n), dtype="<f4").reshape(dims)
        tensors[name] = arr.astype(np.float32)
    if r.pos != len(r.blob):
        raise FormatError("trailing bytes after tensor payload")

    params: ModelParams = {}
    for s in layer_specs(cfg):
        params[s.name] = ConvWeights(
            Tensor(tensors[f"{s.name}.kernel"], requires_grad=True),
            Tensor(tensors[f"{s.name}.bias"], requires_grad=True),
            stride=s.stride, dilation=s.dilation, padding=s.padding,
        )
    return params, cfg
