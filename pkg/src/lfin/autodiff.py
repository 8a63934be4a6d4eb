"""Minimal reverse-mode autodiff over dense numpy arrays.

The network only needs a handful of operators (strided/dilated
convolution, 1x1 convolution, ReLU, pixel shuffle, nearest/bilinear
upsampling, channel concatenation, elementwise add, the MacPI->SAI
channel-wise reshape, and L1 loss), so a small dynamic tape is simpler
and faster to audit than a general framework.

Tensors carry data of shape (C, H, W) or (B, C, H, W); the channel axis
is always -3. Arithmetic runs in the dtype of the inputs: float32 for
training/inference, float64 for gradient verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError, ShapeError, StateError


class Tensor:
    """Dense value array with an optional gradient buffer and tape hooks."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Backpropagate from this node through the recorded tape."""
        if not self.requires_grad:
            raise StateError("backward() on a tensor that does not require grad")
        if grad is None:
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.accumulate_grad(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


def _result(data: np.ndarray, parents: tuple, backward) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward = backward
    return out


def as_tensor(x, requires_grad: bool = False) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x), requires_grad)


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

@dataclass
class ConvWeights:
    """A convolution layer: 4D kernel, per-output-channel bias, geometry."""

    kernel: Tensor  # (out_c, in_c, kh, kw)
    bias: Tensor    # (out_c,)
    stride: int = 1
    dilation: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.kernel.data.ndim != 4:
            raise ShapeError("kernel must be 4D (out, in, kh, kw)")
        if self.bias.data.shape != (self.kernel.data.shape[0],):
            raise ShapeError("bias length must equal output channel count")

    @property
    def out_channels(self) -> int:
        return self.kernel.data.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernel.data.shape[1]


def conv2d(x: Tensor, w: ConvWeights) -> Tensor:
    """2D convolution (cross-correlation) with stride/dilation/zero padding."""
    k, b = w.kernel.data, w.bias.data
    out_c, in_c, kh, kw = k.shape
    xd = x.data
    if xd.ndim not in (3, 4):
        raise ShapeError(f"conv input must be 3D or 4D, got ndim={xd.ndim}")
    if xd.shape[-3] != in_c:
        raise ShapeError(f"expected {in_c} input channels, got {xd.shape[-3]}")
    s, d, p = w.stride, w.dilation, w.padding
    batched = xd.ndim == 4
    x4 = xd if batched else xd[None]
    if p:
        xp = np.pad(x4, [(0, 0), (0, 0), (p, p), (p, p)])
    else:
        xp = x4
    eff_h, eff_w = (kh - 1) * d + 1, (kw - 1) * d + 1
    if xp.shape[-2] < eff_h or xp.shape[-1] < eff_w:
        raise ShapeError(
            f"input {xp.shape[-2:]} smaller than effective kernel {(eff_h, eff_w)}"
        )
    win = sliding_window_view(xp, (eff_h, eff_w), axis=(-2, -1))
    win = win[..., ::s, ::s, ::d, ::d]
    out = np.einsum("bchwij,ocij->bohw", win, k, optimize=True)
    out += b.reshape((out_c, 1, 1))
    if not batched:
        out = out[0]

    def _bw(g: np.ndarray) -> None:
        g4 = g if batched else g[None]
        if w.kernel.requires_grad:
            w.kernel.accumulate_grad(
                np.einsum("bchwij,bohw->ocij", win, g4, optimize=True)
            )
        if w.bias.requires_grad:
            w.bias.accumulate_grad(g4.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            gx = np.zeros_like(xp)
            oh, ow = g4.shape[-2:]
            for i in range(kh):
                for j in range(kw):
                    t = np.einsum("bohw,oc->bchw", g4, k[:, :, i, j],
                                  optimize=True)
                    gx[..., i * d:i * d + oh * s:s, j * d:j * d + ow * s:s] += t
            if p:
                gx = gx[..., p:-p, p:-p]
            x.accumulate_grad(gx if batched else gx[0])

    return _result(out, (x, w.kernel, w.bias), _bw)


def afe_forward(x: Tensor, w: ConvWeights, ang_res: int) -> Tensor:
    """Angular feature extraction: AxA kernel, stride A, no padding.

    Each output pixel reads exactly one macro-pixel; windows tile the
    input, never straddling macro-pixel boundaries.
    """
    A = ang_res
    kh, kw = w.kernel.data.shape[2:]
    if (kh, kw) != (A, A) or w.stride != A or w.padding != 0 or w.dilation != 1:
        raise ShapeError(f"weights do not have AFE geometry for A={A}")
    if x.data.shape[-2] % A or x.data.shape[-1] % A:
        raise ShapeError(
            f"input extents {x.data.shape[-2:]} not divisible by A={A}"
        )
    return conv2d(x, w)


def sfe_forward(x: Tensor, w: ConvWeights, ang_res: int) -> Tensor:
    """Spatial feature extraction: 3x3 kernel, dilation A, zero padding A.

    Taps land only on same-view pixels of a MacPI; output keeps the
    input's spatial extents. A 1x1 kernel (used by the angular-only
    network variant) is accepted as the degenerate case.
    """
    A = ang_res
    kh, kw = w.kernel.data.shape[2:]
    if (kh, kw) == (1, 1):
        if w.stride != 1 or w.padding != 0:
            raise ShapeError("1x1 SFE must have stride 1, padding 0")
    elif (kh, kw) == (3, 3):
        if w.stride != 1 or w.dilation != A or w.padding != A:
            raise ShapeError(f"weights do not have SFE geometry for A={A}")
    else:
        raise ShapeError(f"SFE kernel must be 3x3 or 1x1, got {(kh, kw)}")
    return conv2d(x, w)


def conv1x1_forward(x: Tensor, w: ConvWeights) -> Tensor:
    """Per-pixel channel mixing."""
    if w.kernel.data.shape[2:] != (1, 1) or w.stride != 1 or w.padding != 0:
        raise ShapeError("weights do not have 1x1 geometry")
    return conv2d(x, w)


# ---------------------------------------------------------------------------
# elementwise / structural ops
# ---------------------------------------------------------------------------

def relu_forward(x: Tensor) -> Tensor:
    out = np.maximum(x.data, 0)

    def _bw(g):
        if x.requires_grad:
            x.accumulate_grad(g * (x.data > 0))

    return _result(out, (x,), _bw)


def residual_add(x: Tensor, y: Tensor) -> Tensor:
    if x.data.shape != y.data.shape:
        raise ShapeError(f"shape mismatch {x.data.shape} vs {y.data.shape}")
    out = x.data + y.data

    def _bw(g):
        if x.requires_grad:
            x.accumulate_grad(g)
        if y.requires_grad:
            y.accumulate_grad(g)

    return _result(out, (x, y), _bw)


def concat_channels(xs: list[Tensor]) -> Tensor:
    if not xs:
        raise ParameterError("concat of an empty list")
    base = xs[0].data.shape
    for t in xs[1:]:
        if t.data.shape[:-3] != base[:-3] or t.data.shape[-2:] != base[-2:]:
            raise ShapeError("concat inputs disagree on batch/spatial extents")
    out = np.concatenate([t.data for t in xs], axis=-3)
    sizes = [t.data.shape[-3] for t in xs]
    bounds = np.cumsum([0] + sizes)

    def _bw(g):
        for t, lo, hi in zip(xs, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[-3] = slice(lo, hi)
                t.accumulate_grad(g[tuple(sl)])

    return _result(out, tuple(xs), _bw)


# ---------------------------------------------------------------------------
# pixel shuffle and friends
# ---------------------------------------------------------------------------

def _shuffle_nd(a: np.ndarray, r: int) -> np.ndarray:
    lead, (c, h, w) = a.shape[:-3], a.shape[-3:]
    cc = c // (r * r)
    a = a.reshape(lead + (cc, r, r, h, w))
    a = np.moveaxis(a, (-4, -3), (-3, -1))  # -> (cc, h, r, w, r)
    return np.ascontiguousarray(a).reshape(lead + (cc, h * r, w * r))


def _unshuffle_nd(a: np.ndarray, r: int) -> np.ndarray:
    lead, (c, hr, wr) = a.shape[:-3], a.shape[-3:]
    h, w = hr // r, wr // r
    a = a.reshape(lead + (c, h, r, w, r))
    a = np.moveaxis(a, (-3, -1), (-4, -3))  # -> (c, r, r, h, w)
    return np.ascontiguousarray(a).reshape(lead + (c * r * r, h, w))


def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Sub-pixel rearrangement: (r^2*C, h, w) -> (C, r*h, r*w).

    Channel c*r^2 + a*r + b lands at output offset (a, b) within each
    r x r cell (row-major sub-pixel order).
    """
    if r < 1:
        raise ParameterError(f"shuffle factor must be >= 1, got {r}")
    if x.data.shape[-3] % (r * r):
        raise ShapeError(
            f"channel extent {x.data.shape[-3]} not divisible by r^2={r * r}"
        )
    out = _shuffle_nd(x.data, r)

    def _bw(g):
        if x.requires_grad:
            x.accumulate_grad(_unshuffle_nd(g, r))

    return _result(out, (x,), _bw)


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """Exact inverse of :func:`pixel_shuffle`."""
    if r < 1:
        raise ParameterError(f"shuffle factor must be >= 1, got {r}")
    if x.data.shape[-2] % r or x.data.shape[-1] % r:
        raise ShapeError(f"spatial extents {x.data.shape[-2:]} not divisible by {r}")
    out = _unshuffle_nd(x.data, r)

    def _bw(g):
        if x.requires_grad:
            x.accumulate_grad(_shuffle_nd(g, r))

    return _result(out, (x,), _bw)


def macpi_to_sai_channels(x: Tensor, ang_res: int) -> Tensor:
    """Channel-wise MacPI -> SAI-array permutation of the spatial axes."""
    A = ang_res
    lead, (c, ah, aw) = x.data.shape[:-3], x.data.shape[-3:]
    if ah % A or aw % A:
        raise ShapeError(f"spatial extents {(ah, aw)} not divisible by A={A}")
    h, w = ah // A, aw // A

    def fwd(a):
        a = a.reshape(lead + (c, h, A, w, A))
        a = np.moveaxis(a, (-3, -1), (-4, -2))  # (c, A, h, A, w)
        return np.ascontiguousarray(a).reshape(lead + (c, ah, aw))

    def inv(a):
        a = a.reshape(lead + (c, A, h, A, w))
        a = np.moveaxis(a, (-4, -2), (-3, -1))  # (c, h, A, w, A)
        return np.ascontiguousarray(a).reshape(lead + (c, ah, aw))

    out = fwd(x.data)

    def _bw(g):
        if x.requires_grad:
            x.accumulate_grad(inv(g))

    return _result(out, (x,), _bw)


# ---------------------------------------------------------------------------
# interpolating upsamplers
# ---------------------------------------------------------------------------

def upsample_nearest(x: Tensor, r: int) -> Tensor:
    """Replicate each pixel into an r x r block."""
    if r < 1:
        raise ParameterError(f"upsample factor must be >= 1, got {r}")
    out = np.repeat(np.repeat(x.data, r, axis=-2), r, axis=-1)

    def _bw(g):
        if x.requires_grad:
            lead, (h, w) = g.shape[:-2], x.data.shape[-2:]
            gr = g.reshape(lead + (h, r, w, r)).sum(axis=(-3, -1))
            x.accumulate_grad(gr)

    return _result(out, (x,), _bw)


def _linear_matrix(n_in: int, r: int, dtype) -> np.ndarray:
    """Dense 1D linear-interpolation matrix, align-corners-false convention."""
    n_out = n_in * r
    src = (np.arange(n_out) + 0.5) / r - 0.5
    i0 = np.clip(np.floor(src).astype(int), 0, n_in - 1)
    i1 = np.clip(i0 + 1, 0, n_in - 1)
    f = np.clip(src - np.floor(src), 0.0, 1.0)
    f[src < 0] = 0.0
    m = np.zeros((n_out, n_in), dtype=dtype)
    rows = np.arange(n_out)
    np.add.at(m, (rows, i0), 1.0 - f)
    np.add.at(m, (rows, i1), f)
    return m


def upsample_bilinear(x: Tensor, r: int) -> Tensor:
    """Separable bilinear upsampling (align-corners false)."""
    if r < 1:
        raise ParameterError(f"upsample factor must be >= 1, got {r}")
    h, w = x.data.shape[-2:]
    mh = _linear_matrix(h, r, x.data.dtype)
    mw = _linear_matrix(w, r, x.data.dtype)
    out = np.einsum("oh,...hw,pw->...op", mh, x.data, mw, optimize=True)

    def _bw(g):
        if x.requires_grad:
            x.accumulate_grad(
                np.einsum("oh,...op,pw->...hw", mh, g, mw, optimize=True)
            )

    return _result(out, (x,), _bw)


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error; subgradient sign(pred - target) / n (0 at ties)."""
    if pred.data.shape != target.data.shape:
        raise ShapeError(
            f"shape mismatch {pred.data.shape} vs {target.data.shape}"
        )
    diff = pred.data - target.data
    out = np.abs(diff).mean()

    def _bw(g):
        s = np.sign(diff) * (g / diff.size)
        if pred.requires_grad:
            pred.accumulate_grad(s)
        if target.requires_grad:
            target.accumulate_grad(-s)

    return _result(np.asarray(out), (pred, target), _bw)
