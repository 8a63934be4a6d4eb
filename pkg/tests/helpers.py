"""Independent oracles and the finite-difference gradient checker.

Everything here is deliberately written as plain loops (or direct
formula evaluation), independent of the library's vectorized paths.
"""

import numpy as np

from lfin.autodiff import Tensor


# ---------------------------------------------------------------------------
# layout permutation oracles (element-by-element loops)
# ---------------------------------------------------------------------------

def macpi_oracle(lf4d: np.ndarray) -> np.ndarray:
    A, _, H, W = lf4d.shape
    out = np.empty((A * H, A * W), dtype=lf4d.dtype)
    for u in range(A):
        for v in range(A):
            for h in range(H):
                for w in range(W):
                    out[h * A + u, w * A + v] = lf4d[u, v, h, w]
    return out


def sai_oracle(lf4d: np.ndarray) -> np.ndarray:
    A, _, H, W = lf4d.shape
    out = np.empty((A * H, A * W), dtype=lf4d.dtype)
    for u in range(A):
        for v in range(A):
            for h in range(H):
                for w in range(W):
                    out[u * H + h, v * W + w] = lf4d[u, v, h, w]
    return out


def lf_from_macpi_oracle(img: np.ndarray, A: int) -> np.ndarray:
    H, W = img.shape[0] // A, img.shape[1] // A
    out = np.empty((A, A, H, W), dtype=img.dtype)
    for u in range(A):
        for v in range(A):
            for h in range(H):
                for w in range(W):
                    out[u, v, h, w] = img[h * A + u, w * A + v]
    return out


# ---------------------------------------------------------------------------
# convolution oracles
# ---------------------------------------------------------------------------

def conv3x3_same_oracle(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Ordinary 3x3 zero-padded cross-correlation of a single 2D plane."""
    H, W = img.shape
    pad = np.zeros((H + 2, W + 2), dtype=np.float64)
    pad[1:-1, 1:-1] = img
    out = np.zeros((H, W), dtype=np.float64)
    for i in range(3):
        for j in range(3):
            out += kernel[i, j] * pad[i:i + H, j:j + W]
    return out


def sfe_per_view_oracle(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray,
                        A: int) -> np.ndarray:
    """SFE on a MacPI tensor == per-view 3x3 convolution, reassembled.

    x: (C_in, AH, AW) MacPI-pattern feature, kernel: (C_out, C_in, 3, 3).
    """
    c_out, c_in = kernel.shape[:2]
    AH, AW = x.shape[1:]
    H, W = AH // A, AW // A
    out = np.zeros((c_out, AH, AW), dtype=np.float64)
    for u in range(A):
        for v in range(A):
            views = x[:, u::A, v::A]  # (C_in, H, W)
            for o in range(c_out):
                acc = np.full((H, W), bias[o], dtype=np.float64)
                for c in range(c_in):
                    acc += conv3x3_same_oracle(views[c], kernel[o, c])
                out[o, u::A, v::A] = acc
    return out


def afe_direct_oracle(x: np.ndarray, kernel: np.ndarray,
                      bias: np.ndarray, A: int) -> np.ndarray:
    """AFE == dense map over each macro-pixel, by direct summation.

    x: (C_in, AH, AW), kernel: (C_out, C_in, A, A).
    """
    c_out, c_in = kernel.shape[:2]
    H, W = x.shape[1] // A, x.shape[2] // A
    out = np.zeros((c_out, H, W), dtype=np.float64)
    for h in range(H):
        for w in range(W):
            patch = x[:, h * A:(h + 1) * A, w * A:(w + 1) * A]
            for o in range(c_out):
                out[o, h, w] = bias[o] + np.sum(kernel[o] * patch)
    return out


def conv1x1_matmul_oracle(x: np.ndarray, kernel: np.ndarray,
                          bias: np.ndarray) -> np.ndarray:
    """1x1 conv == matrix multiply over flattened pixels."""
    c_in, H, W = x.shape
    m = kernel[:, :, 0, 0]  # (C_out, C_in)
    flat = x.reshape(c_in, H * W)
    return (m @ flat + bias[:, None]).reshape(-1, H, W)


# ---------------------------------------------------------------------------
# bicubic oracle: direct per-pixel kernel evaluation
# ---------------------------------------------------------------------------

def cubic_w(x: float, a: float = -0.5) -> float:
    x = abs(x)
    if x <= 1:
        return (a + 2) * x**3 - (a + 3) * x**2 + 1
    if x < 2:
        return a * x**3 - 5 * a * x**2 + 8 * a * x - 4 * a
    return 0.0


def bicubic_1d_oracle(row: np.ndarray, scale: float) -> np.ndarray:
    """Direct evaluation of the (antialias-widened) cubic resampler on a
    1D signal, with border clamping and weight normalization."""
    n_in = len(row)
    n_out = int(round(n_in * scale))
    if scale < 1.0:
        kern = lambda t: scale * cubic_w(scale * t)
        width = 4.0 / scale
    else:
        kern = cubic_w
        width = 4.0
    out = np.zeros(n_out)
    for i in range(n_out):
        u = (i + 0.5) / scale - 0.5
        left = int(np.floor(u - width / 2))
        ws, vals = [], []
        for j in range(left, left + int(np.ceil(width)) + 2):
            ws.append(kern(u - j))
            vals.append(row[min(max(j, 0), n_in - 1)])
        ws = np.array(ws)
        out[i] = float(np.dot(ws, vals) / ws.sum())
    return out


def bicubic_2d_oracle(img: np.ndarray, scale: float) -> np.ndarray:
    tmp = np.stack([bicubic_1d_oracle(col, scale) for col in img.T], axis=1)
    return np.stack([bicubic_1d_oracle(row, scale) for row in tmp])


# ---------------------------------------------------------------------------
# finite-difference gradient checking
# ---------------------------------------------------------------------------

def fd_gradcheck(fn, tensors, rng, h=1e-6, rel_tol=1e-4, max_checks=40):
    """Check analytic gradients of `fn(tensors) -> Tensor` against central
    finite differences in float64.

    Projects the output onto a fixed random direction so the check
    reduces to a scalar. Every tensor in `tensors` must be float64 and
    require grad. Asserts on failure.
    """
    for t in tensors:
        t.zero_grad()
    out = fn(*tensors)
    proj = rng.standard_normal(out.data.shape)
    out.backward(proj)

    for t in tensors:
        flat = t.data.reshape(-1)
        grad = t.grad.reshape(-1)
        n = flat.size
        idxs = rng.choice(n, size=min(max_checks, n), replace=False)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            lp = float(np.sum(fn(*tensors).data * proj))
            flat[i] = orig - h
            lm = float(np.sum(fn(*tensors).data * proj))
            flat[i] = orig
            num = (lp - lm) / (2 * h)
            ana = grad[i]
            err = abs(ana - num) / max(abs(num), abs(ana), 1.0)
            assert err <= rel_tol, (
                f"gradient mismatch at flat index {i}: "
                f"analytic {ana}, numeric {num}, rel err {err}"
            )


def rand_tensor(rng, shape, requires_grad=True) -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=requires_grad)
