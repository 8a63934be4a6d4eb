"""Training: patch sampling with bicubic degradation, joint
spatial-angular dihedral augmentation, L1 loss, Adam, and the halving
learning-rate schedule.

The loop is fully seeded: the same seed, data and config give a
bit-identical loss trace and final weights (single-threaded numpy).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lf_repr
from .autodiff import Tensor, l1_loss
from .errors import ParameterError, ShapeError, StateError
from .imageproc import bicubic_resize
from .lf_repr import LightField, MacPiImage, SaiArrayImage
from .model import ModelParams, NetConfig, forward, init_params


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 5e-4
    lr_halve_every: int = 10
    epochs: int = 40
    batch: int = 12
    patch: int = 64  # HR pixels per view side
    scale: int = 2
    seed: int = 0
    steps_per_epoch: int = None  # default: ceil(n_scenes / batch)
    augment: bool = True

    def __post_init__(self):
        if min(self.lr0, self.lr_halve_every, self.epochs, self.batch,
               self.patch, self.scale) <= 0:
            raise ParameterError("all training parameters must be positive")
        if self.patch % self.scale:
            raise ParameterError(
                f"patch {self.patch} not divisible by scale {self.scale}"
            )


@dataclass(frozen=True)
class Sample:
    """One LR/HR training pair."""

    lr_macpi: MacPiImage
    hr_sai: SaiArrayImage

    def __post_init__(self):
        if self.lr_macpi.ang_res != self.hr_sai.ang_res:
            raise ShapeError("LR/HR angular resolutions disagree")


def augment(lf: LightField, code: int) -> LightField:
    """Apply dihedral element `code` (0..7) jointly to spatial and angular
    axes; code 0 is the identity."""
    return LightField(lf_repr.dihedral_4d(lf.data, code))


def make_training_pair(lf_hr: LightField, cfg: TrainConfig,
                       rng: np.random.Generator,
                       aug_code: int = 0) -> Sample:
    """Random patch crop (same window across views), optional dihedral
    augmentation, per-view bicubic downscale, MacPI reassembly."""
    p, a = cfg.patch, cfg.scale
    H, W = lf_hr.height, lf_hr.width
    if p > H or p > W:
        raise ParameterError(f"patch {p} larger than view {H}x{W}")
    top = int(rng.integers(0, H - p + 1))
    left = int(rng.integers(0, W - p + 1))
    hr = lf_hr.data[:, :, top:top + p, left:left + p]
    if aug_code:
        hr = lf_repr.dihedral_4d(hr, aug_code)
    lr = np.stack([
        np.stack([bicubic_resize(hr[u, v], 1.0 / a) for v in range(hr.shape[1])])
        for u in range(hr.shape[0])
    ])
    lr = np.clip(lr, 0.0, 1.0)
    A = lf_hr.ang_res
    return Sample(
        MacPiImage(lf_repr.lf_to_macpi_2d(lr), A),
        SaiArrayImage(lf_repr.lf_to_sai_2d(hr), A),
    )


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """lr0 halved every `lr_halve_every` epochs (0-based epochs)."""
    if epoch < 0:
        raise ParameterError("epoch must be >= 0")
    return cfg.lr0 * 0.5 ** (epoch // cfg.lr_halve_every)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment buffers mirroring ModelParams, plus step count."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        st = cls()
        for name, w in params.items():
            st.m[name + ".kernel"] = np.zeros_like(w.kernel.data)
            st.v[name + ".kernel"] = np.zeros_like(w.kernel.data)
            st.m[name + ".bias"] = np.zeros_like(w.bias.data)
            st.v[name + ".bias"] = np.zeros_like(w.bias.data)
        return st


def adam_step(params: ModelParams, state: AdamState, lr: float,
              grads: dict = None) -> None:
    """Bias-corrected Adam update, in place.

    Gradients default to the .grad buffers populated by backward().
    """
    state.step += 1
    t, b1, b2 = state.step, state.beta1, state.beta2
    for name, w in params.items():
        for part, tensor in (("kernel", w.kernel), ("bias", w.bias)):
            key = f"{name}.{part}"
            if grads is not None:
                g = grads.get(key)
            else:
                g = tensor.grad
            if g is None:
                raise StateError(f"missing gradient for {key}")
            if g.shape != tensor.data.shape:
                raise StateError(f"gradient shape mismatch for {key}")
            m = state.m[key]
            v = state.v[key]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** t)
            v_hat = v / (1 - b2 ** t)
            tensor.data -= (lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(
                tensor.data.dtype
            )


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

def zero_grads(params: ModelParams) -> None:
    for w in params.values():
        w.kernel.zero_grad()
        w.bias.zero_grad()


def train(dataset: list, net_cfg: NetConfig, cfg: TrainConfig,
          params: ModelParams = None, max_iters: int = None,
          on_iter=None):
    """Run the seeded training loop.

    dataset: list of HR LightField scenes. Returns (params, trace) where
    trace is a list of (iteration, epoch, loss) rows.
    """
    if not dataset:
        raise ParameterError("empty training dataset")
    if cfg.scale != net_cfg.scale:
        raise ParameterError("training scale disagrees with network scale")
    rng = np.random.default_rng(cfg.seed)
    if params is None:
        params = init_params(net_cfg, seed=cfg.seed)
    state = AdamState.for_params(params)
    n = len(dataset)
    steps = cfg.steps_per_epoch or -(-n // cfg.batch)
    trace: list[tuple[int, int, float]] = []
    it = 0
    for epoch in range(cfg.epochs):
        lr = lr_at(epoch, cfg)
        order = rng.permutation(n)
        for step in range(steps):
            xs, ys = [], []
            for b in range(cfg.batch):
                scene = dataset[order[(step * cfg.batch + b) % n]]
                code = int(rng.integers(0, 8)) if cfg.augment else 0
                s = make_training_pair(scene, cfg, rng, aug_code=code)
                xs.append(s.lr_macpi.data[None])
                ys.append(s.hr_sai.data[None])
            x = Tensor(np.stack(xs).astype(np.float32))
            y = Tensor(np.stack(ys).astype(np.float32))
            zero_grads(params)
            loss = l1_loss(forward(x, params, net_cfg), y)
            loss.backward()
            adam_step(params, state, lr)
            trace.append((it, epoch, float(loss.data)))
            if on_iter is not None:
                on_iter(it, epoch, float(loss.data))
            it += 1
            if max_iters is not None and it >= max_iters:
                return params, trace
    return params, trace


def trace_csv_lines(trace) -> list[str]:
    """Loss trace as `iter,epoch,loss` CSV lines (with header)."""
    lines = ["iter,epoch,loss"]
    lines += [f"{i},{e},{l:.8g}" for i, e, l in trace]
    return lines
