"""The spatial-angular interaction network.

Assembles the primitive operators into the full architecture: initial
angular/spatial feature extraction, N interaction groups of K blocks,
bottleneck fusion with a global residual, and reconstruction (spatial
feature expansion, MacPI->SAI reshape, pixel shuffle, final 1x1).

Also owns configuration, Xavier initialization and the closed-form
parameter/FLOP budgets (1 multiply-accumulate = 1 FLOP; biases and
activations are not counted).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    ConvWeights,
    Tensor,
    afe_forward,
    concat_channels,
    conv1x1_forward,
    macpi_to_sai_channels,
    pixel_shuffle,
    relu_forward,
    residual_add,
    sfe_forward,
    upsample_bilinear,
    upsample_nearest,
)
from .errors import ConfigError, ShapeError

VARIANTS = ("full", "spatial_only", "angular_only")
ANG_UPSAMPLE_MODES = ("pixel_shuffle", "nearest", "bilinear")


@dataclass(frozen=True)
class NetConfig:
    """Architecture hyperparameters.

    Defaults correspond to the reference model: 4 groups of 4 blocks,
    64 channels, a 5x5 angular grid.
    """

    n_groups: int = 4
    blocks_per_group: int = 4
    channels: int = 64
    ang_res: int = 5
    scale: int = 2
    variant: str = "full"
    ang_upsample: str = "pixel_shuffle"
    interactions_enabled: tuple = None  # defaults to all-enabled
    # ReLU after each interior conv, before the residual add. Never after
    # residual sums or inside the reconstruction tail.
    block_relu: bool = True

    def __post_init__(self):
        for name in ("n_groups", "blocks_per_group", "channels", "ang_res"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.scale < 1:
            raise ConfigError("scale must be >= 1")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.ang_upsample not in ANG_UPSAMPLE_MODES:
            raise ConfigError(f"ang_upsample must be one of {ANG_UPSAMPLE_MODES}")
        ie = self.interactions_enabled
        if ie is None:
            ie = (True,) * self.n_groups
        ie = tuple(bool(b) for b in ie)
        if len(ie) != self.n_groups:
            raise ConfigError(
                f"interactions_enabled must have length {self.n_groups}"
            )
        object.__setattr__(self, "interactions_enabled", ie)


@dataclass(frozen=True)
class LayerSpec:
    """One convolution layer induced by a NetConfig.

    `grid` names the output sampling grid, used for FLOP accounting:
    'ang' = H x W, 'spa' = AH x AW, 'hr' = aAH x aAW.
    """

    name: str
    out_c: int
    in_c: int
    k: int
    stride: int = 1
    dilation: int = 1
    padding: int = 0
    grid: str = "spa"


def layer_specs(cfg: NetConfig) -> list[LayerSpec]:
    """The ordered layer set a config induces; the single source of truth
    for initialization, serialization and budget accounting."""
    A, C = cfg.ang_res, cfg.channels
    N, K = cfg.n_groups, cfg.blocks_per_group
    if cfg.variant == "angular_only":
        sk, sd, sp = 1, 1, 0
    else:
        sk, sd, sp = 3, A, A
    up_out = A * A * C if cfg.ang_upsample == "pixel_shuffle" else C

    specs: list[LayerSpec] = []

    def sfe(name, in_c, out_c):
        specs.append(LayerSpec(name, out_c, in_c, sk, 1, sd, sp, "spa"))

    def afe(name, in_c, out_c):
        specs.append(LayerSpec(name, out_c, in_c, A, A, 1, 0, "ang"))

    def c1(name, in_c, out_c, grid="ang"):
        specs.append(LayerSpec(name, out_c, in_c, 1, 1, 1, 0, grid))

    if cfg.variant != "spatial_only":
        afe("init.afe", 1, C)
    sfe("init.sfe", 1, C)

    for n in range(1, N + 1):
        interacting = cfg.interactions_enabled[n - 1]
        for k in range(1, K + 1):
            pre = f"g{n}.b{k}"
            if cfg.variant == "spatial_only":
                sfe(f"{pre}.sfe", C, C)
            elif interacting:
                c1(f"{pre}.up1x1", C, up_out)
                sfe(f"{pre}.sfe", 2 * C, C)
                afe(f"{pre}.afe", C, C)
                c1(f"{pre}.fuse1x1", 2 * C, C)
            else:
                sfe(f"{pre}.sfe", C, C)
                c1(f"{pre}.fuse1x1", C, C)

    if cfg.variant == "spatial_only":
        sfe("bottleneck.sfe", N * C, C)
    else:
        c1("bottleneck.squeeze1x1", N * C, C)
        c1("bottleneck.up1x1", C, up_out)
        sfe("bottleneck.sfe", (N + 1) * C, C)

    sfe("recon.sfe", C, cfg.scale * cfg.scale * C)
    c1("recon.final1x1", C, 1, grid="hr")
    return specs


ModelParams = dict  # name -> ConvWeights


def init_params(cfg: NetConfig, seed: int, dtype=np.float32) -> ModelParams:
    """Xavier-uniform kernels, zero biases; reproducible from the seed."""
    rng = np.random.default_rng(seed)
    params: ModelParams = {}
    for spec in layer_specs(cfg):
        fan_in = spec.in_c * spec.k * spec.k
        fan_out = spec.out_c * spec.k * spec.k
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        kernel = rng.uniform(
            -limit, limit, size=(spec.out_c, spec.in_c, spec.k, spec.k)
        ).astype(dtype)
        bias = np.zeros(spec.out_c, dtype=dtype)
        params[spec.name] = ConvWeights(
            Tensor(kernel, requires_grad=True),
            Tensor(bias, requires_grad=True),
            stride=spec.stride,
            dilation=spec.dilation,
            padding=spec.padding,
        )
    return params


def count_params(cfg: NetConfig) -> int:
    """Total learnable scalars (kernels + biases)."""
    return sum(
        s.out_c * s.in_c * s.k * s.k + s.out_c for s in layer_specs(cfg)
    )


def params_size(params: ModelParams) -> int:
    return sum(w.kernel.data.size + w.bias.data.size for w in params.values())


def count_flops(cfg: NetConfig, view_h: int, view_w: int) -> int:
    """Multiply-accumulate count for one forward pass on an
    A x A x view_h x view_w input."""
    A, a = cfg.ang_res, cfg.scale
    positions = {
        "ang": view_h * view_w,
        "spa": A * A * view_h * view_w,
        "hr": a * a * A * A * view_h * view_w,
    }
    return sum(
        positions[s.grid] * s.in_c * s.k * s.k * s.out_c
        for s in layer_specs(cfg)
    )


# ---------------------------------------------------------------------------
# forward pass
# ---------------------------------------------------------------------------

def _maybe_relu(t: Tensor, cfg: NetConfig) -> Tensor:
    return relu_forward(t) if cfg.block_relu else t


def _upsample_angular(fa: Tensor, params: ModelParams, name: str,
                      cfg: NetConfig) -> Tensor:
    """Angular grid (C x H x W) -> spatial grid (C x AH x AW)."""
    t = _maybe_relu(conv1x1_forward(fa, params[name]), cfg)
    if cfg.ang_upsample == "pixel_shuffle":
        return pixel_shuffle(t, cfg.ang_res)
    if cfg.ang_upsample == "nearest":
        return upsample_nearest(t, cfg.ang_res)
    return upsample_bilinear(t, cfg.ang_res)


def initial_extract(x: Tensor, params: ModelParams, cfg: NetConfig):
    """Extract the initial angular and spatial features from an LR MacPI.

    Returns (F_A0, F_S0); F_A0 is None for the spatial-only variant.
    """
    A = cfg.ang_res
    if x.data.shape[-2] % A or x.data.shape[-1] % A:
        raise ShapeError(
            f"MacPI extents {x.data.shape[-2:]} not divisible by A={A}"
        )
    fs0 = relu_forward(sfe_forward(x, params["init.sfe"], A))
    if cfg.variant == "spatial_only":
        return None, fs0
    fa0 = relu_forward(afe_forward(x, params["init.afe"], A))
    return fa0, fs0


def inter_block_forward(fa, fs, params: ModelParams, cfg: NetConfig,
                        group: int, block: int):
    """One interaction block; returns updated (F_A, F_S)."""
    A = cfg.ang_res
    pre = f"g{group}.b{block}"
    if cfg.variant == "spatial_only":
        t = _maybe_relu(sfe_forward(fs, params[f"{pre}.sfe"], A), cfg)
        return None, residual_add(t, fs)

    if cfg.interactions_enabled[group - 1]:
        up = _upsample_angular(fa, params, f"{pre}.up1x1", cfg)
        s = sfe_forward(concat_channels([fs, up]), params[f"{pre}.sfe"], A)
        fs_new = residual_add(_maybe_relu(s, cfg), fs)
        a = _maybe_relu(afe_forward(fs, params[f"{pre}.afe"], A), cfg)
        a = conv1x1_forward(concat_channels([fa, a]), params[f"{pre}.fuse1x1"])
        fa_new = residual_add(_maybe_relu(a, cfg), fa)
    else:
        # interaction ablated: the two streams evolve independently
        s = _maybe_relu(sfe_forward(fs, params[f"{pre}.sfe"], A), cfg)
        fs_new = residual_add(s, fs)
        a = _maybe_relu(conv1x1_forward(fa, params[f"{pre}.fuse1x1"]), cfg)
        fa_new = residual_add(a, fa)
    return fa_new, fs_new


def inter_group_forward(fa, fs, params: ModelParams, cfg: NetConfig, n: int):
    """K cascaded blocks of group n."""
    for k in range(1, cfg.blocks_per_group + 1):
        fa, fs = inter_block_forward(fa, fs, params, cfg, n, k)
    return fa, fs


def bottleneck_forward(angulars, spatials, fs0: Tensor, params: ModelParams,
                       cfg: NetConfig) -> Tensor:
    """Fuse all groups' outputs; global residual over F_S0."""
    if len(spatials) != cfg.n_groups:
        raise ConfigError(
            f"expected {cfg.n_groups} spatial features, got {len(spatials)}"
        )
    if cfg.variant == "spatial_only":
        t = sfe_forward(concat_channels(list(spatials)),
                        params["bottleneck.sfe"], cfg.ang_res)
        return residual_add(_maybe_relu(t, cfg), fs0)
    if len(angulars) != cfg.n_groups:
        raise ConfigError(
            f"expected {cfg.n_groups} angular features, got {len(angulars)}"
        )
    fa = relu_forward(
        conv1x1_forward(concat_channels(list(angulars)),
                        params["bottleneck.squeeze1x1"])
    )
    up = _upsample_angular(fa, params, "bottleneck.up1x1", cfg)
    t = sfe_forward(concat_channels(list(spatials) + [up]),
                    params["bottleneck.sfe"], cfg.ang_res)
    return residual_add(_maybe_relu(t, cfg), fs0)


def reconstruct(fst: Tensor, params: ModelParams, cfg: NetConfig) -> Tensor:
    """Fused MacPI feature -> HR SAI array (1 channel)."""
    A, a = cfg.ang_res, cfg.scale
    t = sfe_forward(fst, params["recon.sfe"], A)
    t = macpi_to_sai_channels(t, A)
    t = pixel_shuffle(t, a)
    return conv1x1_forward(t, params["recon.final1x1"])


def forward(x: Tensor, params: ModelParams, cfg: NetConfig) -> Tensor:
    """LR MacPI tensor (.., 1, AH, AW) -> HR SAI tensor (.., 1, aAH, aAW)."""
    fa, fs = initial_extract(x, params, cfg)
    fs0 = fs
    angulars, spatials = [], []
    for n in range(1, cfg.n_groups + 1):
        fa, fs = inter_group_forward(fa, fs, params, cfg, n)
        angulars.append(fa)
        spatials.append(fs)
    if cfg.variant == "spatial_only":
        angulars = []
    fst = bottleneck_forward(angulars, spatials, fs0, params, cfg)
    return reconstruct(fst, params, cfg)


def super_resolve(macpi: np.ndarray, params: ModelParams,
                  cfg: NetConfig) -> np.ndarray:
    """Convenience wrapper: 2D LR MacPI array -> 2D HR SAI array."""
    if macpi.ndim != 2:
        raise ShapeError(f"expected a 2D MacPI, got ndim={macpi.ndim}")
    dtype = next(iter(params.values())).kernel.data.dtype
    x = Tensor(np.asarray(macpi, dtype=dtype)[None])
    return forward(x, params, cfg).data[0]
