"""Light-field image super-resolution via decoupled spatial-angular
feature interaction, built on a small numpy autodiff core."""

from .lf_repr import (
    LightField,
    MacPiImage,
    SaiArrayImage,
    center_crop_angular,
    extract_macro_pixel,
    extract_view,
    lf_to_macpi,
    lf_to_sai_array,
    macpi_to_lf,
    macpi_to_sai,
    sai_array_to_lf,
)
from .model import NetConfig, count_flops, count_params, forward, init_params

__all__ = [
    "LightField",
    "MacPiImage",
    "SaiArrayImage",
    "NetConfig",
    "center_crop_angular",
    "count_flops",
    "count_params",
    "extract_macro_pixel",
    "extract_view",
    "forward",
    "init_params",
    "lf_to_macpi",
    "lf_to_sai_array",
    "macpi_to_lf",
    "macpi_to_sai",
    "sai_array_to_lf",
]

__version__ = "0.1.0"
