"""freqscale: frequency-specific quantization scaling lists for block-DCT
image coding.

The package trains a per-coefficient scaling matrix by gradient descent
through a uniform-noise stand-in for quantization error, applies the result
in a small intra-only codec, and scores competing lists with
Bjontegaard-delta rate.
"""

__version__ = "0.1.0"

from .bdrate import RdCurve, bd_rate, compare_lists
from .codec import EncodeResult, encode, psnr, rd_sweep
from .errors import BridgeError, ConfigError, PnmError, ScalingListError
from .kernels import HAVE_EXTENSION
from .media_io import Corpus, crop_patches, load_corpus, load_pnm, save_pnm
from .quantizer import QuantSpec, qp_to_delta
from .scaling import (
    ScalingList,
    assemble_list,
    flat_list,
    params_to_matrix,
    read_list,
    write_list,
)
from .taskloss import EdgeMse, ExternalBridge, LowFreqMse, make_proxy
from .trainer import TrainConfig, TrainReport, rate_loss, train
from .transform import BLOCK_SIZES, DctPlan, make_plan

__all__ = [
    "BLOCK_SIZES",
    "BridgeError",
    "ConfigError",
    "Corpus",
    "DctPlan",
    "EdgeMse",
    "EncodeResult",
    "ExternalBridge",
    "HAVE_EXTENSION",
    "LowFreqMse",
    "PnmError",
    "QuantSpec",
    "RdCurve",
    "ScalingList",
    "ScalingListError",
    "TrainConfig",
    "TrainReport",
    "__version__",
    "assemble_list",
    "bd_rate",
    "compare_lists",
    "crop_patches",
    "encode",
    "flat_list",
    "load_corpus",
    "load_pnm",
    "make_plan",
    "make_proxy",
    "params_to_matrix",
    "psnr",
    "qp_to_delta",
    "rate_loss",
    "rd_sweep",
    "read_list",
    "save_pnm",
    "train",
    "write_list",
]
