"""QP-driven step sizes and per-coefficient scaled quantization.

The base step size follows the exponential QP law; a scaling matrix entry of
16 is neutral, larger entries coarsen that coefficient. Quantization is the
literal mid-tread floor(x / step + 0.5), including for negative inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

BIT_DEPTHS = (8, 10, 12)
QP_RANGE = (0, 63)


def qp_to_delta(qp: int, bit_depth: int = 8) -> float:
    """Base quantization step size for a QP at a given sample bit depth."""
    if not QP_RANGE[0] <= qp <= QP_RANGE[1]:
        raise ConfigError(f"qp {qp} outside [{QP_RANGE[0]}, {QP_RANGE[1]}]")
    if bit_depth not in BIT_DEPTHS:
        raise ConfigError(f"bit depth {bit_depth} not in {BIT_DEPTHS}")
    return 2.0 ** ((qp - 4) / 6) * 2.0 ** (bit_depth - 8)


@dataclass(frozen=True)
class QuantSpec:
    """QP plus bit depth with the derived base step size."""

    qp: int
    bit_depth: int = 8
    delta: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "delta", qp_to_delta(self.qp, self.bit_depth))


def delta_k(spec: QuantSpec, s_k: float) -> float:
    """Effective step size for one coefficient with scaling factor s_k."""
    return spec.delta * s_k / 16.0


def step_matrix(spec: QuantSpec, matrix: np.ndarray) -> np.ndarray:
    """Per-coefficient step sizes for a whole scaling matrix."""
    return spec.delta * np.asarray(matrix, dtype=np.float64) / 16.0


def quantize_block(coeffs: np.ndarray, spec: QuantSpec, matrix: np.ndarray) -> np.ndarray:
    """Mid-tread quantization indices floor(X / step + 0.5), elementwise."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != np.shape(matrix):
        raise ValueError(f"shape mismatch: coeffs {coeffs.shape} vs matrix {np.shape(matrix)}")
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("non-finite transform coefficient")
    return np.floor(coeffs / step_matrix(spec, matrix) + 0.5).astype(np.int64)


def dequantize_block(indices: np.ndarray, spec: QuantSpec, matrix: np.ndarray) -> np.ndarray:
    """Reconstruction indices * step, elementwise."""
    indices = np.asarray(indices)
    if indices.shape != np.shape(matrix):
        raise ValueError(f"shape mismatch: indices {indices.shape} vs matrix {np.shape(matrix)}")
    return indices * step_matrix(spec, matrix)
