"""Vectorized numpy implementation of the block coding kernel.

Contract shared with the compiled extension (freqscale._kernels):

    code_blocks(coeffs, steps, scan) -> (bits, indices, dequantized)

coeffs: (n, B, B) float64 transform coefficients, C-contiguous
steps:  (B, B) float64 per-coefficient quantization step sizes
scan:   (B*B,) int64 flat positions in zigzag order

Per block: quantize floor(x/step + 0.5); walk the zigzag scan up to the last
nonzero index; total the signed exponential-Golomb order-0 code lengths of
those indices plus an 8-bit end-of-block marker; dequantize index*step. Both
implementations must produce bit-identical results.
"""

import numpy as np


def code_blocks(coeffs: np.ndarray, steps: np.ndarray,
                scan: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    n = coeffs.shape[0]
    indices = np.floor(coeffs / steps + 0.5).astype(np.int64)
    dequantized = indices * steps

    flat = indices.reshape(n, -1)[:, scan]
    mapped = np.where(flat > 0, 2 * flat - 1, -2 * flat)
    if mapped.size and mapped.max() >= (1 << 44):
        # float64 log2 is only trusted as an exact bit-length below 2**44
        raise ValueError("quantization index magnitude too large for rate surrogate")
    lengths = 2 * np.floor(np.log2(mapped.astype(np.float64) + 1.0)).astype(np.int64) + 1

    nonzero = flat != 0
    any_nonzero = nonzero.any(axis=1)
    last = flat.shape[1] - 1 - np.argmax(nonzero[:, ::-1], axis=1)
    prefix = np.cumsum(lengths, axis=1)
    coded = np.take_along_axis(prefix, last[:, None], axis=1)[:, 0]
    bits = int(np.where(any_nonzero, coded, 0).sum()) + 8 * n
    return bits, indices, dequantized
