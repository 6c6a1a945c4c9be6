"""Orthonormal 2-D DCT-II for square blocks and blockwise plane tiling.

The basis is orthonormal so the inverse transform is the exact adjoint of the
forward one; the training gradient derivation relies on that. Planes are
tiled with edge replication to the next block multiple and cropped back on
untile.
"""

import numpy as np

from .errors import ConfigError

BLOCK_SIZES = (2, 4, 8, 16, 32, 64)


class DctPlan:
    """Immutable precomputed DCT-II basis for one block size."""

    __slots__ = ("size", "basis")

    def __init__(self, size: int):
        if size not in BLOCK_SIZES:
            raise ConfigError(
                f"unsupported block size {size}; expected one of {BLOCK_SIZES}"
            )
        n = np.arange(size, dtype=np.float64)
        basis = np.cos(np.pi * (2.0 * n[None, :] + 1.0) * n[:, None] / (2.0 * size))
        basis *= np.sqrt(2.0 / size)
        basis[0, :] = np.sqrt(1.0 / size)
        basis.setflags(write=False)
        self.size = size
        self.basis = basis


def make_plan(block_size: int) -> DctPlan:
    return DctPlan(block_size)


def forward(plan: DctPlan, block: np.ndarray) -> np.ndarray:
    """2-D DCT-II of one B x B block."""
    return plan.basis @ block @ plan.basis.T


def inverse(plan: DctPlan, coeffs: np.ndarray) -> np.ndarray:
    """Inverse 2-D DCT of one B x B coefficient block."""
    return plan.basis.T @ coeffs @ plan.basis


def forward_blocks(plan: DctPlan, blocks: np.ndarray) -> np.ndarray:
    """Forward DCT applied over the trailing two axes of (..., B, B)."""
    return plan.basis @ blocks @ plan.basis.T


def inverse_blocks(plan: DctPlan, coeffs: np.ndarray) -> np.ndarray:
    return plan.basis.T @ coeffs @ plan.basis


def tile(plane: np.ndarray, block_size: int) -> np.ndarray:
    """Split a 2-D plane into a (rows, cols, B, B) block grid.

    Dimensions that are not multiples of B are padded by edge replication.
    """
    h, w = plane.shape
    pad_h = (-h) % block_size
    pad_w = (-w) % block_size
    if pad_h or pad_w:
        plane = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
    rows = plane.shape[0] // block_size
    cols = plane.shape[1] // block_size
    return np.ascontiguousarray(
        plane.reshape(rows, block_size, cols, block_size).swapaxes(1, 2)
    )


def untile(blocks: np.ndarray, height: int, width: int) -> np.ndarray:
    """Reassemble a block grid into a plane, cropping any tiling pad."""
    rows, cols, bs, _ = blocks.shape
    plane = blocks.swapaxes(1, 2).reshape(rows * bs, cols * bs)
    return np.ascontiguousarray(plane[:height, :width])
