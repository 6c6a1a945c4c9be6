"""Selects the block coding kernel at import time.

The compiled extension is used when present; otherwise the vectorized numpy
fallback. Set FREQSCALE_PURE_PYTHON=1 to force the fallback (used by the
benchmark and the equivalence tests).
"""

import os
from functools import lru_cache

import numpy as np

if os.environ.get("FREQSCALE_PURE_PYTHON"):
    from . import _kernels_py as _impl

    HAVE_EXTENSION = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        HAVE_EXTENSION = True
    except ImportError:
        from . import _kernels_py as _impl

        HAVE_EXTENSION = False

code_blocks = _impl.code_blocks


def golomb_signed_bits(value: int) -> int:
    """Code length of one signed exponential-Golomb order-0 index.

    Reference implementation used by tests; the kernels inline the same rule.
    """
    mapped = 2 * value - 1 if value > 0 else -2 * value
    return 2 * (mapped + 1).bit_length() - 1


@lru_cache(maxsize=None)
def zigzag_order(block_size: int) -> np.ndarray:
    """Flat coefficient positions in zigzag order (JPEG diagonal convention)."""
    positions = sorted(
        ((i, j) for i in range(block_size) for j in range(block_size)),
        key=lambda ij: (ij[0] + ij[1], ij[0] if (ij[0] + ij[1]) % 2 else -ij[0]),
    )
    order = np.array([i * block_size + j for i, j in positions], dtype=np.int64)
    order.setflags(write=False)
    return order
