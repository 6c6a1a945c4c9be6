"""Desk-scale intra still-image codec.

Per channel: tile into B x B blocks (edge-replication pad), forward DCT,
scaled mid-tread quantization, a deterministic rate surrogate (zigzag scan,
signed exponential-Golomb order-0 code length per index up to the last
nonzero one, plus an 8-bit end-of-block marker), dequantization, inverse DCT,
untile, clamp to [0, 255].

The surrogate is monotone in index magnitude and reproducible; absolute bit
counts are not comparable to any real encoder and are never claimed to be.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError
from .media_io import Corpus
from .quantizer import QuantSpec, step_matrix
from .scaling import ScalingList
from .transform import forward_blocks, inverse_blocks, make_plan, tile, untile

CODING_BLOCK_SIZES = (4, 8, 16, 32)

# channel index -> scaling list component for RGB coding
CHANNEL_COMPONENTS = ("Y", "Cb", "Cr")

_PSNR_MSE_FLOOR = 1e-12


@dataclass
class EncodeResult:
    bits: int
    reconstruction: np.ndarray
    psnr: float
    task_quality: float


def psnr(reference: np.ndarray, reconstruction: np.ndarray, peak: float = 255.0) -> float:
    mse = float(np.mean((reference - reconstruction) ** 2))
    return 10.0 * np.log10(peak * peak / max(mse, _PSNR_MSE_FLOOR))


def encode(img: np.ndarray, qp: int, slist: ScalingList, block_size: int,
           proxy, bit_depth: int = 8) -> EncodeResult:
    """Code one image at one QP with a scaling list; returns rate and quality."""
    if block_size not in CODING_BLOCK_SIZES:
        raise ConfigError(
            f"coding block size {block_size} not in {CODING_BLOCK_SIZES}"
        )
    spec = QuantSpec(qp=qp, bit_depth=bit_depth)
    plan = make_plan(block_size)
    scan = kernels.zigzag_order(block_size)
    height, width = img.shape[1:]

    bits = 0
    recon = np.empty_like(img)
    for channel, component in enumerate(CHANNEL_COMPONENTS):
        matrix = slist.resolve(block_size, component, "intra")
        steps = np.ascontiguousarray(step_matrix(spec, matrix))
        blocks = tile(img[channel], block_size)
        rows, cols = blocks.shape[:2]
        coeffs = np.ascontiguousarray(
            forward_blocks(plan, blocks).reshape(-1, block_size, block_size)
        )
        block_bits, _, dequantized = kernels.code_blocks(coeffs, steps, scan)
        bits += block_bits
        rec_blocks = inverse_blocks(
            plan, dequantized.reshape(rows, cols, block_size, block_size)
        )
        recon[channel] = untile(rec_blocks, height, width)

    np.clip(recon, 0.0, 255.0, out=recon)
    quality = psnr(img, recon)
    task_loss = proxy.evaluate(recon, img)
    task_quality = float(-10.0 * np.log10(task_loss + 1e-12))
    return EncodeResult(bits=bits, reconstruction=recon, psnr=quality,
                        task_quality=task_quality)


@dataclass
class SweepPoint:
    """Corpus means for one QP; rate is bits per pixel (H*W pixels)."""

    qp: int
    bpp: float
    psnr_db: float
    task_quality_db: float


def rd_sweep(corpus: Corpus, qps, slist: ScalingList, block_size: int, proxy,
             threads: int = 1) -> list[SweepPoint]:
    """Mean rate/quality per QP over a corpus, one SweepPoint per QP."""
    qps = list(qps)
    if sorted(qps) != qps or len(set(qps)) != len(qps):
        raise ConfigError(f"qps must be strictly ascending, got {qps}")
    if len(qps) < 4:
        raise ConfigError(f"need at least 4 qps for BD-rate downstream, got {len(qps)}")
    if len(corpus) == 0:
        raise ConfigError("empty corpus")

    def encode_one(img, qp):
        result = encode(img, qp, slist, block_size, proxy)
        pixels = img.shape[1] * img.shape[2]
        return result.bits / pixels, result.psnr, result.task_quality

    points = []
    for qp in qps:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(encode_one, img, qp) for _, img in corpus]
                stats = [f.result() for f in futures]  # gathered in corpus order
        else:
            stats = [encode_one(img, qp) for _, img in corpus]
        arr = np.array(stats, dtype=np.float64)
        points.append(
            SweepPoint(
                qp=qp,
                bpp=float(arr[:, 0].mean()),
                psnr_db=float(arr[:, 1].mean()),
                task_quality_db=float(arr[:, 2].mean()),
            )
        )
    return points
