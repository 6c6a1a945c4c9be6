"""Gradient-descent training of scaling matrices through the noise proxy.

Quantization is emulated by adding uniform noise to the transform
coefficients, amplitude-modulated by the trainable scaling matrix:
X~ = X + U(-0.5, 0.5) * c * S / 16 per coefficient. The objective is
task_loss(distorted) + rate_weight * rate_loss(S), with rate_loss(S) =
16 / mean(S) pushing the factors up to save rate. S is bounded in (16, 128)
by the sigmoid parameterization in `scaling`; the unconstrained raw grid is
what Adam updates.

The task-loss gradient reaches S through the chain: proxy pixel gradient ->
per-block forward DCT (the orthonormal inverse transform's adjoint) ->
multiply with the retained noise draw and c/16 -> sum over blocks, channels
and batch in that fixed order -> sigmoid Jacobian. Training is a pure
function of (corpus, config): patch offsets, epoch shuffles and noise draws
all derive from the config seed.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .media_io import Corpus, crop_patches
from .scaling import matrix_to_jacobian_diag, params_to_matrix, round_matrix
from .taskloss import LowFreqMse
from .transform import BLOCK_SIZES, DctPlan, forward_blocks, inverse_blocks, make_plan, tile, untile

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# independent seed streams derived from the config seed
_STREAM_PATCH = 101
_STREAM_NOISE = 202
_STREAM_SHUFFLE = 303


def rate_loss(matrix: np.ndarray) -> float:
    """Rate surrogate 16 / mean(S); 1.0 at the neutral matrix, 0.125 at 128."""
    return 16.0 / float(np.mean(matrix))


def rate_loss_grad(matrix: np.ndarray) -> np.ndarray:
    """d rate_loss / d S_k = -16 / (count * mean(S)^2), identical for every k."""
    mean = float(np.mean(matrix))
    return np.full_like(matrix, -16.0 / (matrix.size * mean * mean), dtype=np.float64)


@dataclass
class TrainConfig:
    block_size: int
    noise_strength: float  # c in the distortion model
    rate_weight: float  # weight on the rate loss
    epochs: int = 20
    batch_size: int = 16
    lr_initial: float = 0.01
    lr_after_half: float = 0.001
    seed: int = 0
    patch_h: int = 64
    patch_w: int = 64
    proxy: object = field(default_factory=LowFreqMse)

    def __post_init__(self):
        if self.block_size not in BLOCK_SIZES:
            raise ConfigError(f"block size {self.block_size} not in {BLOCK_SIZES}")
        if self.patch_h % self.block_size or self.patch_w % self.block_size:
            raise ConfigError(
                f"patch {self.patch_h}x{self.patch_w} must be a multiple of "
                f"block size {self.block_size}"
            )
        if self.noise_strength < 0:
            raise ConfigError(f"noise strength must be >= 0, got {self.noise_strength}")
        if self.rate_weight < 0:
            raise ConfigError(f"rate weight must be >= 0, got {self.rate_weight}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be >= 1")

    def learning_rate(self, epoch: int) -> float:
        """Initial rate for the first half of the epochs, reduced afterwards."""
        return self.lr_initial if epoch <= math.ceil(self.epochs / 2) else self.lr_after_half


@dataclass
class TrainState:
    raw: np.ndarray  # unconstrained parameter grid
    adam_m: np.ndarray
    adam_v: np.ndarray
    step: int
    rng: np.random.Generator

    @classmethod
    def fresh(cls, config: TrainConfig) -> "TrainState":
        shape = (config.block_size, config.block_size)
        return cls(
            raw=np.zeros(shape),  # sigmoid midpoint, S = 72
            adam_m=np.zeros(shape),
            adam_v=np.zeros(shape),
            step=0,
            rng=np.random.default_rng([config.seed, _STREAM_NOISE]),
        )


@dataclass
class EpochStats:
    epoch: int
    task_loss: float
    rate_loss: float
    mean_scale: float


@dataclass
class TrainReport:
    epochs: list[EpochStats]
    final_matrix: np.ndarray  # real-valued
    final_rounded: np.ndarray  # integer


def distort(patch: np.ndarray, matrix: np.ndarray, strength: float,
            rng: np.random.Generator, plan: DctPlan) -> tuple[np.ndarray, np.ndarray]:
    """Add uniform noise scaled by c*S/16 in the DCT domain of every block.

    Returns the distorted image and the raw noise draws, shape
    (3, rows, cols, B, B); the draws are needed for the analytic gradient.
    """
    size = plan.size
    height, width = patch.shape[1:]
    if height % size or width % size:
        raise ConfigError(f"patch {height}x{width} not a multiple of block size {size}")
    amplitude = strength * matrix / 16.0
    distorted = np.empty_like(patch)
    noise = np.empty((3, height // size, width // size, size, size))
    for channel in range(3):
        coeffs = forward_blocks(plan, tile(patch[channel], size))
        draws = rng.uniform(-0.5, 0.5, size=coeffs.shape)
        noise[channel] = draws
        distorted[channel] = untile(
            inverse_blocks(plan, coeffs + draws * amplitude), height, width
        )
    return distorted, noise


def loss_and_grad(raw: np.ndarray, batch: list[np.ndarray], config: TrainConfig,
                  rng: np.random.Generator, plan: DctPlan
                  ) -> tuple[float, np.ndarray, float, float]:
    """Objective and its gradient w.r.t. the raw parameters for one batch.

    Returns (total loss, gradient, mean task loss, rate loss). Noise is drawn
    from `rng` per image; reduction order is batch item, then channel, then
    block row-major.
    """
    if not batch:
        raise ConfigError("empty batch")
    size = plan.size
    matrix = params_to_matrix(raw)
    grad_scale = np.zeros((size, size))
    task_sum = 0.0
    for patch in batch:
        distorted, noise = distort(patch, matrix, config.noise_strength, rng, plan)
        loss, pixel_grad = config.proxy.evaluate_with_gradient(distorted, patch)
        task_sum += loss
        for channel in range(3):
            coeff_grad = forward_blocks(plan, tile(pixel_grad[channel], size))
            grad_scale += (coeff_grad * noise[channel]).sum(axis=(0, 1)) * (
                config.noise_strength / 16.0
            )
    task_mean = task_sum / len(batch)
    grad_scale /= len(batch)

    rate = rate_loss(matrix)
    grad_scale += config.rate_weight * rate_loss_grad(matrix)
    grad_raw = grad_scale * matrix_to_jacobian_diag(raw)
    total = task_mean + config.rate_weight * rate
    return total, grad_raw, task_mean, rate


def adam_step(state: TrainState, grad: np.ndarray, lr: float) -> TrainState:
    """Bias-corrected Adam update on the raw parameters."""
    if not np.all(np.isfinite(grad)):
        raise ValueError("non-finite gradient")
    state.step += 1
    state.adam_m = ADAM_BETA1 * state.adam_m + (1.0 - ADAM_BETA1) * grad
    state.adam_v = ADAM_BETA2 * state.adam_v + (1.0 - ADAM_BETA2) * grad * grad
    m_hat = state.adam_m / (1.0 - ADAM_BETA1 ** state.step)
    v_hat = state.adam_v / (1.0 - ADAM_BETA2 ** state.step)
    update = lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    if not np.all(np.isfinite(update)):
        raise ValueError(
            f"non-finite Adam update at step {state.step}; "
            f"|grad| max {np.abs(grad).max():g}"
        )
    state.raw = state.raw - update
    return state


def gather_patches(corpus: Corpus, config: TrainConfig) -> list[np.ndarray]:
    """Fixed patch pool; offsets are per-(image, seed) deterministic."""
    patches = []
    for index, (name, img) in enumerate(corpus):
        if config.patch_h > img.shape[1] or config.patch_w > img.shape[2]:
            raise ConfigError(
                f"patch {config.patch_h}x{config.patch_w} larger than corpus "
                f"image {name} ({img.shape[1]}x{img.shape[2]})"
            )
        seed = int(
            np.random.SeedSequence([config.seed, _STREAM_PATCH, index]).generate_state(1)[0]
        )
        patches.extend(
            crop_patches(img, config.patch_h, config.patch_w, seed=seed)
        )
    return patches


def train(corpus: Corpus, config: TrainConfig) -> TrainReport:
    """Full training run; deterministic for a given (corpus, config)."""
    if len(corpus) == 0:
        raise ConfigError("empty corpus")
    plan = make_plan(config.block_size)
    patches = gather_patches(corpus, config)
    state = TrainState.fresh(config)

    epochs = []
    for epoch in range(1, config.epochs + 1):
        order = np.random.default_rng(
            [config.seed, _STREAM_SHUFFLE, epoch]
        ).permutation(len(patches))
        lr = config.learning_rate(epoch)
        task_losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [patches[i] for i in order[start : start + config.batch_size]]
            _, grad, task_mean, _ = loss_and_grad(state.raw, batch, config, state.rng, plan)
            adam_step(state, grad, lr)
            task_losses.append(task_mean)
        matrix = params_to_matrix(state.raw)
        epochs.append(
            EpochStats(
                epoch=epoch,
                task_loss=float(np.mean(task_losses)),
                rate_loss=rate_loss(matrix),
                mean_scale=float(np.mean(matrix)),
            )
        )

    final = params_to_matrix(state.raw)
    return TrainReport(
        epochs=epochs, final_matrix=final, final_rounded=round_matrix(final)
    )


def write_report_csv(report: TrainReport, path) -> None:
    lines = ["epoch,task_loss,rate_loss,mean_S"]
    for row in report.epochs:
        lines.append(
            f"{row.epoch},{row.task_loss:.10g},{row.rate_loss:.10g},{row.mean_scale:.10g}"
        )
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
