import numpy as np
import pytest

from freqscale.errors import ConfigError
from freqscale.media_io import Corpus
from freqscale.scaling import matrix_to_jacobian_diag, params_to_matrix
from freqscale.taskloss import EdgeMse, LowFreqMse
from freqscale.trainer import (
    TrainConfig,
    TrainState,
    adam_step,
    distort,
    gather_patches,
    loss_and_grad,
    rate_loss,
    rate_loss_grad,
    train,
    write_report_csv,
)
from freqscale.transform import forward_blocks, make_plan, tile


def _corpus(seed=0, count=4, size=64):
    entries = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        entries.append((f"img{i}", rng.uniform(0, 255, size=(3, size, size))))
    return Corpus(entries=entries)


def test_rate_loss_anchors():
    assert rate_loss(np.full((8, 8), 16.0)) == 1.0
    assert rate_loss(np.full((4, 4), 128.0)) == 0.125
    assert rate_loss(np.full((2, 2), 64.0)) == 0.25


def test_rate_loss_grad_closed_forms():
    g8 = rate_loss_grad(np.full((8, 8), 16.0))
    assert np.allclose(g8, -1.0 / 1024.0)
    g2 = rate_loss_grad(np.full((2, 2), 32.0))
    assert np.allclose(g2, -16.0 / (4 * 1024.0))


def test_rate_loss_grad_matches_fd():
    rng = np.random.default_rng(0)
    matrix = rng.uniform(20, 120, size=(4, 4))
    grad = rate_loss_grad(matrix)
    eps = 1e-6
    for idx in [(0, 0), (1, 3), (3, 2)]:
        plus = matrix.copy()
        minus = matrix.copy()
        plus[idx] += eps
        minus[idx] -= eps
        numeric = (rate_loss(plus) - rate_loss(minus)) / (2 * eps)
        assert abs(grad[idx] - numeric) / abs(numeric) < 1e-6


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(block_size=3, noise_strength=1.0, rate_weight=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(block_size=8, noise_strength=1.0, rate_weight=1.0, patch_h=20)
    with pytest.raises(ConfigError):
        TrainConfig(block_size=8, noise_strength=-1.0, rate_weight=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(block_size=8, noise_strength=1.0, rate_weight=1.0, epochs=0)


def test_learning_rate_schedule():
    cfg = TrainConfig(block_size=8, noise_strength=16.0, rate_weight=1.0, epochs=20)
    assert cfg.learning_rate(1) == 0.01
    assert cfg.learning_rate(10) == 0.01
    assert cfg.learning_rate(11) == 0.001
    assert cfg.learning_rate(20) == 0.001
    odd = TrainConfig(block_size=8, noise_strength=16.0, rate_weight=1.0, epochs=5)
    assert odd.learning_rate(3) == 0.01
    assert odd.learning_rate(4) == 0.001


def test_distort_zero_strength_is_identity():
    rng = np.random.default_rng(1)
    patch = rng.uniform(0, 255, size=(3, 16, 16))
    plan = make_plan(8)
    distorted, noise = distort(patch, np.full((8, 8), 72.0), 0.0, np.random.default_rng(2), plan)
    assert np.max(np.abs(distorted - patch)) < 1e-9
    assert noise.shape == (3, 2, 2, 8, 8)


def test_distort_perturbation_bound_and_determinism():
    rng = np.random.default_rng(3)
    patch = rng.uniform(0, 255, size=(3, 16, 16))
    plan = make_plan(8)
    matrix = params_to_matrix(rng.normal(0, 1, size=(8, 8)))
    strength = 16.0
    d1, n1 = distort(patch, matrix, strength, np.random.default_rng(9), plan)
    d2, n2 = distort(patch, matrix, strength, np.random.default_rng(9), plan)
    assert np.array_equal(d1, d2)
    assert np.array_equal(n1, n2)
    bound = 0.5 * strength * matrix / 16.0
    for ch in range(3):
        before = forward_blocks(plan, tile(patch[ch], 8))
        after = forward_blocks(plan, tile(d1[ch], 8))
        assert np.all(np.abs(after - before) <= bound + 1e-9)


def test_loss_and_grad_zero_strength_reduces_to_rate_chain():
    rng = np.random.default_rng(4)
    patch = rng.uniform(0, 255, size=(3, 8, 8))
    cfg = TrainConfig(block_size=4, noise_strength=0.0, rate_weight=2.5,
                      patch_h=8, patch_w=8, proxy=LowFreqMse())
    plan = make_plan(4)
    raw = rng.normal(0, 0.3, size=(4, 4))
    total, grad, task_mean, rate = loss_and_grad(raw, [patch], cfg, np.random.default_rng(5), plan)
    matrix = params_to_matrix(raw)
    expected = 2.5 * rate_loss_grad(matrix) * matrix_to_jacobian_diag(raw)
    assert np.allclose(grad, expected, rtol=1e-12, atol=0)
    # the DCT round trip leaves sub-1e-14 pixel wobble, not exact zero loss
    assert task_mean < 1e-20
    assert total == pytest.approx(2.5 * rate_loss(matrix))


def test_loss_and_grad_all_zero_when_free():
    rng = np.random.default_rng(6)
    patch = rng.uniform(0, 255, size=(3, 8, 8))
    cfg = TrainConfig(block_size=4, noise_strength=0.0, rate_weight=0.0,
                      patch_h=8, patch_w=8, proxy=LowFreqMse())
    _, grad, _, _ = loss_and_grad(rng.normal(size=(4, 4)), [patch], cfg,
                                  np.random.default_rng(7), plan=make_plan(4))
    assert np.all(grad == 0.0)


@pytest.mark.parametrize("block_size", [2, 4, 8])
def test_loss_and_grad_matches_fd_frozen_noise(block_size):
    rng = np.random.default_rng(8)
    patch = rng.uniform(0, 255, size=(3, 16, 16))
    cfg = TrainConfig(block_size=block_size, noise_strength=16.0, rate_weight=0.7,
                      patch_h=16, patch_w=16, proxy=LowFreqMse())
    plan = make_plan(block_size)
    raw = rng.normal(0, 0.5, size=(block_size, block_size))

    def total_at(r):
        value, _, _, _ = loss_and_grad(r, [patch], cfg, np.random.default_rng(77), plan)
        return value

    _, grad, _, _ = loss_and_grad(raw, [patch], cfg, np.random.default_rng(77), plan)
    eps = 1e-6
    checks = [(0, 0), (0, block_size - 1), (block_size - 1, 0),
              (block_size - 1, block_size - 1), (block_size // 2, block_size // 2)]
    for idx in checks:
        plus = raw.copy()
        minus = raw.copy()
        plus[idx] += eps
        minus[idx] -= eps
        numeric = (total_at(plus) - total_at(minus)) / (2 * eps)
        assert abs(grad[idx] - numeric) / max(abs(numeric), 1e-12) < 1e-4


def test_loss_and_grad_fd_with_edge_proxy():
    rng = np.random.default_rng(9)
    patch = rng.uniform(0, 255, size=(3, 8, 8))
    cfg = TrainConfig(block_size=4, noise_strength=16.0, rate_weight=0.7,
                      patch_h=8, patch_w=8, proxy=EdgeMse())
    plan = make_plan(4)
    raw = rng.normal(0, 0.5, size=(4, 4))
    _, grad, _, _ = loss_and_grad(raw, [patch], cfg, np.random.default_rng(55), plan)
    eps = 1e-6
    for idx in [(0, 0), (1, 2), (3, 3)]:
        plus = raw.copy()
        minus = raw.copy()
        plus[idx] += eps
        minus[idx] -= eps
        p, _, _, _ = loss_and_grad(plus, [patch], cfg, np.random.default_rng(55), plan)
        m, _, _, _ = loss_and_grad(minus, [patch], cfg, np.random.default_rng(55), plan)
        numeric = (p - m) / (2 * eps)
        assert abs(grad[idx] - numeric) / max(abs(numeric), 1e-12) < 1e-4


def _state(seed=0):
    cfg = TrainConfig(block_size=4, noise_strength=16.0, rate_weight=1.0,
                      seed=seed, patch_h=8, patch_w=8, proxy=LowFreqMse())
    return TrainState.fresh(cfg)


def test_adam_step_basics():
    state = _state()
    before = state.raw.copy()
    adam_step(state, np.zeros((4, 4)), lr=0.01)
    assert np.array_equal(state.raw, before)
    assert state.step == 1

    state2 = _state()
    grad = np.full((4, 4), 3.0)
    adam_step(state2, grad, lr=0.01)
    expected = before - 0.01 * grad / (np.abs(grad) + 1e-8)
    assert np.allclose(state2.raw, expected, rtol=0, atol=1e-12)

    a = _state(seed=1)
    b = _state(seed=1)
    g = np.random.default_rng(2).normal(size=(4, 4))
    adam_step(a, g, 0.01)
    adam_step(b, g, 0.01)
    assert np.array_equal(a.raw, b.raw)


def test_adam_step_rejects_non_finite():
    state = _state()
    bad = np.zeros((4, 4))
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        adam_step(state, bad, 0.01)


def test_gather_patches_deterministic():
    corpus = _corpus()
    cfg = TrainConfig(block_size=8, noise_strength=16.0, rate_weight=1.0,
                      patch_h=32, patch_w=32, proxy=LowFreqMse())
    first = gather_patches(corpus, cfg)
    second = gather_patches(corpus, cfg)
    assert len(first) == len(second) > 0
    for a, b in zip(first, second):
        assert np.array_equal(a, b)


def test_train_rate_only_pushes_up():
    # one 8x8 patch per epoch, so epochs == optimizer steps; Adam's slow
    # second moment trails the decaying rate gradient, so reaching the
    # saturation region takes on the order of a thousand steps
    entries = [("only", np.random.default_rng(0).uniform(0, 255, size=(3, 8, 8)))]
    cfg = TrainConfig(block_size=4, noise_strength=0.0, rate_weight=1.0,
                      epochs=1000, batch_size=1, patch_h=8, patch_w=8,
                      seed=0, proxy=LowFreqMse())
    report = train(Corpus(entries=entries), cfg)
    assert report.final_matrix.mean() > 120.0
    assert np.all(report.final_matrix < 128.0)


def test_train_task_only_drifts_down():
    corpus = _corpus(seed=1, count=3, size=32)
    cfg = TrainConfig(block_size=8, noise_strength=64.0, rate_weight=0.0,
                      epochs=5, batch_size=4, patch_h=32, patch_w=32,
                      seed=0, proxy=LowFreqMse())
    report = train(corpus, cfg)
    assert report.final_matrix.mean() < 72.0
    assert np.all(report.final_matrix > 16.0)


def test_train_deterministic_and_reported(tmp_path):
    corpus = _corpus(seed=2, count=3, size=32)
    cfg = TrainConfig(block_size=8, noise_strength=16.0, rate_weight=1.0,
                      epochs=3, batch_size=4, patch_h=32, patch_w=32,
                      seed=5, proxy=LowFreqMse())
    r1 = train(corpus, cfg)
    r2 = train(corpus, cfg)
    assert np.array_equal(r1.final_matrix, r2.final_matrix)
    assert np.array_equal(r1.final_rounded, r2.final_rounded)
    assert [e.task_loss for e in r1.epochs] == [e.task_loss for e in r2.epochs]
    assert len(r1.epochs) == 3
    assert r1.epochs[0].epoch == 1

    path = tmp_path / "report.csv"
    write_report_csv(r1, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,task_loss,rate_loss,mean_S"
    assert len(lines) == 4


def test_train_seed_changes_outcome():
    corpus = _corpus(seed=3, count=2, size=32)
    base = dict(block_size=8, noise_strength=16.0, rate_weight=1.0, epochs=2,
                batch_size=4, patch_h=32, patch_w=32, proxy=LowFreqMse())
    r0 = train(corpus, TrainConfig(seed=0, **base))
    r1 = train(corpus, TrainConfig(seed=1, **base))
    assert not np.array_equal(r0.final_matrix, r1.final_matrix)


def test_train_noise_response_direction():
    # smaller noise strength lets scaling factors rise at least as far
    corpus = _corpus(seed=4, count=4, size=64)
    base = dict(block_size=8, rate_weight=1.0, epochs=5, batch_size=8,
                patch_h=64, patch_w=64, seed=0, proxy=LowFreqMse())
    gentle = train(corpus, TrainConfig(noise_strength=4.0, **base))
    harsh = train(corpus, TrainConfig(noise_strength=64.0, **base))
    assert gentle.final_matrix.mean() >= harsh.final_matrix.mean()


def test_train_rejects_empty_corpus():
    cfg = TrainConfig(block_size=8, noise_strength=16.0, rate_weight=1.0,
                      patch_h=32, patch_w=32, proxy=LowFreqMse())
    with pytest.raises(ConfigError):
        train(Corpus(entries=[]), cfg)


def test_bounds_hold_at_every_step():
    corpus = _corpus(seed=5, count=2, size=32)
    cfg = TrainConfig(block_size=4, noise_strength=16.0, rate_weight=10.0,
                      epochs=4, batch_size=2, patch_h=32, patch_w=32,
                      seed=0, proxy=LowFreqMse())
    patches = gather_patches(corpus, cfg)
    plan = make_plan(4)
    state = TrainState.fresh(cfg)
    for step in range(40):
        batch = [patches[step % len(patches)]]
        _, grad, _, _ = loss_and_grad(state.raw, batch, cfg, state.rng, plan)
        adam_step(state, grad, cfg.learning_rate(1))
        matrix = params_to_matrix(state.raw)
        assert np.all(matrix > 16.0) and np.all(matrix < 128.0)
