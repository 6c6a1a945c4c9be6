"""Generate the deterministic training corpus shipped under data/corpus/.

Twenty 128x128 color images in binary PPM form, mixing smooth noise fields,
gradients, gaussian blobs, flat-filled rectangles, gratings and one
checkerboard. Content is synthetic but spectrally biased toward low
frequencies, like photographic material. Regenerating with the same seed
reproduces the files byte for byte.
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from freqscale.media_io import save_pnm

SIZE = 128
BASE_SEED = 9000


def _grid():
    ys, xs = np.mgrid[0:SIZE, 0:SIZE]
    return ys / (SIZE - 1), xs / (SIZE - 1)


def _shaped_noise(rng, alpha):
    """White noise with its spectrum rolled off as 1/(1+f)^alpha."""
    freqs_y = np.fft.fftfreq(SIZE)[:, None]
    freqs_x = np.fft.fftfreq(SIZE)[None, :]
    radius = np.hypot(freqs_y, freqs_x) * SIZE
    envelope = 1.0 / (1.0 + radius) ** alpha
    field = np.fft.ifft2(np.fft.fft2(rng.normal(size=(SIZE, SIZE))) * envelope).real
    field -= field.min()
    peak = field.max()
    if peak > 0:
        field /= peak
    return field


def make_clouds(rng):
    luma = _shaped_noise(rng, rng.uniform(1.4, 2.2))
    tint = rng.uniform(0.2, 0.8, size=3)
    chroma = _shaped_noise(rng, 2.5)
    img = np.empty((3, SIZE, SIZE))
    for ch in range(3):
        img[ch] = 30 + 200 * (0.75 * luma + 0.25 * tint[ch] * chroma)
    return img


def make_gradient(rng):
    ys, xs = _grid()
    angle = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(angle) * xs + np.sin(angle) * ys
    ramp = (ramp - ramp.min()) / (ramp.max() - ramp.min())
    lo = rng.uniform(0, 100, size=3)
    hi = rng.uniform(155, 255, size=3)
    img = lo[:, None, None] + (hi - lo)[:, None, None] * ramp
    img += 6 * _shaped_noise(rng, 1.8)
    return img


def make_blobs(rng):
    ys, xs = _grid()
    img = np.full((3, SIZE, SIZE), rng.uniform(40, 120, size=3)[:, None, None])
    for _ in range(rng.integers(4, 9)):
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        sigma = rng.uniform(0.05, 0.25)
        bump = np.exp(-((ys - cy) ** 2 + (xs - cx) ** 2) / (2 * sigma**2))
        color = rng.uniform(-110, 130, size=3)
        img += color[:, None, None] * bump
    img += 5 * _shaped_noise(rng, 2.0)
    return img


def make_rects(rng):
    img = np.full((3, SIZE, SIZE), rng.uniform(60, 180, size=3)[:, None, None])
    for _ in range(rng.integers(5, 10)):
        y0, x0 = rng.integers(0, SIZE - 16, size=2)
        h = int(rng.integers(12, 64))
        w = int(rng.integers(12, 64))
        color = rng.uniform(10, 245, size=3)
        img[:, y0:y0 + h, x0:x0 + w] = color[:, None, None]
    # soften edges a little, as optics would
    kernel = np.array([0.25, 0.5, 0.25])
    for ch in range(3):
        img[ch] = np.apply_along_axis(
            lambda r: np.convolve(r, kernel, mode="same"), 0, img[ch])
        img[ch] = np.apply_along_axis(
            lambda r: np.convolve(r, kernel, mode="same"), 1, img[ch])
    img += 4 * _shaped_noise(rng, 1.6)
    return img

def make_grating(rng):
    ys, xs = _grid()
    angle = rng.uniform(0, np.pi)
    cycles = rng.uniform(3, 9)
    phase = rng.uniform(0, 2 * np.pi)
    wave = np.sin(2 * np.pi * cycles * (np.cos(angle) * xs + np.sin(angle) * ys)
                  + phase)
    base = rng.uniform(70, 170, size=3)
    amp = rng.uniform(30, 70, size=3)
    img = base[:, None, None] + amp[:, None, None] * wave
    img += 34 * _shaped_noise(rng, 1.9)
    return img


def make_checker(rng):
    cell = int(rng.integers(8, 17))
    ys, xs = np.mgrid[0:SIZE, 0:SIZE]
    mask = ((ys // cell + xs // cell) % 2).astype(float)
    a = rng.uniform(20, 90, size=3)
    b = rng.uniform(160, 235, size=3)
    img = a[:, None, None] + (b - a)[:, None, None] * mask
    img += 8 * _shaped_noise(rng, 1.5)
    return img


RECIPE = (
    [make_clouds] * 6
    + [make_blobs] * 4
    + [make_gradient] * 4
    + [make_rects] * 3
    + [make_grating] * 2
    + [make_checker]
)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=os.path.join(
        os.path.dirname(__file__), "..", "data", "corpus"))
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for idx, maker in enumerate(RECIPE):
        rng = np.random.default_rng([BASE_SEED, idx])
        img = np.clip(maker(rng), 0.0, 255.0)
        path = os.path.join(args.out, f"img{idx:02d}.ppm")
        save_pnm(img, path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
