"""Image and corpus I/O plus deterministic patch cropping.

Only binary PNM is supported: P6 (PPM) and P5 (PGM), maxval 255. Images are
float64 arrays of shape (3, H, W) in [0, 255], channels in R, G, B order;
grayscale input is replicated to three identical planes. A corpus is a
directory scanned non-recursively for .ppm/.pgm files, iterated in
lexicographic filename order.
"""

import os
from dataclasses import dataclass

import numpy as np

from .errors import PnmError

CORPUS_EXTENSIONS = (".ppm", ".pgm")


def _skip_space_and_comments(data: bytes, pos: int) -> int:
    while pos < len(data):
        if data[pos : pos + 1].isspace():
            pos += 1
        elif data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    return pos


def _read_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    pos = _skip_space_and_comments(data, pos)
    start = pos
    while pos < len(data) and data[pos : pos + 1].isdigit():
        pos += 1
    if pos == start:
        raise PnmError(f"expected {what} at byte offset {start}")
    return int(data[start:pos]), pos


def load_pnm(path) -> np.ndarray:
    """Load a binary PPM/PGM file as a (3, H, W) float64 tensor."""
    with open(path, "rb") as f:
        data = f.read()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise PnmError(f"not a binary PGM/PPM file (bad magic at byte offset 0)")
    width, pos = _read_int(data, 2, "width")
    height, pos = _read_int(data, pos, "height")
    maxval_at = _skip_space_and_comments(data, pos)
    maxval, pos = _read_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PnmError(f"bad dimensions {width}x{height} in header")
    if maxval != 255:
        raise PnmError(f"unsupported maxval {maxval} at byte offset {maxval_at}; only 255")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PnmError(f"expected single whitespace after maxval at byte offset {pos}")
    pos += 1
    channels = 3 if magic == b"P6" else 1
    needed = width * height * channels
    available = len(data) - pos
    if available < needed:
        raise PnmError(
            f"truncated payload: need {needed} bytes from byte offset {pos}, "
            f"found {available}"
        )
    samples = np.frombuffer(data, dtype=np.uint8, count=needed, offset=pos)
    if channels == 3:
        img = samples.reshape(height, width, 3).transpose(2, 0, 1)
    else:
        plane = samples.reshape(height, width)
        img = np.stack([plane, plane, plane])
    return img.astype(np.float64)


def save_pnm(img: np.ndarray, path) -> None:
    """Write a (3, H, W) tensor as binary PPM, clamped and rounded to bytes."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ValueError(f"expected (3, H, W) tensor, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("non-finite sample value")
    # clamp then round half away from zero (all values non-negative here)
    quantized = np.floor(np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)
    height, width = quantized.shape[1:]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(quantized.transpose(1, 2, 0).tobytes())


def crop_patches(img: np.ndarray, patch_h: int, patch_w: int, seed: int,
                 count: int | None = None) -> list[np.ndarray]:
    """Deterministic random patches; offsets drawn uniformly over valid
    top-left positions from a generator seeded with `seed`.

    When `count` is omitted it defaults to the image/patch area ratio
    (at least one patch).
    """
    height, width = img.shape[1:]
    if patch_h > height or patch_w > width:
        raise ValueError(
            f"patch {patch_h}x{patch_w} larger than image {height}x{width}"
        )
    if patch_h < 1 or patch_w < 1:
        raise ValueError("patch dimensions must be positive")
    if count is None:
        count = max(1, round((height * width) / (patch_h * patch_w)))
    rng = np.random.default_rng(seed)
    tops = rng.integers(0, height - patch_h + 1, size=count)
    lefts = rng.integers(0, width - patch_w + 1, size=count)
    return [
        np.ascontiguousarray(img[:, t : t + patch_h, l : l + patch_w])
        for t, l in zip(tops, lefts)
    ]


@dataclass
class Corpus:
    """Ordered (identifier, image) pairs with unique identifiers."""

    entries: list[tuple[str, np.ndarray]]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def load_corpus(directory) -> Corpus:
    """Load every .ppm/.pgm file directly inside `directory`, sorted by name."""
    names = sorted(
        name
        for name in os.listdir(directory)
        if name.endswith(CORPUS_EXTENSIONS)
        and os.path.isfile(os.path.join(directory, name))
    )
    entries = [(name, load_pnm(os.path.join(directory, name))) for name in names]
    return Corpus(entries)
