"""Scaling matrices and lists: sigmoid parameterization, rectangular
derivation, integer export, and the list file format.

A scaling matrix is a square grid of per-frequency factors (16 = neutral).
During training it lives in the open interval (16, 128) through the bounded
map 16 + 112*sigmoid(raw); exported matrices are integers in [16, 128].

A scaling list maps (block size, component, prediction mode) to an integer
matrix. Lookups for absent entries fall back component-first, mode-second:
(size, C, M) -> (size, Y, M) -> (size, C, intra) -> (size, Y, intra).

List file format (UTF-8, one matrix per stanza, '#' starts a comment):

    FREQSCALE-LIST v1
    MATRIX size=<B> component=<Y|Cb|Cr> mode=<intra|inter>
    <B lines of B space-separated integers>

Stanzas are separated by blank lines. The reader accepts values in [1, 255]
so externally derived perceptual lists below 16 can be loaded for comparison.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ScalingListError
from .transform import BLOCK_SIZES

COMPONENTS = ("Y", "Cb", "Cr")
MODES = ("intra", "inter")

LIST_MAGIC = "FREQSCALE-LIST v1"

S_MIN = 16.0
S_RANGE = 112.0
S_MAX = S_MIN + S_RANGE


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign to avoid exp overflow for large negative inputs
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def params_to_matrix(raw: np.ndarray) -> np.ndarray:
    """Bounded scaling matrix 16 + 112*sigmoid(raw), strictly inside (16, 128).

    Deep saturation would round to the interval endpoints in float64, so the
    result is clamped to the nearest representable values inside the open
    interval (one ulp in, well under the integer rounding grain).
    """
    raw = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise ValueError("non-finite scaling parameter")
    values = S_MIN + S_RANGE * _sigmoid(raw)
    return np.clip(values, np.nextafter(S_MIN, np.inf),
                   np.nextafter(S_MIN + S_RANGE, -np.inf))


def matrix_to_jacobian_diag(raw: np.ndarray) -> np.ndarray:
    """Elementwise derivative of params_to_matrix: 112*sig(raw)*(1-sig(raw))."""
    s = _sigmoid(raw)
    return S_RANGE * s * (1.0 - s)


def round_matrix(matrix: np.ndarray) -> np.ndarray:
    """Round half away from zero to integers."""
    matrix = np.asarray(matrix, dtype=np.float64)
    return (np.sign(matrix) * np.floor(np.abs(matrix) + 0.5)).astype(np.int64)


def derive_rectangular(base: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Rectangular matrix by nearest-neighbor index mapping from a square base.

    The base must be the square matrix for max(target_h, target_w);
    out[i][j] = base[i*B//target_h][j*B//target_w].
    """
    base = np.asarray(base)
    if target_h not in BLOCK_SIZES or target_w not in BLOCK_SIZES:
        raise ConfigError(f"target dims {target_h}x{target_w} must be in {BLOCK_SIZES}")
    size = max(target_h, target_w)
    if base.shape != (size, size):
        raise ConfigError(
            f"base matrix is {base.shape[0]}x{base.shape[1]}, need {size}x{size} "
            f"for target {target_h}x{target_w}"
        )
    rows = np.arange(target_h) * size // target_h
    cols = np.arange(target_w) * size // target_w
    return base[np.ix_(rows, cols)]


@dataclass
class ScalingList:
    """Integer scaling matrices keyed by (block size, component, mode)."""

    entries: dict[tuple[int, str, str], np.ndarray] = field(default_factory=dict)

    def put(self, size: int, component: str, mode: str, matrix: np.ndarray):
        if size not in BLOCK_SIZES:
            raise ConfigError(f"block size {size} not in {BLOCK_SIZES}")
        if component not in COMPONENTS:
            raise ConfigError(f"component {component!r} not in {COMPONENTS}")
        if mode not in MODES:
            raise ConfigError(f"mode {mode!r} not in {MODES}")
        matrix = np.asarray(matrix)
        if matrix.shape != (size, size):
            raise ConfigError(f"matrix shape {matrix.shape} does not match size {size}")
        self.entries[(size, component, mode)] = matrix.astype(np.int64)

    def resolve(self, size: int, component: str, mode: str) -> np.ndarray:
        """Look up a matrix, falling back Cb/Cr -> Y first, inter -> intra second."""
        for key in (
            (size, component, mode),
            (size, "Y", mode),
            (size, component, "intra"),
            (size, "Y", "intra"),
        ):
            if key in self.entries:
                return self.entries[key]
        raise ConfigError(f"no scaling matrix resolvable for size={size} "
                          f"component={component} mode={mode}")

    def rectangular(self, target_h: int, target_w: int,
                    component: str = "Y", mode: str = "intra") -> np.ndarray:
        base = self.resolve(max(target_h, target_w), component, mode)
        return derive_rectangular(base, target_h, target_w)


def assemble_list(per_size: dict[int, np.ndarray]) -> ScalingList:
    """One trained matrix per block size, duplicated across Y/Cb/Cr, intra mode."""
    missing = [b for b in BLOCK_SIZES if b not in per_size]
    if missing:
        raise ConfigError(f"missing matrices for sizes {missing}")
    out = ScalingList()
    for size in BLOCK_SIZES:
        matrix = round_matrix(np.asarray(per_size[size], dtype=np.float64))
        for component in COMPONENTS:
            out.put(size, component, "intra", matrix)
    return out


def flat_list(value: int = 16) -> ScalingList:
    """Constant matrices for every key; value 16 reproduces unscaled coding."""
    out = ScalingList()
    for size in BLOCK_SIZES:
        matrix = np.full((size, size), int(value), dtype=np.int64)
        for component in COMPONENTS:
            for mode in MODES:
                out.put(size, component, mode, matrix)
    return out


def _sort_key(key: tuple[int, str, str]):
    size, component, mode = key
    return (size, COMPONENTS.index(component), MODES.index(mode))


def write_list(slist: ScalingList, path) -> None:
    lines = [LIST_MAGIC]
    for key in sorted(slist.entries, key=_sort_key):
        size, component, mode = key
        lines.append("")
        lines.append(f"MATRIX size={size} component={component} mode={mode}")
        for row in slist.entries[key]:
            lines.append(" ".join(str(int(v)) for v in row))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def read_list(path) -> ScalingList:
    with open(path, "r", encoding="utf-8") as f:
        raw_lines = f.read().split("\n")

    def err(lineno, msg):
        return ScalingListError(f"{path}:{lineno}: {msg}")

    # strip comments, keep (lineno, text) for meaningful lines
    lines = []
    for i, text in enumerate(raw_lines, start=1):
        text = text.split("#", 1)[0].strip()
        lines.append((i, text))

    if not lines or lines[0][1] != LIST_MAGIC:
        raise err(1, f"missing {LIST_MAGIC!r} header")

    out = ScalingList()
    pos = 1
    while pos < len(lines):
        lineno, text = lines[pos]
        if not text:
            pos += 1
            continue
        if not text.startswith("MATRIX"):
            raise err(lineno, f"expected MATRIX stanza header, got {text!r}")
        attrs = {}
        for token in text.split()[1:]:
            if "=" not in token:
                raise err(lineno, f"malformed attribute {token!r}")
            name, value = token.split("=", 1)
            attrs[name] = value
        for required in ("size", "component", "mode"):
            if required not in attrs:
                raise err(lineno, f"MATRIX header missing {required}=")
        try:
            size = int(attrs["size"])
        except ValueError:
            raise err(lineno, f"size {attrs['size']!r} is not an integer") from None
        if size not in BLOCK_SIZES:
            raise err(lineno, f"size {size} not in {BLOCK_SIZES}")
        if attrs["component"] not in COMPONENTS:
            raise err(lineno, f"component {attrs['component']!r} not in {COMPONENTS}")
        if attrs["mode"] not in MODES:
            raise err(lineno, f"mode {attrs['mode']!r} not in {MODES}")
        pos += 1
        matrix = np.empty((size, size), dtype=np.int64)
        for r in range(size):
            while pos < len(lines) and not lines[pos][1]:
                pos += 1
            if pos >= len(lines):
                raise err(len(raw_lines), f"unexpected end of file inside {size}x{size} matrix")
            rlineno, rtext = lines[pos]
            fields = rtext.split()
            if len(fields) != size:
                raise err(rlineno, f"expected {size} values, got {len(fields)}")
            for c, fieldtext in enumerate(fields):
                try:
                    value = int(fieldtext)
                except ValueError:
                    raise err(rlineno, f"value {fieldtext!r} is not an integer") from None
                if not 1 <= value <= 255:
                    raise err(rlineno, f"value {value} outside [1, 255]")
                matrix[r, c] = value
            pos += 1
        out.put(size, attrs["component"], attrs["mode"], matrix)
    if not out.entries:
        raise err(len(raw_lines), "no MATRIX stanzas found")
    return out


_VTM_COMPONENT = {"Y": "LUMA", "Cb": "CB", "Cr": "CR"}


def write_list_vtm(slist: ScalingList, path) -> None:
    """Best-effort export with conventional VTM-like section names.

    The exact key naming used by VTM configuration files is unverified; the
    emitted header says so. This format is write-only.
    """
    lines = [
        "# best-effort VTM-style scaling list export",
        "# section naming is unverified against any VTM release; do not assume",
        "# this file is loadable by VTM without adjustment",
    ]
    for key in sorted(slist.entries, key=_sort_key):
        size, component, mode = key
        lines.append("")
        lines.append(f"{mode.upper()}{size}X{size}_{_VTM_COMPONENT[component]} =")
        for row in slist.entries[key]:
            lines.append(",".join(str(int(v)) for v in row))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
