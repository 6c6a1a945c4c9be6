"""Bjontegaard-delta-rate over RD curves and scaling-list comparison reports.

bd_rate fits cubic polynomials of log10(rate) as a function of quality to
both curves, integrates them over the overlapping quality interval with a
1000-point composite trapezoid, and reports the mean rate ratio as a
percentage; negative values are bitrate savings versus the anchor.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .codec import SweepPoint, rd_sweep
from .errors import ConfigError

BD_SAMPLES = 1000


class RdPoint(NamedTuple):
    rate: float
    quality: float


@dataclass
class RdCurve:
    """RD points with strictly increasing quality and positive rates."""

    points: list[RdPoint]

    def __post_init__(self):
        if any(p.rate <= 0 for p in self.points):
            raise ConfigError("rates must be positive")
        if any(not np.isfinite(p.quality) or not np.isfinite(p.rate) for p in self.points):
            raise ConfigError("non-finite RD point")
        qualities = [p.quality for p in self.points]
        if any(b <= a for a, b in zip(qualities, qualities[1:])):
            raise ConfigError(f"qualities must be strictly increasing, got {qualities}")

    @classmethod
    def from_pairs(cls, rates, qualities) -> "RdCurve":
        pairs = sorted(zip(qualities, rates, strict=True))
        return cls(points=[RdPoint(rate=r, quality=q) for q, r in pairs])

    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points], dtype=np.float64)

    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points], dtype=np.float64)


def bd_rate(test: RdCurve, anchor: RdCurve) -> float:
    """Average bitrate change of `test` versus `anchor` in percent."""
    for name, curve in (("test", test), ("anchor", anchor)):
        if len(curve.points) < 4:
            raise ConfigError(f"{name} curve has {len(curve.points)} points, need >= 4")
    low = max(test.qualities().min(), anchor.qualities().min())
    high = min(test.qualities().max(), anchor.qualities().max())
    if high <= low:
        raise ValueError(f"quality ranges do not overlap: [{low}, {high}]")

    fit_test = np.polyfit(test.qualities(), np.log10(test.rates()), 3)
    fit_anchor = np.polyfit(anchor.qualities(), np.log10(anchor.rates()), 3)
    samples = np.linspace(low, high, BD_SAMPLES)
    integral_test = np.trapezoid(np.polyval(fit_test, samples), samples)
    integral_anchor = np.trapezoid(np.polyval(fit_anchor, samples), samples)
    mean_log_diff = (integral_test - integral_anchor) / (high - low)
    return float((10.0 ** mean_log_diff - 1.0) * 100.0)


QUALITY_AXES = ("psnr", "task_quality")


def curve_from_sweep(points: list[SweepPoint], axis: str) -> RdCurve:
    if axis not in QUALITY_AXES:
        raise ConfigError(f"unknown quality axis {axis!r}, expected one of {QUALITY_AXES}")
    attr = "psnr_db" if axis == "psnr" else "task_quality_db"
    pairs = sorted((getattr(p, attr), p.bpp) for p in points)
    return RdCurve(points=[RdPoint(rate, quality) for quality, rate in pairs])


@dataclass
class CompareReport:
    """BD-rate of each non-anchor list against the anchor, on both axes."""

    anchor: str
    curves: dict[str, list[SweepPoint]]
    rows: list[tuple[str, str, float]]  # (list name, axis, bd-rate percent)

    def format_table(self) -> str:
        width = max([len("list")] + [len(name) for name, _, _ in self.rows])
        lines = [f"{'list':<{width}}  {'axis':<12}  bd_rate_percent"]
        for name, axis, value in self.rows:
            lines.append(f"{name:<{width}}  {axis:<12}  {value:+.4f}")
        return "\n".join(lines)


def compare_lists(corpus, qps, lists: dict, block_size: int, proxy,
                  anchor_name: str, threads: int = 1) -> CompareReport:
    """RD-sweep every named scaling list and BD-rate each against the anchor."""
    if anchor_name not in lists:
        raise ConfigError(f"anchor {anchor_name!r} not among lists {sorted(lists)}")
    curves = {
        name: rd_sweep(corpus, qps, slist, block_size, proxy, threads=threads)
        for name, slist in lists.items()
    }
    rows = []
    for name in lists:
        if name == anchor_name:
            continue
        for axis in QUALITY_AXES:
            value = bd_rate(
                curve_from_sweep(curves[name], axis),
                curve_from_sweep(curves[anchor_name], axis),
            )
            rows.append((name, axis, value))
    return CompareReport(anchor=anchor_name, curves=curves, rows=rows)
