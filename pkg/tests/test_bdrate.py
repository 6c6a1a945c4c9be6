import numpy as np
import pytest

from freqscale.bdrate import RdCurve, RdPoint, bd_rate, compare_lists, curve_from_sweep
from freqscale.codec import SweepPoint
from freqscale.errors import ConfigError
from freqscale.media_io import Corpus
from freqscale.scaling import flat_list
from freqscale.taskloss import LowFreqMse


def _curve(rates, qualities):
    return RdCurve.from_pairs(rates, qualities)


QUALS = [30.0, 34.0, 38.0, 42.0]
RATES = [4.0, 2.0, 1.0, 0.5]


def test_identical_curves_give_zero():
    a = _curve(RATES, QUALS)
    b = _curve(RATES, QUALS)
    assert abs(bd_rate(a, b)) < 1e-9


def test_doubled_and_halved_rates():
    anchor = _curve(RATES, QUALS)
    doubled = _curve([r * 2 for r in RATES], QUALS)
    halved = _curve([r / 2 for r in RATES], QUALS)
    assert bd_rate(doubled, anchor) == pytest.approx(100.0, abs=0.1)
    assert bd_rate(halved, anchor) == pytest.approx(-50.0, abs=0.1)


def test_antisymmetry_product():
    rng = np.random.default_rng(0)
    a = _curve(sorted(rng.uniform(0.5, 6, size=5), reverse=True),
               sorted(rng.uniform(28, 44, size=5)))
    b = _curve(sorted(rng.uniform(0.5, 6, size=5), reverse=True),
               sorted(rng.uniform(29, 43, size=5)))
    forward = bd_rate(a, b)
    backward = bd_rate(b, a)
    assert (1 + forward / 100.0) * (1 + backward / 100.0) == pytest.approx(1.0, abs=1e-6)


def test_scale_invariance():
    anchor = _curve(RATES, QUALS)
    test = _curve([3.1, 1.7, 0.8, 0.44], QUALS)
    base = bd_rate(test, anchor)
    scaled = bd_rate(_curve([r * 7.5 for r in [3.1, 1.7, 0.8, 0.44]], QUALS),
                     _curve([r * 7.5 for r in RATES], QUALS))
    assert scaled == pytest.approx(base, abs=1e-9)


def test_curve_validation():
    with pytest.raises(ConfigError):
        RdCurve(points=[RdPoint(1.0, 30.0), RdPoint(0.5, 30.0)])
    with pytest.raises(ConfigError):
        RdCurve(points=[RdPoint(-1.0, 30.0), RdPoint(0.5, 35.0)])
    short = _curve([2.0, 1.0, 0.5], [30.0, 34.0, 38.0])
    full = _curve(RATES, QUALS)
    with pytest.raises(ConfigError):
        bd_rate(short, full)


def test_disjoint_quality_ranges_rejected():
    low = _curve(RATES, [10.0, 11.0, 12.0, 13.0])
    high = _curve(RATES, [30.0, 31.0, 32.0, 33.0])
    with pytest.raises(ValueError):
        bd_rate(low, high)


def test_from_pairs_sorts_by_quality():
    curve = RdCurve.from_pairs([1.0, 4.0, 0.5, 2.0], [38.0, 30.0, 42.0, 34.0])
    assert [p.quality for p in curve.points] == [30.0, 34.0, 38.0, 42.0]
    assert [p.rate for p in curve.points] == [4.0, 2.0, 1.0, 0.5]


def test_curve_from_sweep_axis_selection():
    points = [SweepPoint(qp=q, bpp=r, psnr_db=p, task_quality_db=t)
              for q, r, p, t in [(12, 4.0, 45.0, 50.0), (17, 2.0, 42.0, 47.0),
                                 (22, 1.0, 39.0, 44.0), (27, 0.5, 36.0, 41.0)]]
    psnr_curve = curve_from_sweep(points, "psnr")
    task_curve = curve_from_sweep(points, "task_quality")
    assert [p.quality for p in psnr_curve.points] == [36.0, 39.0, 42.0, 45.0]
    assert [p.quality for p in task_curve.points] == [41.0, 44.0, 47.0, 50.0]
    with pytest.raises(ConfigError):
        curve_from_sweep(points, "vmaf")


def _tiny_corpus():
    rng = np.random.default_rng(1)
    return Corpus(entries=[("a", rng.uniform(0, 255, size=(3, 16, 16))),
                           ("b", rng.uniform(0, 255, size=(3, 16, 16)))])


def test_compare_lists_report_shape():
    corpus = _tiny_corpus()
    lists = {"anchor": flat_list(16), "open": flat_list(32), "wide": flat_list(64)}
    report = compare_lists(corpus, [12, 17, 22, 27], lists, 8, LowFreqMse(), "anchor")
    assert sorted(report.curves) == ["anchor", "open", "wide"]
    names = [(name, axis) for name, axis, _ in report.rows]
    assert ("anchor", "psnr") not in names
    assert len(report.rows) == 4  # 2 non-anchor lists x 2 axes
    table = report.format_table()
    assert "bd_rate_percent" in table and "open" in table


def test_compare_lists_anchor_self_comparison_is_zero():
    corpus = _tiny_corpus()
    lists = {"anchor": flat_list(16), "same": flat_list(16)}
    report = compare_lists(corpus, [12, 17, 22, 27], lists, 8, LowFreqMse(), "anchor")
    for _, _, value in report.rows:
        assert abs(value) < 1e-9


def test_compare_lists_requires_anchor():
    with pytest.raises(ConfigError):
        compare_lists(_tiny_corpus(), [12, 17, 22, 27], {"a": flat_list(16)},
                      8, LowFreqMse(), "missing")
