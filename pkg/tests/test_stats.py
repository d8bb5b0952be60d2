from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest
from scipy import stats as sps

from pcafield.conditions import ParamIandII, from_p_s
from pcafield.core import BernoulliProduct, PreconditionError, TransitionKernel
from pcafield.sim import RngSpec, compile_plan, plan_windows, sample_windows, spiral_order
from pcafield.stats import (
    InsufficientSamples,
    LineSpec,
    battery_passes,
    chi2_sf,
    dependence_verdict,
    extract_line,
    gamma_q,
    is_up_triangle,
    line_battery,
    line_iid_test,
    pearson,
    triangle_correlation_test,
    triangle_free_zero_event,
    triple_independence_scan,
)

HALF = BernoulliProduct.binary(F(1, 2))


@pytest.mark.parametrize("df", [1, 2, 3, 7, 30, 200])
@pytest.mark.parametrize("stat", [0.0, 1e-4, 0.5, 3.0, 12.0, 80.0, 400.0])
def test_chi2_sf_matches_scipy(stat, df):
    assert chi2_sf(stat, df) == pytest.approx(sps.chi2.sf(stat, df), rel=1e-9, abs=1e-12)


def test_gamma_q_edges():
    assert gamma_q(2.0, 0.0) == 1.0
    with pytest.raises(ValueError):
        gamma_q(0.0, 1.0)


def test_pearson_degrees_of_freedom():
    stat, df = pearson(np.array([30, 70]), np.array([0.3, 0.7]))
    assert stat == 0.0 and df == 1
    stat, df = pearson(np.array([10, 0, 10]), np.array([0.5, 0.0, 0.5]))
    assert df == 1


def test_line_spec_is_reduced():
    assert LineSpec((2, 4)).direction == (1, 2)
    assert LineSpec((-3, 3)).direction == (-1, 1)
    with pytest.raises(ValueError):
        LineSpec((0, 0))
    W, H, origin = LineSpec((-1, 1)).window_shape(32)
    assert (W, H, origin) == (32, 32, (-31, 0))


def test_extract_line_points():
    batch = sample_windows(from_p_s(p=F(1, 2), s=F(3, 4)), HALF, 4, 3, RngSpec(1), replicas=2)
    got = extract_line(batch, LineSpec((1, 1), (1, 0)))
    want = np.stack([batch.site(1, 0), batch.site(2, 1), batch.site(3, 2)], axis=1)
    assert np.array_equal(got, want)


def test_battery_passes_for_both_conditions():
    k = from_p_s(p=F(1, 2), s=F(3, 4))
    reports = line_battery(k, HALF, seed=42, samples=200_000)
    assert all(r.passed for r in reports)
    assert [r.direction for r in reports] == [(1, 0), (0, 1), (1, 1), (-1, 1), (1, 2)]


def test_condition_i_only_fails_on_the_anti_diagonal(cond_i_only):
    reports = line_battery(cond_i_only, HALF, seed=42, samples=200_000, directions=[(1, 0), (-1, 1)])
    horizontal, diagonal = reports
    assert horizontal.passed
    assert not diagonal.passed and diagonal.p_pairs < 1e-6


def test_line_test_needs_samples():
    k = from_p_s(p=F(1, 2), s=F(3, 4))
    batch = sample_windows(k, HALF, 8, 1, RngSpec(0), replicas=10)
    with pytest.raises(InsufficientSamples):
        line_iid_test(batch, LineSpec((1, 0)), HALF)


def test_line_reports_are_reproducible():
    k = from_p_s(p=F(1, 3), s=F(1, 4))
    mu = BernoulliProduct.binary(F(1, 3))
    a = [r.as_dict() for r in line_battery(k, mu, seed=5, samples=20_000)]
    b = [r.as_dict() for r in line_battery(k, mu, seed=5, samples=20_000)]
    assert a == b


def test_false_positive_control_on_iid_field():
    p = F(1, 3)
    k = from_p_s(p=p, s=p)
    mu = BernoulliProduct.binary(p)
    failures = sum(
        not battery_passes(line_battery(k, mu, seed=seed, samples=20_000), family_alpha=0.01)
        for seed in range(20)
    )
    assert failures <= 2


@pytest.mark.parametrize("i,expected", [(0, F(3, 4)), (1, F(9, 16))])
def test_triangle_correlation(i, expected):
    params = ParamIandII(F(1, 2), F(3, 4))
    d = 2**i
    batch = sample_windows(from_p_s(params), HALF, d + 1, d + 1, RngSpec(3, i), replicas=200_000)
    rep = triangle_correlation_test(batch, i, params)
    assert rep.expected == expected
    assert abs(rep.z) < 4


def test_triangle_correlation_without_dependence():
    params = ParamIandII(F(1, 3), F(1, 3))
    k = from_p_s(params)
    for i in (0, 1, 2):
        d = 2**i
        batch = sample_windows(k, BernoulliProduct.binary(F(1, 3)), d + 1, d + 1, RngSpec(4, i), replicas=200_000)
        rep = triangle_correlation_test(batch, i, params)
        assert rep.expected == F(1, 3) and abs(rep.z) < 4


def test_triangle_correlation_on_constructed_windows():
    params = ParamIandII(F(1, 2), F(3, 4))
    plan = compile_plan(from_p_s(params), params.p, spiral_order(3, 3))
    batch = plan_windows(plan, RngSpec(8), replicas=200_000)
    rep = triangle_correlation_test(batch, 1, params)
    assert abs(rep.z) < 4


def test_triangle_correlation_needs_events():
    params = ParamIandII(F(1, 2), F(3, 4))
    batch = sample_windows(from_p_s(params), HALF, 2, 2, RngSpec(0), replicas=100)
    with pytest.raises(InsufficientSamples):
        triangle_correlation_test(batch, 0, params)


def test_dependence_examples():
    k = from_p_s(p=F(1, 2), s=F(3, 4))
    assert dependence_verdict(k, F(1, 2), [(0, 0), (1, 0), (0, 1)])["dependent"]
    assert not dependence_verdict(k, F(1, 2), [(0, 1), (1, 1), (1, 0)])["dependent"]


def test_scan_marks_exactly_the_up_triangles():
    rep = triple_independence_scan(from_p_s(p=F(1, 2), s=F(3, 4)), F(1, 2))
    assert rep["subsets"] == 84
    assert rep["dependent_iff_up_triangle"]
    assert rep["dependent"] == 5


def test_scan_of_iid_field_finds_nothing():
    rep = triple_independence_scan(from_p_s(p=F(1, 3), s=F(1, 3)), F(1, 3))
    assert rep["dependent"] == 0


def test_scan_needs_both_conditions(cond_i_only):
    with pytest.raises(PreconditionError):
        triple_independence_scan(cond_i_only, F(1, 2))


def test_is_up_triangle():
    assert is_up_triangle([(0, 0), (2, 0), (0, 2)])
    assert not is_up_triangle([(0, 1), (1, 1), (1, 0)])
    assert not is_up_triangle([(0, 0), (1, 0)])


def test_zero_event_without_up_triangle():
    assert triangle_free_zero_event() == 0
    sites = [(0, 0), (2, 0), (0, 1), (1, 1)]
    k = from_p_s(p=F(1, 3), s=0)
    assert dependence_verdict(k, F(1, 3), sites)["dependent"]
    assert not any(is_up_triangle(t) for t in [sites[:3], sites[1:], [sites[0], sites[2], sites[3]]])


def test_float_kernel_verdict():
    k = TransitionKernel.binary(0.25, 0.75, 0.75, 0.25)
    assert not dependence_verdict(k, 0.5, [(0, 0), (1, 0)])["dependent"]
