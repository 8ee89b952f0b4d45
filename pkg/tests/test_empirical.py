import numpy as np
import pytest

from rfis import (
    SampledSurface,
    box_count,
    empirical_dimension,
    lemma_bounds,
    level_stats,
    oscillation_profile,
    sample_surface,
    streamed_level_stats,
    theoretical_box_dimension,
    transfer_inequality_check,
)
from rfis.errors import DegenerateRegression, LevelMismatch

from conftest import S_CORRECTED, make_rfis, example_partition

LEVELS = range(0, 9)


@pytest.fixture(scope="module")
def profile(example, partition):
    return oscillation_profile(example, LEVELS, partition)


def test_constant_data_has_no_oscillation():
    rfis = make_rfis(S_CORRECTED, z=np.full((5, 5), 1.3))
    prof = oscillation_profile(rfis, range(0, 6))
    # bilinear weights of a constant are only constant up to rounding
    assert max(prof.total) <= 1e-10
    assert prof.box_counts == [(2**n * 4) ** 2 for n in range(6)]


def test_zero_surface_has_exactly_zero_oscillation():
    rfis = make_rfis(S_CORRECTED, z=np.zeros((5, 5)))
    prof = oscillation_profile(rfis, range(4, 8))
    assert prof.total == [0.0] * 4
    with pytest.raises(DegenerateRegression):
        empirical_dimension(prof)


def test_zero_surface_box_count():
    rfis = make_rfis(S_CORRECTED, z=np.zeros((5, 5)))
    surf = sample_surface(rfis, 4)
    for n in range(4):
        assert box_count(rfis, surf, n) == (2**n * 4) ** 2


def test_positive_oscillation_at_level_one(profile):
    assert profile.total[profile.at(1)] > 0


def test_per_part_sums_add_up(profile):
    assert np.allclose(profile.per_part.sum(axis=1), profile.total, rtol=1e-12)


def test_oscillation_is_nondecreasing(profile):
    assert all(b >= a for a, b in zip(profile.total, profile.total[1:]))


def test_affine_data_grows_like_K_to_the_n():
    k = np.arange(5)
    rfis = make_rfis(S_CORRECTED, z=np.add.outer(0.7 * k, -0.4 * k))
    prof = oscillation_profile(rfis, range(2, 9))
    ratios = np.array(prof.total) / 2.0 ** np.array(prof.levels)
    assert ratios.max() <= 1.01 * ratios.min()


def test_box_count_growth_between_levels_three_and_four(profile):
    f = profile.box_counts[profile.at(4)] / profile.box_counts[profile.at(3)]
    assert 4 <= f <= 8


def test_lower_and_upper_box_bounds(profile):
    for n, lo, count, hi in lemma_bounds(profile):
        assert lo <= count <= hi


def test_level_stats_needs_a_finer_surface(example):
    surf = sample_surface(example, 3)
    with pytest.raises(LevelMismatch):
        level_stats(example, surf, 3)
    with pytest.raises(LevelMismatch):
        box_count(example, surf, 3)


def test_streamed_stats_match_direct(example, partition, monkeypatch):
    import rfis.empirical as emp

    monkeypatch.setattr(emp, "STRIP_ELEMENTS", 500)
    coarse = sample_surface(example, 4)
    a = streamed_level_stats(example, coarse, partition)
    b = level_stats(example, sample_surface(example, 5), 4, partition)
    assert a.box_count == b.box_count
    assert np.allclose(a.per_part, b.per_part, rtol=1e-13) and a.total == pytest.approx(b.total, rel=1e-13)


def test_coarser_samples_give_the_same_statistics(example):
    fine = sample_surface(example, 6)
    a = level_stats(example, fine, 3)
    b = level_stats(example, SampledSurface(4, example.K, example.N, fine.values[::4, ::4]), 3)
    assert (a.total, a.box_count) == (b.total, b.box_count)


def test_regression_needs_four_levels(profile):
    with pytest.raises(LevelMismatch):
        empirical_dimension(profile, min_level=6)


def test_empirical_dimension_near_theory(profile):
    rep = empirical_dimension(profile)
    assert rep.levels == [4, 5, 6, 7, 8]
    assert abs(rep.dimension - 2.1667) < 0.1
    assert abs(rep.box_slope - 2.1667) < 0.1
    assert rep.ci95[0] <= rep.dimension <= rep.ci95[1]


def test_zero_scaling_dimension_is_two(zero_s):
    rep = empirical_dimension(oscillation_profile(zero_s, range(4, 9)))
    assert abs(rep.dimension - 2.0) < 0.1


def test_transfer_residuals_bounded(example, partition, profile):
    theory = theoretical_box_dimension(example, partition)
    comps = [(c.members, c.rho) for c in theory.components]
    rep = transfer_inequality_check(profile, theory.G, comps, growth_levels=range(4, 9))
    assert rep.levels == list(range(0, 8))
    assert rep.ok and all(rep.trend_ok)
    assert set(rep.growth) == {0, 1} and min(rep.growth.values()) > 0


def test_zero_scaling_residuals_bounded(zero_s, partition):
    prof = oscillation_profile(zero_s, range(2, 9), partition)
    G = np.zeros((3, 3))
    rep = transfer_inequality_check(prof, G)
    assert all(rep.trend_ok) and np.isfinite(rep.bound)
    # with G = 0 the residual is O(f, n+1, B_r) / K^n, which settles to a constant
    assert np.allclose(rep.residuals[-1], rep.residuals[-2], rtol=0.02)


def test_growth_skipped_when_rho_at_most_K(profile):
    rep = transfer_inequality_check(profile, np.zeros((3, 3)), [((0, 1), 1.9)])
    assert rep.growth == {}
