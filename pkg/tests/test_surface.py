import numpy as np
import pytest

from rfis import (
    build_address_maps,
    build_rfis,
    check_matchable,
    eval_F,
    eval_field,
    eval_g,
    eval_W,
    operator_T_gaps,
    operator_T_iterate,
    sample_surface,
    uniform_data,
)
from rfis.errors import HomogeneityRequired, OutOfDomain, ScalingFactorTooLarge, ShapeMismatch
from rfis.surface import refine_block, replace, sample_field, sample_levels

from conftest import S_CORRECTED, XP, YP, Z, make_rfis


# hand values: S(1/8,1/8) is the mean of s00, s01, s10, s11; h(1/8,1/8) the mean of z00, z01, z10, z11;
# D'_11 = [x_0, x_2] x [y_2, y_4] with corner heights z02, z04, z22, z24 = 2, 2, 2, 1.
def test_fields_at_cell_centre(example, example_printed):
    assert eval_field(example, "h", 0.125, 0.125) == pytest.approx(2.25, abs=1e-15)
    assert eval_field(example, "S", 0.125, 0.125) == pytest.approx(0.575, abs=1e-15)
    assert eval_field(example_printed, "S", 0.125, 0.125) == pytest.approx(0.6, abs=1e-15)
    assert eval_field(example, "S", 0.25, 0.25) == 0.45


def test_g_and_F_by_hand(example, example_printed):
    assert eval_g(example, 1, 1, 0.25, 0.75) == pytest.approx(1.75, abs=1e-15)
    # g interpolates the corners of D'_11
    assert eval_g(example, 1, 1, 0.5, 1.0) == 1.0
    assert eval_F(example, 1, 1, 0.25, 0.75, 1.0) == pytest.approx(0.575 * (1 - 1.75) + 2.25, abs=1e-15)
    assert eval_F(example_printed, 1, 1, 0.25, 0.75, 1.0) == pytest.approx(1.8, abs=1e-15)
    x, y, z = eval_W(example, 1, 1, (0.25, 0.75, 1.0))
    assert (x, y) == (0.125, 0.125) and z == pytest.approx(1.81875, abs=1e-15)


def test_F_maps_domain_corners_to_cell_corners(example):
    d = example.data
    for i in range(1, 5):
        for j in range(1, 5):
            for a in (0, 1):
                for b in (0, 1):
                    px, qy = XP[i - 1 + a], YP[j - 1 + b]
                    out = eval_F(example, i, j, d.x[px], d.y[qy], Z[px][qy])
                    assert out == pytest.approx(Z[i - 1 + a][j - 1 + b], abs=1e-14)


def test_evaluation_outside_domain(example):
    with pytest.raises(OutOfDomain):
        eval_g(example, 1, 1, 0.75, 0.75)
    with pytest.raises(OutOfDomain):
        eval_field(example, "h", 1.5, 0.0)


def test_scaling_factor_validation():
    data = uniform_data(Z)
    maps = build_address_maps(data, XP, YP)
    bad = np.array(S_CORRECTED)
    bad[2, 2] = 1.0
    with pytest.raises(ScalingFactorTooLarge):
        build_rfis(data, maps, bad)
    with pytest.raises(ShapeMismatch):
        build_rfis(data, maps, np.zeros((4, 4)))


def test_alpha_and_K(example):
    assert example.alpha == 0.95 and example.K == 2 and example.homogeneous


def test_matchable_conditions_hold(example):
    rep = check_matchable(example)
    assert rep.ok and rep.max_discrepancy <= 1e-12 and rep.seams_checked == 24


def test_matchable_detects_broken_corner_table(example):
    g = np.array(example.g_corners)
    g[0, 0, 1, 1] += 0.5
    rep = check_matchable(replace(example, g_corners=g))
    assert not rep.ok and rep.worst_seam is not None


def test_level_zero_is_the_data(example):
    assert np.array_equal(sample_surface(example, 0).values, np.array(Z, float))


def test_level_one_node_by_hand(example, example_printed):
    f = sample_surface(example_printed, 1)
    assert f.values[1, 1] == pytest.approx(1.8, abs=1e-12)
    assert sample_surface(example, 1).values[1, 1] == pytest.approx(1.81875, abs=1e-12)


def test_interpolation_exact_at_data_nodes(example):
    for surf in sample_levels(example, 6):
        assert np.abs(surf.data_nodes() - np.array(Z)).max() <= 1e-12


def test_coarsening_is_bit_exact(example):
    prev = None
    for surf in sample_levels(example, 6):
        if prev is not None:
            assert np.array_equal(surf.coarsen().values, prev.values)
        prev = surf


def test_self_consistency_at_random_nodes(example):
    rng = np.random.default_rng(7)
    n = 5
    fine, coarse = sample_surface(example, n), sample_surface(example, n - 1)
    side = fine.side
    P = example.K**n
    for k, l in rng.integers(0, side + 1, size=(200, 2)):
        i, j = max(1, -(-k // P)), max(1, -(-l // P))
        xs = example.maps.u_inv(i, k / side)
        ys = example.maps.v_inv(j, l / side)
        pk, pl = round(xs * coarse.side), round(ys * coarse.side)
        expect = eval_F(example, i, j, xs, ys, coarse.values[pk, pl])
        assert abs(fine.values[k, l] - expect) <= 1e-12


def test_seam_nodes_agree_through_every_cell(example):
    n = 3
    coarse = sample_surface(example, n - 1)
    fine = sample_surface(example, n)
    P = example.K**n
    nodes = np.arange(fine.side + 1)
    worst = 0.0
    for seam in range(1, 4):
        k = seam * P
        for cell in (seam, seam + 1):
            v = refine_block(example, coarse.values, n, [k], nodes, row_cells=[cell])
            worst = max(worst, np.abs(v[0] - fine.values[k]).max())
            v = refine_block(example, coarse.values, n, nodes, [k], col_cells=[cell])
            worst = max(worst, np.abs(v[:, 0] - fine.values[:, k]).max())
    assert worst <= 1e-9


def test_forced_owner_must_contain_node(example):
    coarse = sample_surface(example, 0)
    with pytest.raises(OutOfDomain):
        refine_block(example, coarse.values, 1, [1], [0], row_cells=[3])


def test_zero_scaling_gives_h(zero_s):
    for n in range(4):
        assert np.allclose(sample_surface(zero_s, n).values, sample_field(zero_s, "h", n).values, atol=1e-15, rtol=0)


def test_sampling_requires_homogeneity():
    r = make_rfis(xp=[0, 3, 1, 4, 1])
    with pytest.raises(HomogeneityRequired):
        sample_surface(r, 1)


def test_operator_T_matches_sampler(example):
    ref = sample_surface(example, 3)
    gaps = operator_T_gaps(example, 3, 600, ref)
    assert gaps[-1] <= 1e-6
    assert all(b <= a for a, b in zip(gaps[2:], gaps[3:]))
    phi = operator_T_iterate(example, 3, 600)
    assert np.abs(phi.values - ref.values).max() <= 1e-6


def test_operator_T_contraction_bound(example):
    gaps = operator_T_gaps(example, 2, 40)
    for k, g in enumerate(gaps):
        assert g <= example.alpha**k * gaps[0] + 1e-12


def test_operator_T_zero_scaling_converges_in_one_step(zero_s):
    gaps = operator_T_gaps(zero_s, 3, 2)
    assert gaps[0] <= 1e-15 and gaps[1] <= 1e-15
