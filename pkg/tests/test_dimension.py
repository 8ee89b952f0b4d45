import math

import numpy as np
import pytest

from rfis import (
    build_partition,
    connected_components,
    degenerate_cells,
    positions,
    rectangle_cells,
    spectral_radius,
    theoretical_box_dimension,
)
from rfis.dimension import component_degeneracy, locally_degenerate
from rfis.errors import HypothesisViolation, NoConvergence, NotNonnegative

from conftest import S_CORRECTED, S_ORIGINAL, make_rfis

EXAMPLE_DIM = 1 + math.log(5.04) / (2 * math.log(2))


def example_G():
    G = np.zeros((3, 3))
    G[0, 1], G[1, 0], G[2, 0], G[2, 1] = 1.8, 2.8, 1.2, 0.8
    return G


def test_components_of_example_matrix():
    assert connected_components(example_G()) == [frozenset({0, 1})]


def test_components_small_cases():
    assert connected_components([[1.0]]) == [frozenset({0})]
    assert connected_components([[0.0]]) == []
    cycle = np.roll(np.eye(3), 1, axis=0)
    assert connected_components(cycle) == [frozenset({0, 1, 2})]
    assert connected_components(np.diag([1.0, 0.0, 2.0])) == [frozenset({0}), frozenset({2})]


def test_positions():
    assert positions(example_G()) == [1, 1, 2]
    assert positions(np.eye(3)) == [1, 1, 1]
    chain = np.zeros((3, 3))
    chain[1, 0] = chain[2, 1] = 1.0  # 1 -> 2 -> 3
    assert positions(chain) == [1, 2, 3]


def test_spectral_radius_examples():
    assert spectral_radius([[0.0, 1.8], [2.8, 0.0]]) == pytest.approx(math.sqrt(5.04), rel=1e-10)
    assert spectral_radius([[0.7]]) == pytest.approx(0.7, rel=1e-12)
    assert spectral_radius(np.roll(np.eye(4), 1, axis=0)) == pytest.approx(1.0, rel=1e-10)


def test_spectral_radius_errors():
    with pytest.raises(NotNonnegative):
        spectral_radius([[1.0, -0.1], [1.0, 1.0]])
    with pytest.raises(NoConvergence):
        spectral_radius([[1.0, 3.0], [0.5, 2.0]], max_iter=2)
    with pytest.raises(ValueError):
        spectral_radius(np.ones(3))


def test_zero_scaling_is_degenerate_everywhere(zero_s):
    assert all(degenerate_cells(zero_s).values())


def test_affine_data_is_degenerate_everywhere():
    k = np.arange(5)
    z = np.add.outer(0.3 * k, -1.1 * k) + 0.25
    rfis = make_rfis(S_CORRECTED, z=z)
    assert all(locally_degenerate(rfis).values())
    assert all(degenerate_cells(rfis).values())


def test_example_has_no_degenerate_cells(example):
    assert not any(degenerate_cells(example).values())


def test_degeneracy_needs_every_ancestor(partition):
    # zero factors on node rows 0..2 kill S on B_1 and B_2 but not on B_3
    s = np.array(S_CORRECTED)
    s[:3] = 0.0
    rfis = make_rfis(s)
    deg = degenerate_cells(rfis)
    assert all(deg[c] for c in rectangle_cells(0, 2, 0, 4))
    assert not any(deg[c] for c in rectangle_cells(2, 4, 0, 4))
    parts, comps = component_degeneracy([frozenset({0, 1})], partition, deg)
    assert parts == [True, True, False] and comps == [True]


def test_ancestor_of_non_degenerate_cell_is_not_degenerate():
    # zero S on cell (1, 1) alone: its D' contains cells with nonzero S
    s = np.array(S_CORRECTED)
    s[:2, :2] = 0.0
    rfis = make_rfis(s)
    assert locally_degenerate(rfis)[(1, 1)]
    assert not degenerate_cells(rfis)[(1, 1)]


def test_example_dimension(example, partition):
    rep = theoretical_box_dimension(example, partition)
    assert rep.dimension == pytest.approx(EXAMPLE_DIM, abs=1e-10)
    assert len(rep.components) == 1
    c = rep.components[0]
    assert c.members == (0, 1) and c.rho == pytest.approx(math.sqrt(5.04), rel=1e-10)
    assert rep.positions == [1, 1, 2]
    assert not rep.irreducible and rep.warnings == []
    d = rep.as_dict()
    assert d["components"][0]["parts"] == [1, 2]


def test_zero_scaling_gives_two(zero_s, partition):
    assert theoretical_box_dimension(zero_s, partition).dimension == 2.0


def test_small_scaling_gives_two(partition):
    rfis = make_rfis(0.1 * np.array(S_CORRECTED))
    rep = theoretical_box_dimension(rfis, partition)
    assert rep.components[0].rho < 2 and rep.dimension == 2.0


def test_affine_data_gives_two(partition):
    k = np.arange(5)
    rfis = make_rfis(S_CORRECTED, z=np.add.outer(k, 2.0 * k))
    rep = theoretical_box_dimension(rfis, partition)
    assert rep.components[0].degenerate and rep.dimension == 2.0


def test_rho_close_to_K_warns(partition):
    rfis = make_rfis(2 / math.sqrt(5.04) * np.array(S_CORRECTED))
    rep = theoretical_box_dimension(rfis, partition)
    assert rep.dimension == pytest.approx(2.0, abs=1e-9)
    assert len(rep.warnings) == 1


@pytest.mark.parametrize(
    "what, build",
    [
        ("uniform sums", lambda: (make_rfis(S_ORIGINAL), None)),
        ("steady", lambda: (make_rfis(_checker()), None)),
        ("compatible partition", lambda: (make_rfis(S_CORRECTED), build_partition([rectangle_cells(0, 4, 0, 2), rectangle_cells(0, 4, 2, 4)], 4))),
        ("homogeneity", lambda: (make_rfis(S_CORRECTED, xp=[0, 2, 0, 3, 1]), None)),
    ],
)
def test_hypothesis_violations(what, build, partition):
    rfis, part = build()
    with pytest.raises(HypothesisViolation) as info:
        theoretical_box_dimension(rfis, part or partition)
    assert info.value.hypothesis == what


def _checker():
    return 0.5 * (-1.0) ** np.add.outer(np.arange(5), np.arange(5))
