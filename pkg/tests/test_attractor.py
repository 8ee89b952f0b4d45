import numpy as np
import pytest

from rfis import attractor_convergence_check, sample_surface
from rfis.attractor import hausdorff, start_points, voxel_keys
from rfis.errors import EmptyStartSet, HomogeneityRequired

from conftest import S_CORRECTED, make_rfis


@pytest.fixture(scope="module")
def corners_run(example):
    return attractor_convergence_check(example, 3, 60)


def test_graph_is_a_fixed_point(example):
    rep = attractor_convergence_check(example, 4, 5, start="graph")
    assert max(rep.distances) <= rep.voxel_diagonal
    assert max(rep.deltas) <= 1e-12
    assert rep.sizes[0] == 65 * 65


def test_height_error_contracts(example, corners_run):
    d = corners_run.deltas
    assert all(b <= example.alpha * a + 1e-12 for a, b in zip(d, d[1:]))


def test_corner_start_approaches_the_graph(corners_run):
    rep = corners_run
    assert rep.distances[-1] <= 2 * rep.voxel_diagonal
    assert rep.distances[-1] < rep.distances[0]
    assert rep.sizes[-1] == 33 * 33
    assert rep.as_dict()["final_in_diagonals"] <= 2


def test_lifted_start_reports_same_sizes(example):
    rep = attractor_convergence_check(example, 2, 30, z_lift=5.0)
    assert rep.sizes[-1] == 17 * 17 and rep.deltas[0] > 2


def test_empty_start_set(example):
    with pytest.raises(EmptyStartSet):
        attractor_convergence_check(example, 3, 2, start=np.empty((0, 3)))


def test_explicit_start_must_sit_on_nodes(example):
    graph = sample_surface(example, 2)
    nodes, z, fz = start_points(example, graph, np.array([[0.25, 0.5, 1.0]]))
    assert nodes.tolist() == [[4, 8]] and fz[0] == graph.values[4, 8]
    with pytest.raises(ValueError):
        start_points(example, graph, np.array([[0.3, 0.5, 1.0]]))


def test_argument_checks(example):
    with pytest.raises(ValueError):
        attractor_convergence_check(example, 3, 0)
    with pytest.raises(HomogeneityRequired):
        attractor_convergence_check(make_rfis(S_CORRECTED, xp=[0, 2, 0, 3, 1]), 3, 2)


def test_helpers():
    a = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    b = np.array([[0.0, 0.0, 0.5]])
    assert hausdorff(a, b) == pytest.approx(np.hypot(1.0, 0.5))
    keys = voxel_keys(np.array([[1, 2]]), np.array([-0.01]), 0.25)
    assert keys.tolist() == [[1, 2, -1]]
