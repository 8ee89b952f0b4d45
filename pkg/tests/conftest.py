import numpy as np
import pytest

from rfis import build_address_maps, build_partition, build_rfis, rectangle_cells, uniform_data

Z = [[2, 3, 2, 1, 2], [2, 2, 3, 1, 3], [1, 3, 2, 3, 1], [3, 2, 4, 2, 0], [2, 3, 2, 4, 4]]
S_ORIGINAL = [
    [0.85, 0.9, 0.95, 0.9, 0.9],
    [0.2, 0.45, 0.8, 0.7, 0.6],
    [0, 0, 0, 0.5, 0.95],
    [-0.4, -0.2, 0, 0.3, 0.6],
    [-0.8, -0.4, 0, 0.1, 0.25],
]
S_CORRECTED = [row[:] for row in S_ORIGINAL]
S_CORRECTED[1][0] = 0.1
XP = [0, 2, 0, 2, 0]
YP = [2, 4, 2, 0, 2]


def make_rfis(s=S_CORRECTED, z=Z, xp=XP, yp=YP):
    data = uniform_data(z)
    return build_rfis(data, build_address_maps(data, xp, yp), s)


def example_partition():
    return build_partition([rectangle_cells(0, 2, 0, 2), rectangle_cells(0, 2, 2, 4), rectangle_cells(2, 4, 0, 4)], 4)


@pytest.fixture(scope="session")
def example():
    return make_rfis()


@pytest.fixture(scope="session")
def example_printed():
    return make_rfis(S_ORIGINAL)


@pytest.fixture(scope="session")
def partition():
    return example_partition()


@pytest.fixture(scope="session")
def zero_s(example):
    return example.with_scaling(np.zeros((5, 5)))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
