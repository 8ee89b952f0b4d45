"""Interpolation grid, domain-address maps and the homogeneity conditions.

Cells are addressed 1-based as ``(i, j)`` with ``D_ij = [x_{i-1}, x_i] x
[y_{j-1}, y_j]``; nodes are addressed 0-based.  Address sequences are kept as
node indices so that every domain ``D'_ij`` is an integer index rectangle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    ExpansionViolation,
    IndexOutOfRange,
    NonFiniteHeight,
    NonMonotoneNodes,
    ShapeMismatch,
)

# Nodes within this distance of i/N are snapped to the exact rational.
UNIFORM_SNAP_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _normalize(nodes, name):
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 3:
        raise ShapeMismatch(f"{name} must be a 1-d sequence of at least 3 nodes")
    if not np.all(np.isfinite(nodes)):
        raise NonMonotoneNodes(f"{name} contains non-finite coordinates")
    steps = np.diff(nodes)
    if np.any(steps <= 0):
        bad = int(np.argmax(steps <= 0)) + 1
        raise NonMonotoneNodes(
            f"{name} is not strictly increasing at index {bad}: "
            f"{nodes[bad - 1]!r} >= {nodes[bad]!r}"
        )
    n = nodes.size - 1
    unit = (nodes - nodes[0]) / (nodes[-1] - nodes[0])
    exact = np.arange(n + 1) / n
    if np.all(np.abs(unit - exact) <= UNIFORM_SNAP_TOL):
        return exact, True
    unit[0], unit[-1] = 0.0, 1.0
    return unit, False


@dataclass(frozen=True, eq=False)
class InterpolationData:
    """Nodes ``x_0..x_N``, ``y_0..y_M`` (normalized to [0, 1]) and heights ``z``.

    ``z[i, j]`` is the height over ``(x_i, y_j)``.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    uniform: bool = False

    @property
    def N(self) -> int:
        return self.x.size - 1

    @property
    def M(self) -> int:
        return self.y.size - 1

    @property
    def cells(self):
        return [(i, j) for i in range(1, self.N + 1) for j in range(1, self.M + 1)]


def build_data(x: Sequence[float], y: Sequence[float], z) -> InterpolationData:
    """Validate and normalize a data set so that ``I = J = [0, 1]``."""
    xs, ux = _normalize(x, "x")
    ys, uy = _normalize(y, "y")
    z = np.asarray(z, dtype=float)
    if z.shape != (xs.size, ys.size):
        raise ShapeMismatch(f"z has shape {z.shape}, expected {(xs.size, ys.size)}")
    if not np.all(np.isfinite(z)):
        i, j = np.argwhere(~np.isfinite(z))[0]
        raise NonFiniteHeight(f"z[{i}][{j}] is not finite")
    return InterpolationData(_frozen(xs), _frozen(ys), _frozen(z), uniform=ux and uy)


def uniform_data(z) -> InterpolationData:
    """Data on the uniform grid ``x_i = i/N``, ``y_j = j/M``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise ShapeMismatch("z must be a matrix")
    return build_data(np.arange(z.shape[0]), np.arange(z.shape[1]), z)


@dataclass(frozen=True, eq=False)
class AddressMaps:
    """Affine contractions ``u_i(x) = a_i x + b_i`` and ``v_j(y) = c_j y + d_j``.

    Coefficient arrays are indexed by ``i - 1`` (resp. ``j - 1``).  ``zprime``
    is the table ``z'_ij = z[p_i, q_j]``.
    """

    data: InterpolationData
    p: tuple
    q: tuple
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    zprime: np.ndarray

    @property
    def N(self):
        return self.data.N

    @property
    def M(self):
        return self.data.M

    def x_domain(self, i):
        """Node index range ``(lo, hi)`` of ``I'_i``."""
        return min(self.p[i - 1], self.p[i]), max(self.p[i - 1], self.p[i])

    def y_domain(self, j):
        return min(self.q[j - 1], self.q[j]), max(self.q[j - 1], self.q[j])

    def domain(self, i, j):
        """``D'_ij`` as ``((xlo, xhi), (ylo, yhi))`` node index ranges."""
        return self.x_domain(i), self.y_domain(j)

    def x_sign(self, i):
        return 1 if self.p[i] > self.p[i - 1] else -1

    def y_sign(self, j):
        return 1 if self.q[j] > self.q[j - 1] else -1

    # evaluated as endpoint-exact lerps so that u_i(x'_i) = u_{i+1}(x'_i) = x_i holds bit for bit
    def u(self, i, x):
        X = self.data.x
        return _lerp(X[self.p[i - 1]], X[self.p[i]], X[i - 1], X[i], x)

    def v(self, j, y):
        Y = self.data.y
        return _lerp(Y[self.q[j - 1]], Y[self.q[j]], Y[j - 1], Y[j], y)

    def u_inv(self, i, x):
        X = self.data.x
        return _lerp(X[i - 1], X[i], X[self.p[i - 1]], X[self.p[i]], x)

    def v_inv(self, j, y):
        Y = self.data.y
        return _lerp(Y[j - 1], Y[j], Y[self.q[j - 1]], Y[self.q[j]], y)

    def cells_in_domain(self, i, j):
        (xl, xh), (yl, yh) = self.domain(i, j)
        return [(k, l) for k in range(xl + 1, xh + 1) for l in range(yl + 1, yh + 1)]


def _lerp(x0, x1, y0, y1, x):
    """Affine map with ``x0 -> y0`` and ``x1 -> y1`` reproduced exactly."""
    t = (np.asarray(x, float) - x0) / (x1 - x0)
    out = np.where(t <= 0.5, y0 + t * (y1 - y0), y1 - (1.0 - t) * (y1 - y0))
    return float(out) if out.ndim == 0 else out


def _affine(nodes, idx, uniform):
    n = len(idx) - 1
    slope = np.empty(n)
    shift = np.empty(n)
    for i in range(1, n + 1):
        p0, p1 = idx[i - 1], idx[i]
        if uniform:
            # x_i = i/n exactly, so a_i = 1/(p1 - p0) and b_i is a single rational
            a = Fraction(1, p1 - p0)
            b = Fraction(i - 1, n) - a * Fraction(p0, n)
            slope[i - 1], shift[i - 1] = float(a), float(b)
        else:
            a = (nodes[i] - nodes[i - 1]) / (nodes[p1] - nodes[p0])
            slope[i - 1], shift[i - 1] = a, nodes[i - 1] - a * nodes[p0]
    return _frozen(slope), _frozen(shift)


def _check_address(idx, nodes, name):
    n = nodes.size - 1
    idx = [int(v) for v in idx]
    if len(idx) != n + 1:
        raise ShapeMismatch(f"{name} has length {len(idx)}, expected {n + 1}")
    for k, v in enumerate(idx):
        if not 0 <= v <= n:
            raise IndexOutOfRange(f"{name}[{k}] = {v} is outside 0..{n}")
    for i in range(1, n + 1):
        span = abs(nodes[idx[i]] - nodes[idx[i - 1]])
        if not span > nodes[i] - nodes[i - 1]:
            raise ExpansionViolation(
                f"{name}: |x'_{i} - x'_{i - 1}| = {span!r} does not exceed "
                f"the cell width {nodes[i] - nodes[i - 1]!r} (cell {i})"
            )
    return tuple(idx)


def build_address_maps(data: InterpolationData, xprime_idx, yprime_idx) -> AddressMaps:
    p = _check_address(xprime_idx, data.x, "xprime_idx")
    q = _check_address(yprime_idx, data.y, "yprime_idx")
    a, b = _affine(data.x, p, data.uniform)
    c, d = _affine(data.y, q, data.uniform)
    zprime = data.z[np.ix_(p, q)]
    return AddressMaps(data, p, q, a, b, c, d, _frozen(zprime))


@dataclass
class HomogeneityCertificate:
    K: int
    uniform_spacing: bool
    ratio: bool
    domain_overlap: bool
    failures: list = field(default_factory=list)
    domains: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.uniform_spacing and self.ratio and self.domain_overlap


def _interiors_meet(r1, r2):
    (ax, ay), (bx, by) = r1, r2
    return max(ax[0], bx[0]) < min(ax[1], bx[1]) and max(ay[0], by[0]) < min(ay[1], by[1])


def check_homogeneity(data: InterpolationData, maps: AddressMaps, K: int) -> HomogeneityCertificate:
    """Check uniform spacing, the refinement ratio ``K`` and domain overlaps.

    Never raises for a failed condition; the returned certificate lists each
    failure with its location.
    """
    failures = []
    N, M = data.N, data.M
    uniform = N == M
    if not uniform:
        failures.append(f"uniform spacing: N={N} differs from M={M}")
    for name, nodes in (("x", data.x), ("y", data.y)):
        n = nodes.size - 1
        bad = np.flatnonzero(np.abs(nodes - np.arange(n + 1) / n) > UNIFORM_SNAP_TOL)
        if bad.size:
            uniform = False
            failures.append(f"uniform spacing: {name}_{bad[0]} = {nodes[bad[0]]!r} != {bad[0]}/{n}")

    ratio = isinstance(K, (int, np.integer)) and K >= 2
    if not ratio:
        failures.append(f"ratio: K={K!r} is not an integer >= 2")
    else:
        for name, idx, nodes in (("x", maps.p, data.x), ("y", maps.q, data.y)):
            for i in range(1, len(idx)):
                if uniform:
                    ok = abs(idx[i] - idx[i - 1]) == K
                else:
                    width = nodes[i] - nodes[i - 1]
                    ok = abs(abs(nodes[idx[i]] - nodes[idx[i - 1]]) / width - K) <= 1e-12
                if not ok:
                    ratio = False
                    failures.append(f"ratio: |{name}'-interval {i}| / |cell {i}| != {K}")

    rects = sorted({maps.domain(i, j) for i, j in data.cells})
    overlap = True
    for a_ in range(len(rects)):
        for b_ in range(a_ + 1, len(rects)):
            if _interiors_meet(rects[a_], rects[b_]):
                overlap = False
                failures.append(f"domain overlap: {rects[a_]} and {rects[b_]} overlap without being equal")
    return HomogeneityCertificate(int(K) if ratio else K, uniform, ratio, overlap, failures, rects)


def cell_dependency_edges(maps: AddressMaps):
    """Edges ``(i, j) -> (k, l)`` for every cell ``D_kl`` inside ``D'_ij``."""
    edges = []
    for i, j in maps.data.cells:
        for k, l in maps.cells_in_domain(i, j):
            edges.append(((i, j), (k, l)))
    return edges
