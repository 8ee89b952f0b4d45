"""Deterministic iteration of the recurrent IFS on voxelized point clouds.

Every step replaces the cloud by the union of ``W_ij`` applied to the points
lying in ``D'_ij``, keeps the images that land on the level-``L`` node lattice
and retains one point per voxel of side ``eps = 1 / (K**L N)``.  The lattice
restriction matters: close to a corner where ``|s|`` is near 1 the surface is
almost discontinuous, so the voxels met by the true graph cannot be resolved
by any finite sampling, while the graph values on the lattice are invariant
under the restricted map and are exactly what ``sample_surface`` produces.

Each point carries the exact value of ``f`` at its ``(x, y)`` node, pushed
through the same ``F_ij``, so ``sup |f(x, y) - z|`` is tracked alongside the
Hausdorff distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyStartSet
from .surface import DOMAIN_SLACK, BilinearRfis, _require_homogeneous, sample_surface

# images farther than this from a lattice node (in node units) are dropped
LATTICE_TOL = 1e-9


@dataclass
class AttractorReport:
    voxel_level: int
    eps: float
    distances: list  # cellwise Hausdorff distance after each step, index 0 is the start set
    deltas: list  # sup |f - z| after each step
    sizes: list  # points kept after each step

    @property
    def voxel_diagonal(self):
        return math.sqrt(3.0) * self.eps

    def as_dict(self):
        return {
            "voxel_level": self.voxel_level,
            "eps": self.eps,
            "voxel_diagonal": self.voxel_diagonal,
            "distances": self.distances,
            "deltas": self.deltas,
            "sizes": self.sizes,
            "final_in_diagonals": self.distances[-1] / self.voxel_diagonal,
        }


def _lattice_points(values):
    side = values.shape[0] - 1
    K, L = np.meshgrid(np.arange(side + 1), np.arange(side + 1), indexing="ij")
    return np.column_stack([K.ravel(), L.ravel()]), values.ravel().copy()


def start_points(rfis: BilinearRfis, graph, start="corners", z_lift: float = 0.0):
    """Initial lattice nodes, heights and companion ``f`` values.

    ``start`` is ``"corners"`` (cell corners at height ``z_lift``), ``"graph"``
    (the exact lattice samples) or an ``(n, 3)`` array of points on lattice nodes.
    """
    side = graph.side
    if isinstance(start, str):
        if start == "corners":
            step = side // rfis.N
            nodes = np.array([(a * step, b * step) for a in range(rfis.N + 1) for b in range(rfis.M + 1)])
            return nodes, np.full(len(nodes), float(z_lift)), graph.values[nodes[:, 0], nodes[:, 1]].copy()
        if start == "graph":
            nodes, f = _lattice_points(graph.values)
            return nodes, f.copy(), f
        raise ValueError(f"unknown start {start!r}; expected 'corners' or 'graph'")
    pts = np.asarray(start, float).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise EmptyStartSet("start set is empty")
    scaled = pts[:, :2] * side
    nodes = np.rint(scaled).astype(np.int64)
    if np.any(np.abs(scaled - nodes) > LATTICE_TOL) or np.any((nodes < 0) | (nodes > side)):
        raise ValueError("explicit start points must sit on lattice nodes in [0,1]^2")
    return nodes, pts[:, 2].copy(), graph.values[nodes[:, 0], nodes[:, 1]].copy()


def _step(rfis, nodes, z, fz, side):
    maps, X, Y, s, h = rfis.maps, rfis.data.x, rfis.data.y, rfis.s, rfis.data.z
    x, y = nodes[:, 0] / side, nodes[:, 1] / side
    out_n, out_z, out_f = [], [], []
    for i, j in rfis.data.cells:
        (xl, xh), (yl, yh) = maps.domain(i, j)
        sel = (x >= X[xl] - DOMAIN_SLACK) & (x <= X[xh] + DOMAIN_SLACK) & (y >= Y[yl] - DOMAIN_SLACK) & (y <= Y[yh] + DOMAIN_SLACK)
        if not sel.any():
            continue
        ux = np.clip(maps.u(i, x[sel]), X[i - 1], X[i]) * side
        vy = np.clip(maps.v(j, y[sel]), Y[j - 1], Y[j]) * side
        kx, ky = np.rint(ux), np.rint(vy)
        keep = (np.abs(ux - kx) <= LATTICE_TOL) & (np.abs(vy - ky) <= LATTICE_TOL)
        if not keep.any():
            continue
        xs, ys = x[sel][keep], y[sel][keep]
        kx, ky = kx[keep].astype(np.int64), ky[keep].astype(np.int64)
        # S and h restricted to D_ij are bilinear in the local coordinates
        t = (kx / side - X[i - 1]) / (X[i] - X[i - 1])
        u = (ky / side - Y[j - 1]) / (Y[j] - Y[j - 1])
        w = ((1 - t) * (1 - u), t * (1 - u), (1 - t) * u, t * u)
        corner = ((i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j))
        S = sum(wk * s[c] for wk, c in zip(w, corner))
        hv = sum(wk * h[c] for wk, c in zip(w, corner))
        x0, x1 = X[maps.p[i - 1]], X[maps.p[i]]
        y0, y1 = Y[maps.q[j - 1]], Y[maps.q[j]]
        lam, mu = (x1 - xs) / (x1 - x0), (y1 - ys) / (y1 - y0)
        c = rfis.g_corners[i - 1, j - 1]
        g = lam * mu * c[0, 0] + (1 - lam) * mu * c[1, 0] + lam * (1 - mu) * c[0, 1] + (1 - lam) * (1 - mu) * c[1, 1]
        out_n.append(np.column_stack([kx, ky]))
        out_z.append(S * (z[sel][keep] - g) + hv)
        out_f.append(S * (fz[sel][keep] - g) + hv)
    if not out_n:
        raise EmptyStartSet("no image of the cloud lands on the lattice")
    return np.concatenate(out_n), np.concatenate(out_z), np.concatenate(out_f)


def voxel_keys(nodes, z, eps):
    """``(kx, ky, floor(z / eps))`` rows; lattice nodes index the horizontal voxels."""
    return np.column_stack([nodes, np.floor(z / eps).astype(np.int64)])


def _dedupe(nodes, z, fz, eps):
    keys = voxel_keys(nodes, z, eps)
    _, first = np.unique(keys, axis=0, return_index=True)
    first.sort()
    return nodes[first], z[first], fz[first]


def hausdorff(a, b, tree_b=None):
    """Euclidean Hausdorff distance between two finite point sets."""
    tree_b = cKDTree(b) if tree_b is None else tree_b
    return float(max(tree_b.query(a)[0].max(), cKDTree(a).query(b)[0].max()))


def _cell_masks(nodes, rfis, per_cell):
    """Membership of lattice nodes in each closed cell ``D_ij``."""
    for i, j in rfis.data.cells:
        yield (i, j), (
            (nodes[:, 0] >= (i - 1) * per_cell)
            & (nodes[:, 0] <= i * per_cell)
            & (nodes[:, 1] >= (j - 1) * per_cell)
            & (nodes[:, 1] <= j * per_cell)
        )


class _CellwiseReference:
    """Graph samples on the lattice split by closed cells, one KD-tree per cell."""

    def __init__(self, rfis, graph):
        self.rfis, self.side = rfis, graph.side
        self.per_cell = graph.side // rfis.N
        nodes, f = _lattice_points(graph.values)
        pts = np.column_stack([nodes / self.side, f])
        self.parts = {}
        for c, mask in _cell_masks(nodes, rfis, self.per_cell):
            self.parts[c] = (pts[mask], cKDTree(pts[mask]))

    def distance(self, nodes, z):
        """``max_ij d_H(A_ij, graph over D_ij)``; an empty ``A_ij`` counts as infinitely far."""
        pts = np.column_stack([nodes / self.side, z])
        worst = 0.0
        for c, mask in _cell_masks(nodes, self.rfis, self.per_cell):
            if not mask.any():
                return math.inf
            ref, tree = self.parts[c]
            worst = max(worst, hausdorff(pts[mask], ref, tree))
        return worst


def attractor_convergence_check(
    rfis: BilinearRfis, voxel_level: int, steps: int, start="corners", z_lift: float = 0.0
) -> AttractorReport:
    """Iterate the set map ``steps`` times and track the distance to the voxelized graph.

    Distances are cellwise: the largest Hausdorff distance between the part of
    the cloud over a closed cell and the voxelized graph over the same cell.
    """
    _require_homogeneous(rfis)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    graph = sample_surface(rfis, voxel_level)
    side = graph.side
    eps = 1.0 / side
    nodes, z, fz = start_points(rfis, graph, start, z_lift)
    if nodes.shape[0] == 0:
        raise EmptyStartSet("start set is empty")
    ref = _CellwiseReference(rfis, graph)

    def record(nodes, z, fz):
        distances.append(ref.distance(nodes, z))
        deltas.append(float(np.abs(fz - z).max()))
        sizes.append(int(nodes.shape[0]))

    distances, deltas, sizes = [], [], []
    nodes, z, fz = _dedupe(nodes, z, fz, eps)
    record(nodes, z, fz)
    for _ in range(steps):
        nodes, z, fz = _dedupe(*_step(rfis, nodes, z, fz, side), eps)
        record(nodes, z, fz)
    return AttractorReport(voxel_level, eps, distances, deltas, sizes)
