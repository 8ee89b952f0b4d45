"""Box dimension of a bilinear RFIS from its transfer matrix.

Indices of parts are 0-based here; ``ComponentReport.as_dict`` converts to
the 1-based labels used in printed reports.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _scc

from .errors import (
    CycleInPositionRecursion,
    HypothesisViolation,
    NoConvergence,
    NotNonnegative,
    UniformSumViolation,
)
from .grid import cell_dependency_edges
from .partition import Partition, check_compatible, check_steady, compute_uniform_sums
from .surface import BilinearRfis

COLLINEAR_RTOL = 1e-12
RHO_RTOL = 1e-12
RHO_MAX_ITER = 1_000_000
K_SENSITIVITY = 1e-9


def _edges(G):
    # path step t -> r exists iff gamma_{r,t} > 0
    return np.asarray(G).T > 0


def connected_components(G):
    """Strongly connected classes of the gamma-graph that contain a cycle."""
    G = np.asarray(G, float)
    adj = _edges(G)
    n, labels = _scc(csr_matrix(adj.astype(np.int8)), directed=True, connection="strong")
    comps = []
    for lab in range(n):
        members = np.flatnonzero(labels == lab)
        if members.size > 1 or adj[members[0], members[0]]:
            comps.append(frozenset(int(v) for v in members))
    return sorted(comps, key=min)


def reachability(G):
    """``R[t, r]`` is True when a path of length >= 1 leads from t to r."""
    adj = _edges(G)
    m = adj.shape[0]
    R = np.zeros_like(adj)
    for t in range(m):
        seen = np.zeros(m, bool)
        queue = deque(np.flatnonzero(adj[t]))
        while queue:
            v = queue.popleft()
            if seen[v]:
                continue
            seen[v] = True
            queue.extend(np.flatnonzero(adj[v] & ~seen))
        R[t] = seen
    return R


def positions(G):
    """Position ``P(r)`` of every part (0-based list)."""
    R = reachability(G)
    m = R.shape[0]
    conn = R & R.T
    upstream = [[t for t in range(m) if R[t, r] and not conn[t, r]] for r in range(m)]
    memo: dict[int, int] = {}
    active: set[int] = set()

    def pos(r):
        if r in memo:
            return memo[r]
        if r in active:
            raise CycleInPositionRecursion(f"part {r + 1} is upstream of itself")
        active.add(r)
        memo[r] = 1 + max((pos(t) for t in upstream[r]), default=0)
        active.discard(r)
        return memo[r]

    return [pos(r) for r in range(m)]


def spectral_radius(A, rtol: float = RHO_RTOL, max_iter: int = RHO_MAX_ITER) -> float:
    """Perron root of a nonnegative irreducible matrix.

    Power iteration on ``A + I`` (the shift makes the matrix primitive), stopped
    when the Collatz-Wielandt bounds ``min (Bv)_i/v_i <= rho(B) <= max (Bv)_i/v_i``
    agree to ``rtol``.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("spectral_radius needs a square matrix")
    if np.any(A < 0) or not np.all(np.isfinite(A)):
        raise NotNonnegative("matrix has negative or non-finite entries")
    B = A + np.eye(A.shape[0])
    v = np.ones(A.shape[0])
    lo = hi = 1.0
    for _ in range(max_iter):
        w = B @ v
        pos = v > 0
        ratios = w[pos] / v[pos]
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= rtol * lo:
            return float(0.5 * (lo + hi) - 1.0)
        v = w / w.max()
    raise NoConvergence(f"power iteration did not converge in {max_iter} steps (bounds {lo - 1}, {hi - 1})")


# -- degeneracy ------------------------------------------------------------


def _collinear_lines(z, xs, ys, xr, yr, tol):
    """Every grid line of ``z`` inside the node rectangle is affine (consecutive triples)."""
    (x0, x1), (y0, y1) = xr, yr
    block = z[x0 : x1 + 1, y0 : y1 + 1]
    for arr, nodes in ((block, xs[x0 : x1 + 1]), (block.T, ys[y0 : y1 + 1])):
        if arr.shape[0] < 3:
            continue
        lam = (nodes[2:] - nodes[1:-1]) / (nodes[2:] - nodes[:-2])
        d = arr[1:-1] - (lam[:, None] * arr[:-2] + (1 - lam[:, None]) * arr[2:])
        if np.any(np.abs(d) > tol):
            return False
    return True


def locally_degenerate(rfis: BilinearRfis):
    """Cells where ``S`` vanishes or the heights on ``D'`` are bilinear."""
    s, z = rfis.s, rfis.data.z
    tol = COLLINEAR_RTOL * max(1.0, float(np.abs(z).max()))
    out = {}
    for i, j in rfis.data.cells:
        zero = s[i - 1, j - 1] == 0 and s[i - 1, j] == 0 and s[i, j - 1] == 0 and s[i, j] == 0
        out[(i, j)] = zero or _collinear_lines(z, rfis.data.x, rfis.data.y, *rfis.maps.domain(i, j), tol)
    return out


def degenerate_cells(rfis: BilinearRfis):
    """``{(i, j): bool}``; a cell is degenerate when its whole ancestor set is locally degenerate."""
    local = locally_degenerate(rfis)
    parents = {c: [] for c in local}
    for a, b in cell_dependency_edges(rfis.maps):
        parents[b].append(a)
    # anything that can reach a locally non-degenerate cell is non-degenerate
    bad = {c for c, ok in local.items() if not ok}
    queue = deque(bad)
    while queue:
        c = queue.popleft()
        for p in parents[c]:
            if p not in bad:
                bad.add(p)
                queue.append(p)
    return {c: c not in bad for c in local}


def component_degeneracy(components, partition: Partition, degenerate):
    """Per-part and per-component degeneracy flags (0-based part indices)."""
    parts = [all(degenerate[c] for c in cells) for cells in partition.parts]
    comps = [all(parts[r] for r in V) for V in components]
    return parts, comps


# -- the dimension formula --------------------------------------------------


@dataclass
class ComponentInfo:
    members: tuple  # 0-based part indices, sorted
    submatrix: np.ndarray
    rho: float
    d: float
    degenerate: bool


@dataclass
class ComponentReport:
    G: np.ndarray
    K: int
    components: list
    positions: list
    part_degenerate: list
    degenerate_cells: dict
    dimension: float
    d_star: float
    irreducible: bool
    corollary: str | None = None
    warnings: list = field(default_factory=list)

    def as_dict(self):
        return {
            "dimension": self.dimension,
            "d_star": self.d_star,
            "K": self.K,
            "G": self.G.tolist(),
            "irreducible": self.irreducible,
            "corollary": self.corollary,
            "components": [
                {
                    "parts": [r + 1 for r in c.members],
                    "submatrix": c.submatrix.tolist(),
                    "rho": c.rho,
                    "d": c.d,
                    "degenerate": c.degenerate,
                }
                for c in self.components
            ],
            "positions": {str(r + 1): p for r, p in enumerate(self.positions)},
            "degenerate_parts": [r + 1 for r, d in enumerate(self.part_degenerate) if d],
            "degenerate_cells": sorted([list(c) for c, d in self.degenerate_cells.items() if d]),
            "warnings": self.warnings,
        }


def check_hypotheses(rfis: BilinearRfis, partition: Partition):
    """Return the transfer matrix, or raise ``HypothesisViolation`` naming the failed assumption."""
    if not rfis.homogeneous:
        detail = "; ".join(rfis.certificate.failures) if rfis.certificate else "no refinement ratio K"
        raise HypothesisViolation("homogeneity", detail)
    steady = check_steady(rfis.s)
    if not steady.ok:
        raise HypothesisViolation("steady", f"mixed-sign corner factors in cells {steady.offending}")
    comp = check_compatible(partition, rfis.maps)
    if not comp.ok:
        raise HypothesisViolation("compatible partition", "; ".join(comp.violations))
    try:
        return compute_uniform_sums(rfis, partition)
    except UniformSumViolation as exc:
        raise HypothesisViolation("uniform sums", str(exc)) from exc


def theoretical_box_dimension(rfis: BilinearRfis, partition: Partition) -> ComponentReport:
    """``1 + d*`` with ``d* = max(1, log rho(G|V) / log K)`` over non-degenerate components ``V``."""
    G = check_hypotheses(rfis, partition).G
    K = rfis.K
    comps = connected_components(G)
    degen = degenerate_cells(rfis)
    part_deg, comp_deg = component_degeneracy(comps, partition, degen)
    infos = []
    warnings = []
    for V, deg in zip(comps, comp_deg):
        idx = sorted(V)
        sub = G[np.ix_(idx, idx)]
        rho = spectral_radius(sub)
        d = math.log(rho) / math.log(K) if rho > 0 else -math.inf
        infos.append(ComponentInfo(tuple(idx), sub, rho, d, deg))
        if abs(rho - K) <= K_SENSITIVITY:
            warnings.append(f"component {[r + 1 for r in idx]}: rho = {rho!r} is within {K_SENSITIVITY} of K = {K}")
    d_star = max([c.d for c in infos if not c.degenerate] + [1.0])
    irreducible = len(comps) == 1 and len(comps[0]) == G.shape[0]
    corollary = None
    if irreducible:
        c = infos[0]
        if not c.degenerate and c.rho > K:
            corollary = "irreducible, non-degenerate, rho(G) > K: dim = 1 + log rho(G) / log K"
        else:
            corollary = "irreducible, degenerate or rho(G) <= K: dim = 2"
    return ComponentReport(
        G=np.array(G),
        K=K,
        components=infos,
        positions=positions(G),
        part_degenerate=part_deg,
        degenerate_cells=degen,
        dimension=1.0 + d_star,
        d_star=d_star,
        irreducible=irreducible,
        corollary=corollary,
        warnings=warnings,
    )
