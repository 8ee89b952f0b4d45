"""Partitions of the unit square into unions of cells, and uniform sums.

A part ``B_r`` is stored as the set of 1-based cells it contains, so every
compatibility test is set algebra over cell indices.  Part numbers ``r`` are
1-based in reports and in ``UniformSumViolation``; ``TransferMatrix.G`` is a
plain 0-based numpy array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPartition, UniformSumViolation
from .surface import BilinearRfis, eval_field

UNIFORM_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Partition:
    parts: tuple  # tuple of frozensets of (i, j)
    N: int
    M: int

    @property
    def m(self):
        return len(self.parts)

    def part_of(self):
        """Map cell -> 0-based part index."""
        return {c: r for r, cells in enumerate(self.parts) for c in cells}

    def part_array(self):
        """``(N, M)`` int array of 0-based part indices, indexed ``[i-1, j-1]``."""
        out = np.empty((self.N, self.M), dtype=np.int64)
        for r, cells in enumerate(self.parts):
            for i, j in cells:
                out[i - 1, j - 1] = r
        return out


def build_partition(parts, N, M=None) -> Partition:
    """``parts`` is a sequence of iterables of 1-based ``(i, j)`` cells."""
    M = N if M is None else M
    seen = {}
    frozen = []
    for r, cells in enumerate(parts, start=1):
        cs = frozenset((int(i), int(j)) for i, j in cells)
        if not cs:
            raise InvalidPartition(f"part {r} is empty")
        for c in cs:
            if not (1 <= c[0] <= N and 1 <= c[1] <= M):
                raise InvalidPartition(f"part {r} names cell {c} outside 1..{N} x 1..{M}")
            if c in seen:
                raise InvalidPartition(f"cell {c} is in parts {seen[c]} and {r}")
            seen[c] = r
        frozen.append(cs)
    missing = [(i, j) for i in range(1, N + 1) for j in range(1, M + 1) if (i, j) not in seen]
    if missing:
        raise InvalidPartition(f"cells not covered by any part: {missing[:5]}{'...' if len(missing) > 5 else ''}")
    return Partition(tuple(frozen), N, M)


def rectangle_cells(x0, x1, y0, y1):
    """Cells of the node-index rectangle ``[x_x0, x_x1] x [y_y0, y_y1]``."""
    return [(i, j) for i in range(x0 + 1, x1 + 1) for j in range(y0 + 1, y1 + 1)]


def lambda_sets(partition: Partition, maps):
    """``(Lambda_r, Lambda'_t)`` lists, 0-based in r/t, holding 1-based cells."""
    owner = partition.part_of()
    lam = [set(cells) for cells in partition.parts]
    lam_prime = [set() for _ in partition.parts]
    for c in owner:
        targets = {owner[d] for d in maps.cells_in_domain(*c)}
        if len(targets) == 1:
            lam_prime[targets.pop()].add(c)
    return lam, lam_prime


@dataclass
class CompatibilityReport:
    ok: bool
    violations: list = field(default_factory=list)
    intersections: list = field(default_factory=list)  # 1-based (r, t) with Lambda_r & Lambda'_t nonempty


def check_compatible(partition: Partition, maps) -> CompatibilityReport:
    owner = partition.part_of()
    violations = []
    for c in sorted(owner):
        parts = sorted({owner[d] + 1 for d in maps.cells_in_domain(*c)})
        if len(parts) > 1:
            violations.append(f"condition 1: D'{c} meets parts {parts}")
    lam, lam_prime = lambda_sets(partition, maps)
    inter = []
    for r in range(partition.m):
        for t in range(partition.m):
            common = lam[r] & lam_prime[t]
            if not common:
                continue
            inter.append((r + 1, t + 1))
            covered = set()
            for c in common:
                covered.update(maps.cells_in_domain(*c))
            if covered != partition.parts[t]:
                violations.append(
                    f"condition 2: (r,t)=({r + 1},{t + 1}): domains of Lambda_r & Lambda'_t "
                    f"cover {len(covered)} cells, B_t has {len(partition.parts[t])}"
                )
    return CompatibilityReport(not violations, violations, inter)


@dataclass
class SteadyReport:
    ok: bool
    offending: list


def check_steady(s) -> SteadyReport:
    """Cells whose four corner factors do not share a sign (zeros allowed)."""
    s = np.asarray(s, float)
    corners = np.stack([s[:-1, :-1], s[:-1, 1:], s[1:, :-1], s[1:, 1:]])
    bad = ~(np.all(corners >= 0, axis=0) | np.all(corners <= 0, axis=0))
    cells = [(int(i) + 1, int(j) + 1) for i, j in np.argwhere(bad)]
    return SteadyReport(not cells, cells)


@dataclass
class TransferMatrix:
    G: np.ndarray
    # 1-based (r, t) -> list of (alpha, beta) domain corners used for gamma_rt
    domains: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.G.shape[0]


def _corner_image(idx, cell, node):
    """Node index of ``u_cell(x_node)`` where ``node`` is an endpoint of ``I'_cell``."""
    return cell - 1 if idx[cell - 1] == node else cell


def corner_sums(rfis: BilinearRfis, partition: Partition):
    """Every corner sum of ``|S(u_i(.), v_j(.))|`` over ``Lambda_r(alpha, beta)``.

    Returns ``{(r, t): [(alpha, beta, corner, value), ...]}``, corners in the
    order ``(a, b), (a, b+K), (a+K, b), (a+K, b+K)`` of node indices.
    """
    maps, s = rfis.maps, rfis.s
    lam, lam_prime = lambda_sets(partition, maps)
    out = {}
    for r in range(partition.m):
        for t in range(partition.m):
            common = lam[r] & lam_prime[t]
            if not common:
                continue
            rows = []
            for dom in sorted({maps.domain(*c) for c in common}):
                (xl, xh), (yl, yh) = dom
                members = sorted(c for c in lam[r] if maps.domain(*c) == dom)
                for cx in (xl, xh):
                    for cy in (yl, yh):
                        terms = [
                            abs(s[_corner_image(maps.p, i, cx), _corner_image(maps.q, j, cy)]) for i, j in members
                        ]
                        rows.append((xl, yl, (cx, cy), math.fsum(terms)))
            out[(r + 1, t + 1)] = rows
    return out


def compute_uniform_sums(rfis: BilinearRfis, partition: Partition, tol: float = UNIFORM_SUM_TOL) -> TransferMatrix:
    """Extract ``G = (gamma_rt)``; raises ``UniformSumViolation`` if the sums disagree."""
    sums = corner_sums(rfis, partition)
    G = np.zeros((partition.m, partition.m))
    domains = {}
    violations = []
    for (r, t), rows in sorted(sums.items()):
        expected = rows[0][3]
        for alpha, beta, corner, value in rows:
            if abs(value - expected) > tol:
                violations.append(dict(r=r, t=t, alpha=alpha, beta=beta, corner=corner, value=value, expected=expected))
        G[r - 1, t - 1] = expected
        domains[(r, t)] = sorted({(a, b) for a, b, _, _ in rows})
    if violations:
        raise UniformSumViolation(violations)
    G.setflags(write=False)
    return TransferMatrix(G, domains)


@dataclass
class InteriorReport:
    max_deviation: float
    worst: tuple | None
    points_checked: int

    def ok(self, tol=1e-12):
        return self.max_deviation <= tol


def verify_interior_uniformity(rfis: BilinearRfis, partition: Partition, G, samples: int = 9) -> InteriorReport:
    """Check ``sum |S(u_i(x), v_j(y))| == gamma_rt`` at interior points of each domain."""
    G = G.G if isinstance(G, TransferMatrix) else np.asarray(G, float)
    maps, X, Y = rfis.maps, rfis.data.x, rfis.data.y
    lam, lam_prime = lambda_sets(partition, maps)
    frac = (np.arange(samples) + 1) / (samples + 1)
    worst, where, count = 0.0, None, 0
    for r in range(partition.m):
        for t in range(partition.m):
            common = lam[r] & lam_prime[t]
            if not common:
                continue
            for dom in sorted({maps.domain(*c) for c in common}):
                (xl, xh), (yl, yh) = dom
                px = X[xl] + frac * (X[xh] - X[xl])
                py = Y[yl] + frac * (Y[yh] - Y[yl])
                PX, PY = np.meshgrid(px, py, indexing="ij")
                total = np.zeros_like(PX)
                for i, j in sorted(c for c in lam[r] if maps.domain(*c) == dom):
                    ux = np.clip(maps.u(i, PX), 0.0, 1.0)
                    vy = np.clip(maps.v(j, PY), 0.0, 1.0)
                    total += np.abs(eval_field(rfis, "S", ux, vy))
                dev = float(np.abs(total - G[r, t]).max())
                count += total.size
                if dev > worst:
                    worst, where = dev, (r + 1, t + 1, xl, yl)
    return InteriorReport(worst, where, count)
