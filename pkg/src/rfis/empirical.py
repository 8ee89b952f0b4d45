"""Oscillation sums, box counts and empirical dimension estimates.

The oscillation of ``f`` on a level-``n`` cell is taken as max - min over the
``(K+1)**2`` level-``(n+1)`` nodes inside the cell.  The finest level needed
is produced in row strips from the level below so that a level-11 grid never
has to be held in memory at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DegenerateRegression, LevelMismatch
from .partition import Partition
from .surface import BilinearRfis, SampledSurface, _require_homogeneous, refine, refine_block

STRIP_ELEMENTS = 1 << 21
MIN_REGRESSION_LEVEL = 4


def _block_extrema(V, K):
    """Per-cell max and min over the (K+1)x(K+1) node windows of a fine grid."""
    c_r = (V.shape[0] - 1) // K
    c_c = (V.shape[1] - 1) // K
    rmax = np.maximum.reduce([V[d : d + K * (c_r - 1) + 1 : K] for d in range(K + 1)])
    rmin = np.minimum.reduce([V[d : d + K * (c_r - 1) + 1 : K] for d in range(K + 1)])
    cmax = np.maximum.reduce([rmax[:, d : d + K * (c_c - 1) + 1 : K] for d in range(K + 1)])
    cmin = np.minimum.reduce([rmin[:, d : d + K * (c_c - 1) + 1 : K] for d in range(K + 1)])
    return cmax, cmin


@dataclass
class LevelStats:
    level: int
    side: int
    total: float
    per_part: np.ndarray
    box_count: int

    @property
    def eps(self):
        return 1.0 / self.side


def _accumulate(cmax, cmin, side, part_rows, part_cols, part_array, m):
    osc = cmax - cmin
    ids = part_array[np.ix_(part_rows, part_cols)]
    per_part = np.bincount(ids.ravel(), weights=osc.ravel(), minlength=m)
    boxes = int((np.floor(cmax * side) - np.floor(cmin * side) + 1).astype(np.int64).sum())
    return float(osc.sum()), per_part, boxes


def _part_lookup(rfis, partition, n):
    side = rfis.K**n * rfis.N
    coarse = (np.arange(side) // rfis.K**n).astype(np.int64)
    if partition is None:
        return coarse, coarse, np.zeros((rfis.N, rfis.N), dtype=np.int64), 1
    return coarse, coarse, partition.part_array(), partition.m


def level_stats(rfis: BilinearRfis, surface: SampledSurface, n: int, partition: Partition | None = None) -> LevelStats:
    """Oscillation and box-count statistics of level ``n`` from a finer sampled surface."""
    if surface.level < n + 1:
        raise LevelMismatch(f"level-{n} statistics need samples at level >= {n + 1}, got {surface.level}")
    step = rfis.K ** (surface.level - n - 1)
    V = surface.values[::step, ::step]
    side = rfis.K**n * rfis.N
    cmax, cmin = _block_extrema(V, rfis.K)
    rows, cols, parts, m = _part_lookup(rfis, partition, n)
    total, per_part, boxes = _accumulate(cmax, cmin, side, rows, cols, parts, m)
    return LevelStats(n, side, total, per_part, boxes)


def streamed_level_stats(rfis: BilinearRfis, coarse: SampledSurface, partition: Partition | None = None) -> LevelStats:
    """Statistics of level ``coarse.level`` computed from strips of the next level."""
    K, n = rfis.K, coarse.level
    side = K**n * rfis.N
    fine_cols = np.arange(K * side + 1)
    rows_per_strip = max(1, STRIP_ELEMENTS // (K * fine_cols.size))
    rows, cols, parts, m = _part_lookup(rfis, partition, n)
    total, per_part, boxes = 0.0, np.zeros(m), 0
    for c0 in range(0, side, rows_per_strip):
        c1 = min(side, c0 + rows_per_strip)
        V = refine_block(rfis, coarse.values, n + 1, np.arange(K * c0, K * c1 + 1), fine_cols)
        cmax, cmin = _block_extrema(V, K)
        t, pp, b = _accumulate(cmax, cmin, side, rows[c0:c1], cols, parts, m)
        total += t
        per_part += pp
        boxes += b
    return LevelStats(n, side, total, per_part, boxes)


@dataclass
class OscillationProfile:
    K: int
    N: int
    levels: list
    total: list  # O(f, n)
    per_part: np.ndarray  # O(f, n, B_r), shape (len(levels), m)
    box_counts: list

    @property
    def eps(self):
        return [1.0 / (self.K**n * self.N) for n in self.levels]

    def at(self, n):
        return self.levels.index(n)


def oscillation_profile(rfis: BilinearRfis, levels, partition: Partition | None = None) -> OscillationProfile:
    """Oscillation sums (total and per part) and box counts for each requested level."""
    _require_homogeneous(rfis)
    levels = sorted(set(int(n) for n in levels))
    if not levels or levels[0] < 0:
        raise LevelMismatch(f"invalid level list {levels}")
    top = levels[-1]
    want = set(levels)
    found = {}
    surf = SampledSurface(0, rfis.K, rfis.N, rfis.data.z)
    for n in range(top + 1):
        if n == top:
            found[n] = streamed_level_stats(rfis, surf, partition)
            break
        nxt = refine(rfis, surf)
        if n in want:
            found[n] = level_stats(rfis, nxt, n, partition)
        surf = nxt
    stats_ = [found[n] for n in levels]
    return OscillationProfile(
        rfis.K,
        rfis.N,
        levels,
        [s.total for s in stats_],
        np.array([s.per_part for s in stats_]),
        [s.box_count for s in stats_],
    )


def box_count(rfis: BilinearRfis, surface: SampledSurface, n: int) -> int:
    """Number of ``eps_n``-cubes met by the graph, counted column by column."""
    return level_stats(rfis, surface, n).box_count


def lemma_bounds(profile: OscillationProfile):
    """Per level: (floor(O/eps), box count, upper bound side*(O + 2*side))."""
    out = []
    for n, O, cnt in zip(profile.levels, profile.total, profile.box_counts):
        side = profile.K**n * profile.N
        out.append((n, math.floor(O * side), cnt, side * (O + 2 * side)))
    return out


@dataclass
class SlopeReport:
    levels: list
    slope: float
    dimension: float
    ci95: tuple
    box_slope: float
    box_ci95: tuple
    r_squared: float


def _fit(x, y):
    res = stats.linregress(x, y)
    tq = stats.t.ppf(0.975, len(x) - 2)
    return res.slope, (res.slope - tq * res.stderr, res.slope + tq * res.stderr), res.rvalue**2


def empirical_dimension(profile: OscillationProfile, min_level: int = MIN_REGRESSION_LEVEL) -> SlopeReport:
    """Least-squares slope of ``log O(f,n)`` against ``n log K`` (plus the box-count slope)."""
    idx = [k for k, n in enumerate(profile.levels) if n >= min_level]
    if len(idx) < 4:
        raise LevelMismatch(f"need at least 4 levels >= {min_level}, got {[profile.levels[k] for k in idx]}")
    O = np.array([profile.total[k] for k in idx])
    if np.any(O <= 0):
        raise DegenerateRegression("oscillation vanishes at some level; log O(f, n) is undefined")
    n = np.array([profile.levels[k] for k in idx], float)
    logK = math.log(profile.K)
    slope, ci, r2 = _fit(n * logK, np.log(O))
    counts = np.array([profile.box_counts[k] for k in idx], float)
    inv_eps = np.array([profile.K ** profile.levels[k] * profile.N for k in idx], float)
    bslope, bci, _ = _fit(np.log(inv_eps), np.log(counts))
    return SlopeReport(
        [profile.levels[k] for k in idx],
        float(slope),
        1.0 + float(slope),
        (1.0 + float(ci[0]), 1.0 + float(ci[1])),
        float(bslope),
        (float(bci[0]), float(bci[1])),
        float(r2),
    )


@dataclass
class ResidualReport:
    levels: list  # n for which R_n was computed
    residuals: np.ndarray  # shape (len(levels), m)
    bound: float
    trend_ok: list  # per part
    growth: dict = field(default_factory=dict)  # part -> liminf estimate of O/rho^n

    @property
    def ok(self):
        return all(self.trend_ok) and all(v > 0 for v in self.growth.values())


def transfer_inequality_check(profile: OscillationProfile, G, growth_components=(), growth_levels=None) -> ResidualReport:
    """Residuals ``|O(f,n+1,B_r) - sum_t gamma_rt O(f,n,B_t)| / K**n`` and growth checks.

    ``growth_components`` is an iterable of ``(parts, rho)`` with 0-based parts;
    for each part the ratios ``O(f,n,B_r) / rho**n`` are fitted by
    ``a + b (K/rho)**n`` and ``a`` is reported as the liminf estimate.
    """
    G = np.asarray(getattr(G, "G", G), float)
    K = profile.K
    ns, rows = [], []
    for k, n in enumerate(profile.levels):
        if n + 1 in profile.levels:
            nxt = profile.at(n + 1)
            rows.append(np.abs(profile.per_part[nxt] - G @ profile.per_part[k]) / K**n)
            ns.append(n)
    R = np.array(rows)
    bound = float(R.max()) if R.size else 0.0
    trend = []
    if R.shape[0] >= 3:
        third = max(1, R.shape[0] // 3)
        for r in range(R.shape[1]):
            first, last = R[:third, r].mean(), R[-third:, r].mean()
            trend.append(bool(last <= 2 * first + 0.1 * bound))
    else:
        trend = [True] * (R.shape[1] if R.size else 0)

    growth = {}
    lv = profile.levels if growth_levels is None else [n for n in profile.levels if n in growth_levels]
    for parts, rho in growth_components:
        if rho <= K:
            continue
        n = np.array(lv, float)
        basis = np.stack([np.ones_like(n), (K / rho) ** n], axis=1)
        for r in parts:
            ratio = np.array([profile.per_part[profile.at(int(v)), r] for v in lv]) / rho**n
            coef, *_ = np.linalg.lstsq(basis, ratio, rcond=None)
            growth[r] = float(min(coef[0], ratio.min())) if ratio.min() > 0 else 0.0
    return ResidualReport(ns, R, bound, trend, growth)
