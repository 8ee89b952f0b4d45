"""Bilinear recurrent fractal interpolation surfaces.

The surface is the fixed point ``f`` of

    f(u_i(x), v_j(y)) = S(u_i(x), v_j(y)) * (f(x, y) - g_ij(x, y)) + h(u_i(x), v_j(y))

where ``h`` and ``S`` are the piecewise-bilinear interpolants of the heights
and of the vertical scaling factors, and ``g_ij`` is the bilinear function
through the four heights at the corners of ``D'_ij``.

Under the homogeneity conditions the preimage of every level-(n+1) grid node
is a level-n node, so ``f`` can be sampled exactly, level by level, with
integer index arithmetic.  Grid nodes are ``(k, l)`` at level ``n`` with
coordinates ``(k / side, l / side)`` and ``side = K**n * N``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import HomogeneityRequired, OutOfDomain, ScalingFactorTooLarge, ShapeMismatch
from .grid import AddressMaps, HomogeneityCertificate, InterpolationData, check_homogeneity

DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class BilinearRfis:
    data: InterpolationData
    maps: AddressMaps
    s: np.ndarray
    # g_corners[i-1, j-1, a, b] = z'_{i-1+a, j-1+b}, the corner heights of D'_ij
    g_corners: np.ndarray
    alpha_cell: np.ndarray
    K: int | None = None
    certificate: HomogeneityCertificate | None = None

    @property
    def N(self):
        return self.data.N

    @property
    def M(self):
        return self.data.M

    @property
    def alpha(self) -> float:
        return float(self.alpha_cell.max())

    @property
    def homogeneous(self) -> bool:
        return self.certificate is not None and self.certificate.ok

    def with_scaling(self, s) -> "BilinearRfis":
        return build_rfis(self.data, self.maps, s, self.K)


def _infer_K(maps: AddressMaps):
    steps = {abs(maps.p[i] - maps.p[i - 1]) for i in range(1, len(maps.p))}
    steps |= {abs(maps.q[j] - maps.q[j - 1]) for j in range(1, len(maps.q))}
    return steps.pop() if len(steps) == 1 else None


def build_rfis(data: InterpolationData, maps: AddressMaps, s, K: int | None = None) -> BilinearRfis:
    """Assemble the surface; ``K`` is inferred from the address maps if omitted."""
    s = np.array(s, dtype=float)
    if s.shape != data.z.shape:
        raise ShapeMismatch(f"s has shape {s.shape}, expected {data.z.shape}")
    if not np.all(np.isfinite(s)):
        raise ShapeMismatch("s contains non-finite entries")
    if np.any(np.abs(s) >= 1):
        i, j = np.argwhere(np.abs(s) >= 1)[0]
        raise ScalingFactorTooLarge(f"|s[{i}][{j}]| = {abs(s[i, j])!r} is not < 1")
    s.setflags(write=False)

    zp = maps.zprime
    g = np.stack(
        [np.stack([zp[:-1, :-1], zp[:-1, 1:]], axis=-1), np.stack([zp[1:, :-1], zp[1:, 1:]], axis=-1)],
        axis=2,
    )
    g.setflags(write=False)
    a = np.abs(s)
    alpha_cell = np.maximum.reduce([a[:-1, :-1], a[:-1, 1:], a[1:, :-1], a[1:, 1:]])
    alpha_cell.setflags(write=False)

    if K is None and data.uniform:
        K = _infer_K(maps)
    cert = check_homogeneity(data, maps, K) if K is not None else None
    return BilinearRfis(data, maps, s, g, alpha_cell, K, cert)


# -- pointwise evaluation -------------------------------------------------


def _locate(nodes, x):
    """Lowest 1-based cell index whose closed interval holds ``x``."""
    i = np.searchsorted(nodes, x, side="left")
    return np.clip(i, 1, nodes.size - 1)


def _bilinear(tab, nx, ny, x, y):
    i = _locate(nx, x)
    j = _locate(ny, y)
    t = (x - nx[i - 1]) / (nx[i] - nx[i - 1])
    u = (y - ny[j - 1]) / (ny[j] - ny[j - 1])
    return (
        (1 - t) * (1 - u) * tab[i - 1, j - 1]
        + t * (1 - u) * tab[i, j - 1]
        + (1 - t) * u * tab[i - 1, j]
        + t * u * tab[i, j]
    )


def _check_unit(x, y):
    xa, ya = np.asarray(x), np.asarray(y)
    if np.any((xa < -DOMAIN_SLACK) | (xa > 1 + DOMAIN_SLACK) | (ya < -DOMAIN_SLACK) | (ya > 1 + DOMAIN_SLACK)):
        raise OutOfDomain(f"point ({x}, {y}) is outside [0,1]^2")


def eval_field(rfis: BilinearRfis, which: str, x, y):
    """Evaluate ``h`` or ``S`` (piecewise bilinear) at ``(x, y)``; arrays broadcast."""
    _check_unit(x, y)
    if which == "h":
        tab = rfis.data.z
    elif which == "S":
        tab = rfis.s
    else:
        raise ValueError(f"unknown field {which!r}; expected 'h' or 'S'")
    out = _bilinear(tab, rfis.data.x, rfis.data.y, np.asarray(x, float), np.asarray(y, float))
    return float(out) if np.ndim(out) == 0 else out


def _domain_coords(rfis, i, j):
    x, y, p, q = rfis.data.x, rfis.data.y, rfis.maps.p, rfis.maps.q
    return x[p[i - 1]], x[p[i]], y[q[j - 1]], y[q[j]]


def _check_in_domain(rfis, i, j, x, y):
    if not (1 <= i <= rfis.N and 1 <= j <= rfis.M):
        raise OutOfDomain(f"cell ({i}, {j}) does not exist")
    x0, x1, y0, y1 = _domain_coords(rfis, i, j)
    xa, ya = np.asarray(x), np.asarray(y)
    if np.any((xa < min(x0, x1) - DOMAIN_SLACK) | (xa > max(x0, x1) + DOMAIN_SLACK)) or np.any(
        (ya < min(y0, y1) - DOMAIN_SLACK) | (ya > max(y0, y1) + DOMAIN_SLACK)
    ):
        raise OutOfDomain(f"point ({x}, {y}) is outside D'_{i}{j}")


def eval_g(rfis: BilinearRfis, i: int, j: int, x, y):
    """Bilinear ``g_ij`` through the corner heights of ``D'_ij``."""
    _check_in_domain(rfis, i, j, x, y)
    x0, x1, y0, y1 = _domain_coords(rfis, i, j)
    lam = (x1 - np.asarray(x, float)) / (x1 - x0)
    mu = (y1 - np.asarray(y, float)) / (y1 - y0)
    c = rfis.g_corners[i - 1, j - 1]
    out = lam * mu * c[0, 0] + (1 - lam) * mu * c[1, 0] + lam * (1 - mu) * c[0, 1] + (1 - lam) * (1 - mu) * c[1, 1]
    return float(out) if np.ndim(out) == 0 else out


def eval_F(rfis: BilinearRfis, i: int, j: int, x, y, z):
    g = eval_g(rfis, i, j, x, y)
    ux, vy = rfis.maps.u(i, np.asarray(x, float)), rfis.maps.v(j, np.asarray(y, float))
    # u_i(x) may leave [0,1] by one ulp; clamp before field lookup
    ux, vy = np.clip(ux, 0.0, 1.0), np.clip(vy, 0.0, 1.0)
    out = eval_field(rfis, "S", ux, vy) * (np.asarray(z, float) - g) + eval_field(rfis, "h", ux, vy)
    return float(out) if np.ndim(out) == 0 else out


def eval_W(rfis: BilinearRfis, i: int, j: int, point):
    x, y, z = point
    return (float(rfis.maps.u(i, x)), float(rfis.maps.v(j, y)), eval_F(rfis, i, j, x, y, z))


# -- matchable conditions --------------------------------------------------


@dataclass
class MatchReport:
    max_discrepancy: float
    worst_seam: tuple | None
    seams_checked: int

    @property
    def ok(self):
        return self.max_discrepancy <= 1e-12


def check_matchable(rfis: BilinearRfis, samples_per_edge: int = 33, z_samples=None) -> MatchReport:
    """Largest ``|F_ij - F_neighbour|`` on the shared seams, over sampled ``(y, z)``/``(x, z)``."""
    if z_samples is None:
        zmax = float(np.abs(rfis.data.z).max()) + 1.0
        z_samples = np.linspace(-zmax, zmax, 5)
    z_samples = np.asarray(z_samples, float)
    maps, x, y = rfis.maps, rfis.data.x, rfis.data.y
    worst, where, count = 0.0, None, 0
    for i in range(1, rfis.N):
        xs = x[maps.p[i]]  # x* = u_i^{-1}(x_i) = u_{i+1}^{-1}(x_i)
        for j in range(1, rfis.M + 1):
            ylo, yhi = maps.y_domain(j)
            ys = np.linspace(y[ylo], y[yhi], samples_per_edge)
            Y, Z = np.meshgrid(ys, z_samples)
            X = np.full_like(Y, xs)
            d = np.abs(eval_F(rfis, i, j, X, Y, Z) - eval_F(rfis, i + 1, j, X, Y, Z)).max()
            count += 1
            if d > worst:
                worst, where = float(d), ("x", i, j)
    for j in range(1, rfis.M):
        ys = y[maps.q[j]]
        for i in range(1, rfis.N + 1):
            xlo, xhi = maps.x_domain(i)
            xs = np.linspace(x[xlo], x[xhi], samples_per_edge)
            X, Z = np.meshgrid(xs, z_samples)
            Y = np.full_like(X, ys)
            d = np.abs(eval_F(rfis, i, j, X, Y, Z) - eval_F(rfis, i, j + 1, X, Y, Z)).max()
            count += 1
            if d > worst:
                worst, where = float(d), ("y", i, j)
    return MatchReport(worst, where if worst > 0 else None, count)


# -- exact grid sampling ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledSurface:
    """Values of ``f`` on the level-``n`` grid, ``values[k, l] = f(k/side, l/side)``."""

    level: int
    K: int
    N: int
    values: np.ndarray

    @property
    def side(self) -> int:
        return self.K**self.level * self.N

    @property
    def coords(self):
        return np.arange(self.side + 1) / self.side

    def coarsen(self) -> "SampledSurface":
        if self.level == 0:
            raise ValueError("level-0 surface cannot be coarsened")
        return SampledSurface(self.level - 1, self.K, self.N, self.values[:: self.K, :: self.K])

    def data_nodes(self) -> np.ndarray:
        """Values at the interpolation nodes, an ``(N+1) x (N+1)`` view."""
        step = self.K**self.level
        return self.values[::step, ::step]


def _require_homogeneous(rfis):
    if not rfis.homogeneous:
        why = "; ".join(rfis.certificate.failures) if rfis.certificate else "no refinement ratio K"
        raise HomogeneityRequired(f"exact grid sampling needs the homogeneity conditions ({why})")


def _axis(idx, K, n_fine, ks, cells=None):
    """Per-axis quantities for fine-level indices ``ks`` (level ``n_fine >= 1``).

    Returns the owning cell (1-based), the local fraction ``t`` of the node in
    that cell, ``lam = 1 - t`` as used by ``g`` and the preimage index on the
    level ``n_fine - 1`` grid.
    """
    P = K**n_fine
    ks = np.asarray(ks, dtype=np.int64)
    if cells is None:
        cells = np.maximum(1, -(-ks // P))
    cells = np.asarray(cells, dtype=np.int64)
    off = ks - (cells - 1) * P
    if np.any((off < 0) | (off > P)):
        raise OutOfDomain("node does not lie in the requested cell")
    idx = np.asarray(idx, dtype=np.int64)
    sign = np.sign(idx[cells] - idx[cells - 1])
    pre = idx[cells - 1] * K ** (n_fine - 1) + sign * off
    t = off / P
    lam = (cells * P - ks) / P
    return cells, t, lam, pre


def _bilinear_tab(tab, i, t, j, u):
    T, U = t[:, None], u[None, :]
    return (
        (1 - T) * (1 - U) * tab[np.ix_(i - 1, j - 1)]
        + T * (1 - U) * tab[np.ix_(i, j - 1)]
        + (1 - T) * U * tab[np.ix_(i - 1, j)]
        + T * U * tab[np.ix_(i, j)]
    )


def _g_tab(g_corners, i, lam, j, mu):
    L, Mu = lam[:, None], mu[None, :]
    c = g_corners[np.ix_(i - 1, j - 1)]
    return L * Mu * c[..., 0, 0] + (1 - L) * Mu * c[..., 1, 0] + L * (1 - Mu) * c[..., 0, 1] + (1 - L) * (1 - Mu) * c[..., 1, 1]


def refine_block(rfis: BilinearRfis, coarse: np.ndarray, n_fine: int, rows, cols, row_cells=None, col_cells=None):
    """Level-``n_fine`` values at ``rows x cols`` from the level ``n_fine - 1`` grid.

    By default each node is computed through the lowest cell containing it;
    ``row_cells``/``col_cells`` force other owners (used to cross-check seams).
    """
    K = rfis.K
    i, t, lam, pre_x = _axis(rfis.maps.p, K, n_fine, rows, row_cells)
    j, u, mu, pre_y = _axis(rfis.maps.q, K, n_fine, cols, col_cells)
    S = _bilinear_tab(rfis.s, i, t, j, u)
    h = _bilinear_tab(rfis.data.z, i, t, j, u)
    g = _g_tab(rfis.g_corners, i, lam, j, mu)
    return S * (coarse[np.ix_(pre_x, pre_y)] - g) + h


def refine(rfis: BilinearRfis, coarse: SampledSurface) -> SampledSurface:
    n = coarse.level + 1
    side = rfis.K**n * rfis.N
    ks = np.arange(side + 1)
    vals = refine_block(rfis, coarse.values, n, ks, ks)
    vals.setflags(write=False)
    return SampledSurface(n, rfis.K, rfis.N, vals)


def sample_levels(rfis: BilinearRfis, n: int):
    """Yield the sampled surfaces for levels ``0..n`` in order."""
    _require_homogeneous(rfis)
    if n < 0:
        raise ValueError("level must be non-negative")
    surf = SampledSurface(0, rfis.K, rfis.N, rfis.data.z)
    yield surf
    for _ in range(n):
        surf = refine(rfis, surf)
        yield surf


def sample_surface(rfis: BilinearRfis, n: int) -> SampledSurface:
    """Exact values of ``f`` on the level-``n`` grid of mesh ``1 / (K**n N)``."""
    for surf in sample_levels(rfis, n):
        pass
    return surf


def sample_field(rfis: BilinearRfis, which: str, n: int) -> SampledSurface:
    """``h`` or ``S`` on the level-``n`` grid (same cell ownership as the sampler)."""
    _require_homogeneous(rfis)
    tab = {"h": rfis.data.z, "S": rfis.s}[which]
    if n == 0:
        return SampledSurface(0, rfis.K, rfis.N, np.array(tab))
    ks = np.arange(rfis.K**n * rfis.N + 1)
    i, t, _, _ = _axis(rfis.maps.p, rfis.K, n, ks)
    j, u, _, _ = _axis(rfis.maps.q, rfis.K, n, ks)
    return SampledSurface(n, rfis.K, rfis.N, _bilinear_tab(tab, i, t, j, u))


# -- operator T oracle -----------------------------------------------------


def grid_interpolate(values: np.ndarray, x, y):
    """Bilinear interpolation of a uniform ``(side+1) x (side+1)`` grid on [0,1]^2."""
    side = values.shape[0] - 1
    x = np.asarray(x, float) * side
    y = np.asarray(y, float) * side
    k = np.clip(np.floor(x).astype(np.int64), 0, side - 1)
    l = np.clip(np.floor(y).astype(np.int64), 0, side - 1)
    t, u = x - k, y - l
    return (
        (1 - t) * (1 - u) * values[k, l]
        + t * (1 - u) * values[k + 1, l]
        + (1 - t) * u * values[k, l + 1]
        + t * u * values[k + 1, l + 1]
    )


def _iterate_T(rfis: BilinearRfis, level: int):
    _require_homogeneous(rfis)
    side = rfis.K**level * rfis.N
    coords = np.arange(side + 1) / side
    maps = rfis.maps
    i = _locate(rfis.data.x, coords)
    j = _locate(rfis.data.y, coords)
    # preimages (u_i^{-1}(x), v_j^{-1}(y)) as real coordinates
    px = np.clip((coords - maps.b[i - 1]) / maps.a[i - 1], 0.0, 1.0)
    py = np.clip((coords - maps.d[j - 1]) / maps.c[j - 1], 0.0, 1.0)
    X, Y = np.meshgrid(coords, coords, indexing="ij")
    S = eval_field(rfis, "S", X, Y)
    h = eval_field(rfis, "h", X, Y)
    PX, PY = np.meshgrid(px, py, indexing="ij")
    I, J = np.meshgrid(i, j, indexing="ij")
    x0 = rfis.data.x[np.asarray(maps.p)[I - 1]]
    x1 = rfis.data.x[np.asarray(maps.p)[I]]
    y0 = rfis.data.y[np.asarray(maps.q)[J - 1]]
    y1 = rfis.data.y[np.asarray(maps.q)[J]]
    lam = (x1 - PX) / (x1 - x0)
    mu = (y1 - PY) / (y1 - y0)
    c = rfis.g_corners[I - 1, J - 1]
    g = lam * mu * c[..., 0, 0] + (1 - lam) * mu * c[..., 1, 0] + lam * (1 - mu) * c[..., 0, 1] + (1 - lam) * (1 - mu) * c[..., 1, 1]

    phi = h.copy()
    while True:
        yield phi
        phi = S * (grid_interpolate(phi, PX, PY) - g) + h


def operator_T_iterate(rfis: BilinearRfis, level: int, iterations: int) -> SampledSurface:
    """Apply the contraction ``T`` ``iterations`` times to ``h`` on the level grid."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    it = _iterate_T(rfis, level)
    for _ in range(iterations + 1):
        phi = next(it)
    return SampledSurface(level, rfis.K, rfis.N, phi)


def operator_T_gaps(rfis: BilinearRfis, level: int, iterations: int, reference: SampledSurface | None = None):
    """Sup-norm distance to the recursive sampler after each of ``0..iterations`` steps."""
    if reference is None:
        reference = sample_surface(rfis, level)
    gaps = []
    it = _iterate_T(rfis, level)
    for _ in range(iterations + 1):
        gaps.append(float(np.abs(next(it) - reference.values).max()))
    return gaps


def replace(rfis: BilinearRfis, **changes) -> BilinearRfis:
    """Copy with selected derived tables swapped out (test and diagnostics hook)."""
    return dataclasses.replace(rfis, **changes)
