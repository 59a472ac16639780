"""Steiner symmetrization and symmetric decreasing rearrangement on grids.

Axis-aligned Steiner symmetrization is a per-line permutation: the samples
of each line are sorted in decreasing order (stable, so earlier indices win
ties) and dealt out alternately from the midplane, the largest value going
to the first cell on the positive side.  Being a permutation it preserves
every superlevel cell count and the integral exactly.  Other directions are
handled by rotating the field so that the direction becomes the first axis.

The symmetric decreasing rearrangement evaluates the decreasing quantile
profile of the samples at the cell-volume rank ``omega_n |x|^n / dV`` of each
cell, so the output is exactly radially nonincreasing.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .affine_ball import RadialBody
from .field import BAND, ScalarField, _check_unit, pullback, unit_ball_volume
from .star import StarBody

log = logging.getLogger(__name__)

__all__ = [
    "DirectionSchedule",
    "steiner",
    "steiner_body",
    "sdr",
    "approximate_sdr",
    "ConvergenceTrace",
    "rotation_to_axis",
]

SCHEDULE_KINDS = ("axes_cyclic", "random_uniform", "fixed_list")
_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class DirectionSchedule:
    directions: tuple
    seed: int = 0
    kind: str = "fixed_list"

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        dirs = tuple(np.asarray(d, dtype=float) for d in self.directions)
        if not dirs:
            raise ValueError("schedule needs at least one direction")
        for d in dirs:
            if abs(np.linalg.norm(d) - 1.0) > 1e-12:
                raise ValueError("schedule directions must be unit vectors")
        object.__setattr__(self, "directions", dirs)

    @classmethod
    def axes_cyclic(cls, dim: int, k: int) -> "DirectionSchedule":
        eye = np.eye(dim)
        return cls(tuple(eye[i % dim] for i in range(k)), 0, "axes_cyclic")

    @classmethod
    def random_uniform(cls, dim: int, k: int, seed: int) -> "DirectionSchedule":
        rng = np.random.default_rng(np.uint64(seed))
        v = rng.normal(size=(k, dim))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return cls(tuple(v), int(seed), "random_uniform")

    @classmethod
    def make(cls, kind: str, dim: int, k: int, seed: int = 0) -> "DirectionSchedule":
        if kind == "axes_cyclic":
            return cls.axes_cyclic(dim, k)
        if kind == "random_uniform":
            return cls.random_uniform(dim, k, seed)
        raise ValueError("fixed_list schedules are built from explicit directions")

    def __len__(self):
        return len(self.directions)

    def __getitem__(self, i):
        # cycle so any k can be served
        return self.directions[i % len(self.directions)]


def _axis_of(u: np.ndarray) -> int | None:
    nz = np.nonzero(np.abs(u) > 1e-12)[0]
    if nz.size == 1 and abs(abs(u[nz[0]]) - 1.0) <= 1e-12:
        return int(nz[0])
    return None


def _deal_order(N: int) -> np.ndarray:
    """Target index for the j-th largest value on a line of length N."""
    half = N // 2
    j = np.arange(N)
    # ranks 0, 2, 4, ... go up from half, ranks 1, 3, 5, ... go down from half - 1
    return np.where(j % 2 == 0, half + j // 2, half - 1 - j // 2)


def _steiner_axis(values: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(values, axis, -1)
    N = a.shape[-1]
    ranked = -np.sort(-a, axis=-1, kind="stable")
    out = np.empty_like(a)
    out[..., _deal_order(N)] = ranked
    return np.moveaxis(out, -1, axis)


def _pl_measures(v: np.ndarray, t: np.ndarray):
    """|{L > t}| and |{L >= t}| in cell units, L the piecewise-linear interpolant of v."""
    a, b = v[:-1], v[1:]
    hi = np.maximum(a, b)[None, :]
    span = hi - np.minimum(a, b)[None, :]
    T = t[:, None]
    frac = np.clip((hi - T) / np.where(span > 0, span, 1.0), 0.0, 1.0)
    gt = np.where(span > 0, frac, hi > T).sum(axis=1)
    ge = np.where(span > 0, frac, hi >= T).sum(axis=1)
    return gt, ge


def _steiner_axis_profile(values: np.ndarray, axis: int) -> np.ndarray:
    # Same support cells and deal order as the sort, but each line's values are
    # read off the decreasing profile of its piecewise-linear interpolant at the
    # cell measures k + 1/2, which removes the sampling-phase noise a
    # permutation carries across neighbouring lines.
    a = np.moveaxis(values, axis, -1)
    N = a.shape[-1]
    flat = a.reshape(-1, N)
    out = np.zeros_like(flat)
    order = _deal_order(N)
    for i, v in enumerate(flat):
        m = int(np.count_nonzero(v > 0))
        if m == 0:
            continue
        levels = np.unique(v)[::-1]
        gt, ge = _pl_measures(v, levels)
        mu = np.concatenate([gt, ge])
        tv = np.concatenate([levels, levels])
        o = np.lexsort((-tv, mu))
        vals = np.interp(np.arange(m) + 0.5, mu[o], tv[o])
        out[i, order[:m]] = np.maximum(vals, _TINY)
    return np.moveaxis(out.reshape(a.shape), -1, axis)


_AXIS_METHODS = {"sort": _steiner_axis, "profile": _steiner_axis_profile}


def rotation_to_axis(u: np.ndarray) -> np.ndarray:
    """Proper rotation R with R e_1 = u."""
    n = u.size
    if n == 2:
        return np.array([[u[0], -u[1]], [u[1], u[0]]])
    M = np.eye(n)
    M[:, 0] = u
    # Gram-Schmidt on (u, e_1, ..., e_n) minus the most parallel axis
    drop = int(np.argmax(np.abs(u)))
    cols = [u] + [np.eye(n)[i] for i in range(n) if i != drop]
    Q, _ = np.linalg.qr(np.column_stack(cols))
    if Q[:, 0] @ u < 0:
        Q = -Q
    if np.linalg.det(Q) < 0:
        Q[:, -1] = -Q[:, -1]
    return Q


def _check_rotatable(f: ScalarField):
    grid = f.grid
    idx = np.argwhere(f.values > 0)
    if idx.size == 0:
        return
    h = np.array(grid.spacing)
    pts = np.array(grid.lo) + (idx + 0.5) * h
    radius = np.sqrt(np.max(np.sum((pts - grid.center) ** 2, axis=1)))
    inner = min((hi - lo) / 2 for lo, hi in zip(grid.lo, grid.hi)) - (BAND + 1) * float(h.max())
    if radius > inner:
        raise ValueError("support reaches outside the inscribed ball of the box; "
                         "rotation would leave the box, grow the box")


def steiner(f: ScalarField, u, method: str = "sort") -> ScalarField:
    """Steiner symmetral of ``f`` in the direction ``u`` about the box midplane.

    ``method="sort"`` permutes each line (exactly equimeasurable, integral
    preserving and idempotent).  ``method="profile"`` keeps the same support
    cells but samples the decreasing profile of each line's piecewise-linear
    interpolant; it is equimeasurable only up to interpolation, but its
    gradient across lines converges under refinement, which a permutation's
    does not.
    """
    try:
        sym = _AXIS_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown Steiner method {method!r}") from None
    u = _check_unit(u, f.grid.dim)
    axis = _axis_of(u)
    if axis is not None:
        return ScalarField(f.grid, sym(f.values, axis), f.meta)
    _check_rotatable(f)
    R = rotation_to_axis(u)
    # g(y) = f(c + R (y - c)) has u along the first axis
    g = pullback(f, R, check_box=False)
    gs = ScalarField(f.grid, sym(g.values, 0), f.meta)
    return pullback(gs, R.T, check_box=False)


def sdr(f: ScalarField) -> ScalarField:
    """Symmetric decreasing rearrangement centred at the box centre."""
    grid = f.grid
    ranked = np.sort(f.values.ravel())[::-1]
    m = int(np.count_nonzero(ranked > 0))
    if m == 0:
        return ScalarField.zeros(grid)
    x = grid.coords() - grid.center
    r2 = np.sum(x * x, axis=-1)
    n = grid.dim
    # volume of the ball through the cell centre, in cells
    rank = unit_ball_volume(n) * r2 ** (n / 2) / grid.cell_volume
    table = np.append(ranked[:m], 0.0)
    out = np.interp(rank - 0.5, np.arange(m + 1, dtype=float), table, left=table[0], right=0.0)
    if np.any(out[grid.band_mask()] > 0):
        raise ValueError("rearranged support reaches the boundary band; grow the box")
    return ScalarField(grid, out, f.meta)


@dataclass
class ConvergenceTrace:
    steps: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    integral: list = field(default_factory=list)
    maximum: list = field(default_factory=list)

    def append(self, step, l1, integral, maximum):
        self.steps.append(int(step))
        self.l1.append(float(l1))
        self.integral.append(float(integral))
        self.maximum.append(float(maximum))

    def rows(self):
        return list(zip(self.steps, self.l1, self.integral, self.maximum))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "L1_distance", "integral", "max"])
            for row in self.rows():
                w.writerow([row[0]] + [repr(v) for v in row[1:]])
        return path


def approximate_sdr(f: ScalarField, schedule: DirectionSchedule, k: int,
                    target: ScalarField | None = None, method: str = "sort"):
    """Apply ``k`` Steiner steps along ``schedule``; trace L1 distance to ``sdr(f)``.

    Row 0 of the trace describes ``f`` itself.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    star = sdr(f) if target is None else target
    trace = ConvergenceTrace()
    cur = f
    trace.append(0, cur.l1_distance(star), cur.integral(), cur.max())
    for i in range(k):
        cur = steiner(cur, schedule[i], method)
        trace.append(i + 1, cur.l1_distance(star), cur.integral(), cur.max())
    return cur, trace


# ---------------------------------------------------------------- bodies


def _chord_lengths_polygon(P: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Length of {s : (t, s) inside polygon P} at each increasing abscissa t.

    Along a line the boundary crossings alternate in and out, and with a
    fixed orientation the entering and leaving edges are those with opposite
    signs of da, so the chord length is |sum_e sign(da_e) s_e(t)|.  Each
    s_e(t) is linear in t on the edge's range, so the sum is accumulated with
    difference arrays in O(edges + levels).
    """
    a0, s0 = P[:, 0], P[:, 1]
    a1, s1 = np.roll(a0, -1), np.roll(s0, -1)
    da = a1 - a0
    keep = da != 0
    a0, s0, a1, s1, da = a0[keep], s0[keep], a1[keep], s1[keep], da[keep]
    beta = (s1 - s0) / da
    alpha = s0 - a0 * beta
    sign = np.sign(da)
    i0 = np.searchsorted(t, np.minimum(a0, a1), side="left")
    i1 = np.searchsorted(t, np.maximum(a0, a1), side="left")
    dA = np.zeros(t.size + 1)
    dB = np.zeros(t.size + 1)
    np.add.at(dA, i0, sign * alpha)
    np.add.at(dA, i1, -sign * alpha)
    np.add.at(dB, i0, sign * beta)
    np.add.at(dB, i1, -sign * beta)
    return np.abs(np.cumsum(dA)[:-1] + np.cumsum(dB)[:-1] * t)


def _ray_exit(inside, nodes: np.ndarray, r_max: float, scan: int = 256) -> np.ndarray:
    """First exit radius along each ray of the set described by ``inside(points)``."""
    r = np.linspace(0.0, r_max, scan + 1)[1:]
    pts = nodes[:, None, :] * r[None, :, None]
    ins = inside(pts.reshape(-1, nodes.shape[1])).reshape(nodes.shape[0], scan)
    first_out = np.where(~ins.all(axis=1), np.argmin(ins, axis=1), scan)
    lo = np.where(first_out > 0, r[np.maximum(first_out - 1, 0)], 0.0)
    hi = np.where(first_out < scan, r[np.minimum(first_out, scan - 1)], r_max)
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        ok = inside(nodes * mid[:, None])
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def steiner_body(K, u, raster: int = 4096):
    """Steiner symmetral of a body through the origin-centred hyperplane u^perp.

    Accepts a :class:`RadialBody` or :class:`StarBody` and returns the same
    type on the same quadrature.
    """
    star = K if isinstance(K, StarBody) else StarBody.from_radial_body(K)
    n = star.dim
    u = _check_unit(u, n)
    q = star.quadrature
    r_max = 2.0 * float(star.radial.max())
    if n == 2:
        perp = np.array([-u[1], u[0]])
        B = star.boundary(raster)
        P = np.column_stack([B @ perp, B @ u])
        a_lo, a_hi = P[:, 0].min(), P[:, 0].max()
        ts = np.linspace(a_lo, a_hi, raster + 1)
        L = _chord_lengths_polygon(P, ts)

        def inside(x):
            a = x @ perp
            half = 0.5 * np.interp(a, ts, L, left=0.0, right=0.0)
            return (half > 0) & (np.abs(x @ u) <= half)
    else:
        rho_min, rho_max = float(star.radial.min()), float(star.radial.max())
        need = int(math.ceil(4 * math.pi / (rho_min / (4 * rho_max)) ** 2))
        if q.count < need:
            raise ValueError(f"chord raster cannot resolve this body; needs at least {need} nodes")
        R = rotation_to_axis(u)
        e2, e3 = R[:, 1], R[:, 2]
        m = int(math.ceil(math.sqrt(q.count)))
        grid1 = np.linspace(-rho_max, rho_max, m)
        ss = np.linspace(-rho_max, rho_max, 4 * m)
        ds = ss[1] - ss[0]
        A, Bc = np.meshgrid(grid1, grid1, indexing="ij")
        base = A[..., None] * e2 + Bc[..., None] * e3
        pts = base[:, :, None, :] + ss[None, None, :, None] * u
        d = star.gauge(pts.reshape(-1, 3)).reshape(m, m, ss.size) - 1.0
        # measure of {gauge <= 1} on each line with linearly located crossings
        a, b = d[..., :-1], d[..., 1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = np.where(a <= 0, a / (a - b), b / (b - a))
        frac = np.where((a <= 0) & (b <= 0), 1.0, np.where((a > 0) & (b > 0), 0.0, cross))
        L = frac.sum(axis=-1) * ds
        # 1 - min gauge is smooth and changes sign at the rim of the shadow, so it
        # locates the rim; L^2 (not L) is interpolated for the chord inside it
        grid_pts = (grid1, grid1)
        reach = RegularGridInterpolator(grid_pts, -d.min(axis=-1), bounds_error=False,
                                        fill_value=-1.0)
        chord2 = RegularGridInterpolator(grid_pts, L * L, bounds_error=False, fill_value=0.0)

        def inside(x):
            p = np.column_stack([x @ e2, x @ e3])
            half = 0.5 * np.sqrt(np.maximum(chord2(p), 0.0))
            return (reach(p) > 0) & (np.abs(x @ u) <= half)

    rho = _ray_exit(inside, q.nodes, r_max)
    if isinstance(K, StarBody):
        return StarBody(q, rho, f"steiner({K.name})")
    return RadialBody(q, rho, dict(K.meta))
