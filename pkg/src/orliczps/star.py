"""Star bodies, polar bodies and Orlicz projection bodies.

A star body is stored through radial samples on a spherical quadrature plus
an interpolant (periodic cubic spline in angle for n = 2, radial basis
functions on the sphere for n = 3).  Its gauge ``g_K(x) = |x| / rho(x/|x|)``
is 1-homogeneous, so ``grad g_K`` is 0-homogeneous and only needs evaluating
on the sphere.

The Orlicz projection body is computed on the sphere: with the cone-measure
substitution ``(y . nu) dH(y) = rho(w)^n dw`` and ``u . nu / (y . nu) =
u . grad g_K(w)`` its support value ``h(u)`` is the root of

    (1 / sum_j w_j rho_j^n) sum_j w_j rho_j^n phi(u . grad g_K(w_j) / lam) = 1,

which is the same Luxemburg problem as a directional norm, so it reuses the
batched solver.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, RBFInterpolator
from scipy.spatial import ConvexHull

from .affine_ball import RadialBody, SphericalQuadrature, body_volume, make_quadrature
from .field import Grid, ScalarField
from .luxemburg import directional_norms, solve_batch
from .orlicz import OrliczFunction

log = logging.getLogger(__name__)

__all__ = [
    "StarBody",
    "SupportBody",
    "gauge",
    "gauge_gradient",
    "polar",
    "orlicz_projection_body",
    "cone_function",
    "bridge_check",
    "BridgeReport",
    "petty_ratio",
    "crude_projection_estimate",
    "disk",
    "ellipse",
    "ellipsoid",
    "random_star_body",
    "equal_volume_ball",
]

_FD_STEP = 1e-5


def _angles(q: SphericalQuadrature) -> np.ndarray:
    return np.mod(np.arctan2(q.nodes[:, 1], q.nodes[:, 0]), 2 * np.pi)


class _PeriodicRadial:
    """rho(theta) as a periodic cubic spline through the samples."""

    def __init__(self, q: SphericalQuadrature, radial: np.ndarray):
        th = _angles(q)
        order = np.argsort(th, kind="stable")
        th = th[order]
        r = radial[order]
        self.spline = CubicSpline(np.append(th, th[0] + 2 * np.pi), np.append(r, r[0]),
                                  bc_type="periodic")

    def __call__(self, theta, nu=0):
        return self.spline(np.mod(theta, 2 * np.pi), nu)


class _SphereRadial:
    """rho on S^2 by local thin-plate RBF interpolation (exact at the nodes)."""

    def __init__(self, q: SphericalQuadrature, radial: np.ndarray, neighbors: int = 40):
        self.rbf = RBFInterpolator(q.nodes, radial, neighbors=min(neighbors, q.count),
                                   kernel="thin_plate_spline", degree=1)

    def __call__(self, w):
        return self.rbf(np.atleast_2d(w))


@dataclass(frozen=True)
class StarBody:
    quadrature: SphericalQuadrature
    radial: np.ndarray
    name: str = "star"
    interpolant: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.radial, dtype=float)
        if r.shape != (self.quadrature.count,):
            raise ValueError("one radial value per quadrature node")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("radial function must be finite and positive")
        r.flags.writeable = False
        object.__setattr__(self, "radial", r)
        if self.interpolant is None:
            interp = (_PeriodicRadial(self.quadrature, r) if self.dim == 2
                      else _SphereRadial(self.quadrature, r))
            object.__setattr__(self, "interpolant", interp)

    @classmethod
    def from_function(cls, q: SphericalQuadrature, rho, name: str = "star") -> "StarBody":
        """Sample ``rho`` (a function of unit vectors, shape (m, n)) at the nodes."""
        return cls(q, np.asarray(rho(q.nodes), dtype=float), name)

    @classmethod
    def from_radial_body(cls, K: RadialBody, name: str = "star") -> "StarBody":
        return cls(K.quadrature, K.radial, name)

    @property
    def dim(self) -> int:
        return self.quadrature.dim

    def to_radial_body(self) -> RadialBody:
        return RadialBody(self.quadrature, self.radial, {"name": self.name})

    def volume(self) -> float:
        return body_volume(self)

    def rho(self, w) -> np.ndarray:
        """Interpolated radial function at directions ``w`` (normalised here)."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        w = w / np.linalg.norm(w, axis=1, keepdims=True)
        if self.dim == 2:
            return self.interpolant(np.arctan2(w[:, 1], w[:, 0]))
        return self.interpolant(w)

    def gauge(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        out = np.zeros_like(r)
        nz = r > 0
        out[nz] = r[nz] / self.rho(x[nz])
        return out

    def gauge_gradient(self, u) -> np.ndarray:
        """grad g_K at the points ``u`` (0-homogeneous, so only u/|u| matters)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        w = u / np.linalg.norm(u, axis=1, keepdims=True)
        if self.dim == 2:
            th = np.arctan2(w[:, 1], w[:, 0])
            r = self.interpolant(th)
            dr = self.interpolant(th, 1)
            e_r = np.column_stack([np.cos(th), np.sin(th)])
            e_t = np.column_stack([-np.sin(th), np.cos(th)])
            return e_r / r[:, None] - (dr / r**2)[:, None] * e_t
        # n = 3: central differences of the interpolated gauge around w
        out = np.empty_like(w)
        for k in range(3):
            e = np.zeros(3)
            e[k] = _FD_STEP
            out[:, k] = (self.gauge(w + e) - self.gauge(w - e)) / (2 * _FD_STEP)
        return out

    def corner_flags(self) -> np.ndarray:
        """Nodes where the sampled boundary bends by more than 10% of rho per node step."""
        if self.dim != 2:
            return np.zeros(self.quadrature.count, dtype=bool)
        th = _angles(self.quadrature)
        step = 2 * np.pi / self.quadrature.count
        return np.abs(self.interpolant(th, 2)) * step**2 > 0.1 * self.radial

    def boundary(self, count: int = 4096) -> np.ndarray:
        """Dense boundary points from the interpolant (n = 2 polygon, n = 3 cloud)."""
        q = make_quadrature(self.dim, count)
        return self.rho(q.nodes)[:, None] * q.nodes

    def scaled(self, c: float) -> "StarBody":
        return StarBody(self.quadrature, c * self.radial, self.name)


@dataclass(frozen=True)
class SupportBody:
    quadrature: SphericalQuadrature
    support: np.ndarray
    flagged: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        h = np.asarray(self.support, dtype=float)
        if h.shape != (self.quadrature.count,):
            raise ValueError("one support value per quadrature node")
        if np.any(np.isnan(h)) or np.any(h <= 0):
            raise ValueError("support values must be positive")
        h.flags.writeable = False
        object.__setattr__(self, "support", h)

    @property
    def dim(self) -> int:
        return self.quadrature.dim

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.support)))

    def h(self, x) -> np.ndarray:
        """1-homogeneous extension through an interpolant of the node values."""
        if not self.finite:
            raise ValueError("support body has flagged (infinite) nodes")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        interp = StarBody(self.quadrature, self.support).rho
        return r * interp(x)

    def subadditivity_check(self, rng: np.random.Generator, count: int = 200,
                            rtol: float = 1e-3) -> tuple[bool, float]:
        """h(x + y) <= h(x) + h(y) on random pairs; returns (passed, worst excess)."""
        x = rng.normal(size=(count, self.dim))
        y = rng.normal(size=(count, self.dim))
        lhs = self.h(x + y)
        rhs = self.h(x) + self.h(y)
        excess = float(np.max((lhs - rhs) / rhs))
        return excess <= rtol, excess


def gauge(K: StarBody, x) -> float | np.ndarray:
    out = K.gauge(x)
    return float(out[0]) if np.ndim(x) == 1 else out


def gauge_gradient(K: StarBody, u) -> np.ndarray:
    out = K.gauge_gradient(u)
    return out[0] if np.ndim(u) == 1 else out


def _support_from_radial(K, directions) -> np.ndarray:
    pts = K.radial[:, None] * K.quadrature.nodes
    return np.max(directions @ pts.T, axis=1)


def polar(K: StarBody) -> StarBody:
    """K* with rho_{K*} = 1 / h_K and h_K(u) = max_i rho_i (u . u_i)."""
    h = _support_from_radial(K, K.quadrature.nodes)
    if np.any(h <= 0):
        raise ValueError("origin is not interior to K")
    return StarBody(K.quadrature, 1.0 / h, f"polar({K.name})")


def orlicz_projection_body(K: StarBody, phi: OrliczFunction,
                           directions: np.ndarray | None = None,
                           integration: SphericalQuadrature | None = None) -> SupportBody:
    """Support values of the Orlicz projection body at the quadrature nodes.

    ``integration`` optionally refines the spherical integral (the interpolant
    is then evaluated on the finer nodes).  ``directions`` overrides the
    output nodes; the result is then returned as a plain array.
    """
    qi = K.quadrature if integration is None else integration
    rho = K.radial if integration is None else K.rho(qi.nodes)
    grad = K.gauge_gradient(qi.nodes)
    wts = qi.weights * rho**K.dim
    mass = float(wts.sum())
    out_dirs = K.quadrature.nodes if directions is None else np.atleast_2d(directions)
    certs = solve_batch(out_dirs @ grad.T, wts, mass, phi)
    h = np.array([c.value for c in certs])
    flagged = tuple(i for i, c in enumerate(certs) if c.status != "ok")
    if flagged:
        log.warning("%d projection-body nodes hit the kernel of phi", len(flagged))
    if directions is not None:
        return h
    return SupportBody(K.quadrature, h, flagged,
                       {"max_residual": max((c.residual for c in certs), default=0.0)})


def cone_function(K: StarBody, grid: Grid) -> ScalarField:
    """f(x) = (1 - g_K(x - c))_+ with c the box centre."""
    if grid.dim != K.dim:
        raise ValueError("grid and body dimensions differ")
    x = grid.coords().reshape(-1, grid.dim) - grid.center
    vals = np.maximum(1.0 - K.gauge(x), 0.0).reshape(grid.resolution)
    return ScalarField(grid, vals, {"generator": "cone", "body": K.name})


@dataclass
class BridgeReport:
    body: str
    phi: str
    norms: np.ndarray
    support: np.ndarray
    gaps: np.ndarray
    sup_gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.sup_gap <= self.tol)


def bridge_check(K: StarBody, phi: OrliczFunction, q: SphericalQuadrature, grid: Grid,
                 tol: float = 0.03) -> BridgeReport:
    """Grid cone norms ||u||_{f,phi} against projection-body support values at -u."""
    f = cone_function(K, grid)
    norms = directional_norms(f, q.nodes, phi)
    h = orlicz_projection_body(K, phi, directions=-q.nodes)
    gaps = np.abs(norms - h) / h
    return BridgeReport(K.name, repr(phi), norms, h, gaps, float(np.max(gaps)), tol)


def petty_ratio(K: StarBody, phi: OrliczFunction) -> float:
    """|polar of the Orlicz projection body| / |K|."""
    P = orlicz_projection_body(K, phi)
    if not P.finite:
        raise ValueError("projection body has flagged nodes")
    n = K.dim
    vol_polar = float(np.dot(K.quadrature.weights, P.support ** (-n)) / n)
    return vol_polar / K.volume()


def _diameter_of(points: np.ndarray) -> float:
    hull = points[ConvexHull(points).vertices]
    d2 = np.sum((hull[:, None, :] - hull[None, :, :]) ** 2, axis=-1)
    return float(np.sqrt(d2.max()))


def crude_projection_estimate(K: StarBody, u, count: int = 4096) -> tuple[float, float]:
    """(int_{dK} (u . nu)_+ dH, |K| / D_K), the first by the spherical substitution."""
    u = np.asarray(u, dtype=float)
    q = make_quadrature(K.dim, count)
    rho = K.rho(q.nodes)
    s = K.gauge_gradient(q.nodes) @ u
    lhs = float(np.dot(q.weights, np.maximum(s, 0.0) * rho**K.dim))
    rhs = K.volume() / _diameter_of(rho[:, None] * q.nodes)
    return lhs, rhs


def disk(q: SphericalQuadrature, r: float = 1.0) -> StarBody:
    return StarBody(q, np.full(q.count, float(r)), f"ball(r={r:g})")


def ellipse(q: SphericalQuadrature, a: float, b: float, angle: float = 0.0) -> StarBody:
    if q.dim != 2:
        raise ValueError("ellipse needs a 2-D quadrature")
    th = _angles(q) - angle
    rho = 1.0 / np.sqrt((np.cos(th) / a) ** 2 + (np.sin(th) / b) ** 2)
    return StarBody(q, rho, f"ellipse({a:g},{b:g},{angle:.3g})")


def ellipsoid(q: SphericalQuadrature, axes) -> StarBody:
    ax = np.asarray(axes, dtype=float)
    if ax.shape != (q.dim,):
        raise ValueError("one semi-axis per dimension")
    rho = 1.0 / np.sqrt(np.sum((q.nodes / ax) ** 2, axis=1))
    return StarBody(q, rho, "ellipsoid(" + ",".join(f"{a:g}" for a in ax) + ")")


def random_star_body(rng: np.random.Generator, q: SphericalQuadrature,
                     amplitude: float = 0.08, modes: int = 6, scale: float = 1.0,
                     floor: float = 0.2) -> StarBody:
    """rho = scale * max(floor, 1 + sum_k a_k cos(k theta + b_k)) with a_k ~ U(0, amplitude).

    For n = 3 the perturbation is a random sum of products of cosines of the
    node coordinates, which plays the same role.
    """
    a = rng.uniform(0.0, amplitude, size=modes)
    b = rng.uniform(0.0, 2 * np.pi, size=modes)
    if q.dim == 2:
        th = _angles(q)
        pert = sum(a[k] * np.cos((k + 1) * th + b[k]) for k in range(modes))
    else:
        dirs = rng.normal(size=(modes, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pert = sum(a[k] * np.cos((k + 1) * (q.nodes @ dirs[k]) + b[k]) for k in range(modes))
    rho = scale * np.maximum(floor, 1.0 + pert)
    return StarBody(q, rho, f"random_star(amp={amplitude:g})")


def equal_volume_ball(K: StarBody) -> StarBody:
    n = K.dim
    unit = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    return disk(K.quadrature, (K.volume() / unit) ** (1.0 / n))
