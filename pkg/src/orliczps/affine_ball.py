"""Orlicz-Sobolev affine balls as radial bodies over a spherical quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .field import GradientField, ScalarField, diameter, gradient, pullback, support_volume
from .luxemburg import c_phi, directional_norms
from .orlicz import OrliczFunction

__all__ = [
    "SphericalQuadrature",
    "RadialBody",
    "DegenerateBodyError",
    "make_quadrature",
    "affine_ball",
    "body_volume",
    "energy",
    "energy_from_volume",
    "sl_transform",
    "random_sl",
    "norm_bounds_check",
    "sphere_measure",
]


def sphere_measure(n: int) -> float:
    """Surface measure of S^{n-1}."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class SphericalQuadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] not in (2, 3) or w.shape != (nodes.shape[0],):
            raise ValueError("nodes must be (count, dim) with one weight per node")
        if np.any(np.abs(np.linalg.norm(nodes, axis=1) - 1) > 1e-12):
            raise ValueError("quadrature nodes must be unit vectors")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(w.sum() - sphere_measure(nodes.shape[1])) > 1e-10:
            raise ValueError("weights must sum to the sphere measure")
        nodes.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def count(self) -> int:
        return self.nodes.shape[0]

    @property
    def angles(self) -> np.ndarray:
        """Polar angles of the nodes (n = 2 only)."""
        if self.dim != 2:
            raise ValueError("angles are defined for n = 2")
        return np.mod(np.arctan2(self.nodes[:, 1], self.nodes[:, 0]), 2 * np.pi)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def make_quadrature(dim: int, count: int) -> SphericalQuadrature:
    """Equal-weight nodes: uniform angles for n = 2, a Fibonacci lattice for n = 3."""
    if count < 4:
        raise ValueError("need at least 4 nodes")
    if dim == 2:
        theta = 2 * np.pi * np.arange(count) / count
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    elif dim == 3:
        i = np.arange(count) + 0.5
        polar = np.arccos(1.0 - 2.0 * i / count)
        golden = (1.0 + 5.0**0.5) / 2.0
        azim = 2 * np.pi * i / golden
        nodes = np.column_stack([np.cos(azim) * np.sin(polar),
                                 np.sin(azim) * np.sin(polar),
                                 np.cos(polar)])
        nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    else:
        raise ValueError("dim must be 2 or 3")
    return SphericalQuadrature(nodes, np.full(count, sphere_measure(dim) / count))


class DegenerateBodyError(ValueError):
    """Some direction has no finite positive radius."""

    def __init__(self, message, flagged=()):
        super().__init__(message)
        self.flagged = list(flagged)


@dataclass(frozen=True)
class RadialBody:
    quadrature: SphericalQuadrature
    radial: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        r = np.asarray(self.radial, dtype=float)
        if r.shape != (self.quadrature.count,):
            raise ValueError("one radial value per quadrature node")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("radial values must be finite and positive")
        r.flags.writeable = False
        object.__setattr__(self, "radial", r)

    @property
    def dim(self) -> int:
        return self.quadrature.dim

    def points(self) -> np.ndarray:
        return self.radial[:, None] * self.quadrature.nodes

    def volume(self) -> float:
        return body_volume(self)

    def scaled(self, c: float) -> "RadialBody":
        return RadialBody(self.quadrature, c * self.radial, self.meta)


def body_volume(K) -> float:
    """(1/n) sum_i w_i rho_i^n."""
    q = K.quadrature
    return float(np.dot(q.weights, K.radial**q.dim) / q.dim)


def affine_ball(f: ScalarField, phi: OrliczFunction, q: SphericalQuadrature,
                grad: GradientField | None = None) -> RadialBody:
    """Unit ball of ``v -> ||v . grad f||_phi`` sampled at the quadrature nodes."""
    if q.dim != f.grid.dim:
        raise ValueError("quadrature and field dimensions differ")
    norms, certs = directional_norms(f, q.nodes, phi, grad, certificates=True)
    bad = [i for i, c in enumerate(certs) if c.status != "ok"]
    if bad:
        raise DegenerateBodyError(
            f"{len(bad)} directions have degenerate norms ({certs[bad[0]].status})", bad)
    residual = max(c.residual for c in certs)
    return RadialBody(q, 1.0 / norms, {"max_residual": residual})


def energy_from_volume(volume: float, dim: int) -> float:
    return volume ** (-1.0 / dim)


def energy(f: ScalarField, phi: OrliczFunction, q: SphericalQuadrature,
           grad: GradientField | None = None) -> float:
    """|B_phi(f)|^{-1/n}."""
    return energy_from_volume(body_volume(affine_ball(f, phi, q, grad)), q.dim)


def sl_transform(f: ScalarField, A) -> ScalarField:
    """``x -> f(A x)`` about the box centre, for ``det A = 1``."""
    A = np.asarray(A, dtype=float)
    if A.shape != (f.grid.dim,) * 2:
        raise ValueError("matrix shape does not match the field dimension")
    if abs(np.linalg.det(A) - 1.0) > 1e-9:
        raise ValueError("A must have determinant 1")
    return pullback(f, A)


def _rotation2(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def random_sl(rng: np.random.Generator, dim: int = 2, max_cond: float = 4.0) -> np.ndarray:
    """rotation . diagonal . rotation with condition number at most ``max_cond``."""
    cond = rng.uniform(1.0, max_cond)
    if dim == 2:
        s = math.sqrt(cond)
        D = np.diag([s, 1.0 / s])
        return _rotation2(rng.uniform(0, 2 * np.pi)) @ D @ _rotation2(rng.uniform(0, 2 * np.pi))
    # three singular values with product 1 and ratio of extremes = cond
    mid = rng.uniform(-0.5, 0.5) * math.log(cond)
    logs = np.array([0.5 * math.log(cond), mid, -0.5 * math.log(cond)])
    logs -= logs.mean()
    logs[0] = logs[2] + math.log(cond)
    logs -= logs.mean()
    Q1, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    Q2, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    A = Q1 @ np.diag(np.exp(logs)) @ Q2
    return A / np.cbrt(np.linalg.det(A))


def norm_bounds_check(f: ScalarField, phi: OrliczFunction, v,
                      grad: GradientField | None = None):
    """(lower, ||v||_{f,phi}, upper) with the support-diameter lower bound."""
    G = gradient(f) if grad is None else grad
    v = np.asarray(v, dtype=float)
    value = float(directional_norms(f, v[None, :], phi, G)[0])
    c = c_phi(phi)
    lower = f.integral() / (c * support_volume(f) * diameter(f))
    upper = float(G.magnitude().max()) / c
    return lower, value, upper
