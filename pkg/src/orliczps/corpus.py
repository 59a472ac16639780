"""Field and body generators driven by plain config dictionaries.

Every generator is deterministic given its parameters; random ones take an
explicit seed.  A field entry looks like ``{"kind": "radial", "profile":
"cone", "radius": 0.6}``; see :data:`FIELD_KINDS` for the accepted kinds.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np
from scipy import ndimage

from .affine_ball import SphericalQuadrature, make_quadrature
from .field import Grid, ScalarField
from .orlicz import from_spec
from .star import StarBody, disk, ellipse, ellipsoid, random_star_body

__all__ = [
    "PROFILES",
    "FIELD_KINDS",
    "profile",
    "field_from_spec",
    "body_from_spec",
    "default_field_specs",
    "default_body_specs",
    "default_phi_specs",
    "default_config",
    "load_config",
    "build_fields",
    "build_bodies",
    "build_phis",
    "make_grid",
]


def _smooth(t):
    out = np.zeros_like(t)
    m = t < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


# radial profiles psi(t), t = gauge / radius, psi(0) = 1, psi = 0 for t >= 1
PROFILES = {
    "cone": lambda t: np.maximum(1.0 - t, 0.0),
    "quadratic": lambda t: np.maximum(1.0 - t * t, 0.0),
    "biquadratic": lambda t: np.maximum(1.0 - t * t, 0.0) ** 2,
    "smooth": _smooth,
    "plateau": lambda t: np.clip(2.0 * (1.0 - t), 0.0, 1.0),
}


def profile(name: str):
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}") from None


def _superellipse_gauge(x, p):
    return np.sum(np.abs(x) ** p, axis=-1) ** (1.0 / p)


def _bump_values(x, spec):
    """One bump: height * psi(gauge(A (x - center)) / radius)."""
    center = np.asarray(spec.get("center", np.zeros(x.shape[-1])), dtype=float)
    y = x - center
    if "matrix" in spec:
        y = y @ np.asarray(spec["matrix"], dtype=float).T
    p = float(spec.get("p", 2.0))
    g = np.linalg.norm(y, axis=-1) if p == 2.0 else _superellipse_gauge(y, p)
    return float(spec.get("height", 1.0)) * profile(spec.get("profile", "cone"))(g / spec["radius"])


def _star_cone_values(grid: Grid, spec):
    q = make_quadrature(grid.dim, int(spec.get("nodes", 512 if grid.dim == 2 else 2048)))
    K = body_from_spec(q, spec["body"])
    center = np.asarray(spec.get("center", np.zeros(grid.dim)), dtype=float)
    x = grid.coords().reshape(-1, grid.dim) - grid.center - center
    g = K.gauge(x).reshape(grid.resolution)
    return float(spec.get("height", 1.0)) * profile(spec.get("profile", "cone"))(g)


def _noise_values(grid: Grid, spec):
    rng = np.random.default_rng(int(spec["seed"]))
    sigma_cells = float(spec.get("sigma", 0.08)) / min(grid.spacing)
    noise = ndimage.gaussian_filter(rng.normal(size=grid.resolution), sigma_cells, mode="wrap")
    noise = (noise - noise.min()) / (noise.max() - noise.min())
    window = profile("biquadratic")(
        np.linalg.norm(grid.coords() - grid.center, axis=-1) / spec.get("radius", 0.6))
    return (0.25 + noise) * window


FIELD_KINDS = ("radial", "bump", "multi_bump", "star_cone", "noise")


def field_from_spec(grid: Grid, spec: dict) -> ScalarField:
    kind = spec.get("kind")
    x = grid.coords() - grid.center
    if kind in ("radial", "bump"):
        vals = _bump_values(x, spec)
    elif kind == "multi_bump":
        vals = sum(_bump_values(x, b) for b in spec["bumps"])
    elif kind == "star_cone":
        vals = _star_cone_values(grid, spec)
    elif kind == "noise":
        vals = _noise_values(grid, spec)
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    meta = {"name": spec.get("name", kind), "spec": copy.deepcopy(spec)}
    return ScalarField(grid, vals, meta)


def body_from_spec(q: SphericalQuadrature, spec: dict) -> StarBody:
    kind = spec.get("kind")
    if kind == "ball":
        K = disk(q, spec.get("radius", 1.0))
    elif kind == "ellipse":
        K = ellipse(q, spec["a"], spec["b"], spec.get("angle", 0.0))
    elif kind == "ellipsoid":
        K = ellipsoid(q, spec["axes"])
    elif kind == "random_star":
        K = random_star_body(np.random.default_rng(int(spec["seed"])), q,
                             amplitude=spec.get("amplitude", 0.08),
                             scale=spec.get("scale", 1.0))
    elif kind == "rose":
        # a non-convex star body: rho = scale (1 + amp cos(k theta))
        if q.dim != 2:
            raise ValueError("rose bodies are 2-D")
        th = q.angles
        K = StarBody(q, spec.get("scale", 1.0) * (1 + spec["amplitude"] * np.cos(spec["k"] * th)))
    else:
        raise ValueError(f"unknown body kind {kind!r}")
    name = spec.get("name")
    return StarBody(K.quadrature, K.radial, name) if name else K


def _shear(s, angle=0.0):
    c, t = np.cos(angle), np.sin(angle)
    R = np.array([[c, -t], [t, c]])
    return (R @ np.array([[1.0, s], [0.0, 1.0]]) @ R.T).tolist()


def default_field_specs(seed: int = 0) -> list[dict]:
    """The 20-field 2-D corpus: radial controls, gauge bumps, multi-bumps, star cones."""
    rng = np.random.default_rng(seed)
    specs = [
        {"name": "radial_cone", "kind": "radial", "profile": "cone", "radius": 0.6, "radial": True},
        {"name": "radial_quadratic", "kind": "radial", "profile": "quadratic", "radius": 0.6,
         "radial": True},
        {"name": "radial_biquadratic", "kind": "radial", "profile": "biquadratic", "radius": 0.65,
         "radial": True},
        {"name": "radial_smooth", "kind": "radial", "profile": "smooth", "radius": 0.65,
         "radial": True},
        {"name": "radial_plateau", "kind": "radial", "profile": "plateau", "radius": 0.6,
         "radial": True},
    ]
    gauge_bumps = [
        ("bump_super4_shear", "biquadratic", 4.0, 0.4, 0.6, (0.15, -0.1)),
        ("bump_super3_cone", "cone", 3.0, 0.8, 0.3, (-0.12, 0.1)),
        ("bump_super4_quad", "quadratic", 4.0, -0.5, 1.1, (0.1, 0.12)),
        ("bump_super6_smooth", "smooth", 6.0, 0.3, 2.0, (-0.05, -0.15)),
        ("bump_super1.5_quad", "quadratic", 1.5, 0.6, 0.9, (0.2, 0.05)),
    ]
    for name, prof, p, shear, angle, c in gauge_bumps:
        specs.append({"name": name, "kind": "bump", "profile": prof, "p": p, "radius": 0.42,
                      "matrix": _shear(shear, angle), "center": list(c)})
    for i in range(5):
        nb = 2 + i % 3
        bumps = []
        for _ in range(nb):
            r = float(rng.uniform(0.2, 0.3))
            ang = rng.uniform(0, 2 * np.pi)
            dist = rng.uniform(0.1, 0.65 - r)
            bumps.append({"profile": str(rng.choice(["biquadratic", "smooth", "quadratic"])),
                          "radius": r, "height": float(rng.uniform(0.5, 1.0)),
                          "center": [float(dist * np.cos(ang)), float(dist * np.sin(ang))]})
        specs.append({"name": f"multi_bump_{i}", "kind": "multi_bump", "bumps": bumps})
    for i in range(5):
        specs.append({"name": f"star_cone_{i}", "kind": "star_cone",
                      "body": {"kind": "random_star", "seed": seed * 1000 + 17 + i,
                               "amplitude": 0.07, "scale": 0.5},
                      "center": [float(v) for v in rng.uniform(-0.08, 0.08, size=2)]})
    return specs


def default_body_specs(seed: int = 0) -> list[dict]:
    """12 bodies for projection-body experiments: the disk, ellipses, star bodies."""
    specs = [
        {"name": "disk", "kind": "ball", "radius": 1.0},
        {"name": "ellipse_2_0.5", "kind": "ellipse", "a": 2.0, "b": 0.5},
        {"name": "ellipse_1.5_0.8_rot", "kind": "ellipse", "a": 1.5, "b": 0.8, "angle": 0.7},
        {"name": "rose_3", "kind": "rose", "k": 3, "amplitude": 0.3},
    ]
    for i in range(8):
        specs.append({"name": f"random_star_{i}", "kind": "random_star",
                      "seed": seed * 1000 + 101 + i, "amplitude": 0.04 + 0.02 * (i % 4)})
    return specs


def default_phi_specs() -> list[dict]:
    return [
        {"family": "power", "p": 1.5},
        {"family": "power", "p": 2.0},
        {"family": "power", "p": 3.0},
        {"family": "asymmetric_power", "p": 2.0, "lambda": 0.3},
        {"family": "asymmetric_power", "p": 2.0, "lambda": 0.0},
        {"family": "exponential"},
    ]


def default_config(seed: int = 0) -> dict:
    return {
        "seed": seed,
        "grid": {"half_width": 1.0, "resolution": 128, "dim": 2},
        "quadrature": {"count": 512},
        "fields": default_field_specs(seed),
        "bodies": default_body_specs(seed),
        "phis": default_phi_specs(),
        "tolerances": {},
        "out": "results",
    }


def load_config(path) -> dict:
    """Read a JSON config; missing keys fall back to :func:`default_config`."""
    data = json.loads(Path(path).read_text())
    cfg = default_config(int(data.get("seed", 0)))
    cfg.update(data)
    return cfg


def make_grid(cfg: dict) -> Grid:
    g = cfg["grid"]
    return Grid.square(g.get("half_width", 1.0), g.get("resolution", 128), g.get("dim", 2))


def build_fields(cfg: dict) -> list[ScalarField]:
    grid = make_grid(cfg)
    return [field_from_spec(grid, s) for s in cfg["fields"]]


def build_bodies(cfg: dict) -> list[StarBody]:
    q = make_quadrature(cfg["grid"].get("dim", 2), cfg["quadrature"]["count"])
    return [body_from_spec(q, s) for s in cfg["bodies"]]


def build_phis(cfg: dict):
    return [from_spec(s) for s in cfg["phis"]]
