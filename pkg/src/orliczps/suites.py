"""Inequality suites over a configured corpus.

Each suite takes a config dict (see :func:`orliczps.corpus.default_config`)
and returns a :class:`SuiteReport`.  Suites can share a :class:`RunContext`
so that gradients, rearrangements and energies are computed once per
``(field, phi)`` pair.  A degenerate affine ball (some direction with an
infinite norm) turns the case into ``skipped`` with a log record; it never
counts as a pass.
"""

from __future__ import annotations

import copy
import logging
import math

import numpy as np

from .affine_ball import (
    DegenerateBodyError,
    RadialBody,
    affine_ball,
    body_volume,
    energy_from_volume,
    make_quadrature,
    random_sl,
    sl_transform,
)
from .corpus import build_bodies, build_fields, build_phis, field_from_spec, make_grid
from .field import Grid, gradient, unit_ball_volume
from .luxemburg import gradient_norm
from .orlicz import OrliczFunction
from .rearrangement import DirectionSchedule, sdr, steiner, steiner_body
from .report import SuiteReport
from .star import bridge_check, ellipse, equal_volume_ball, petty_ratio

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_TOLERANCES",
    "RunContext",
    "SUITES",
    "run_suite",
    "suite_affine_ps",
    "suite_euclidean_ps",
    "suite_steiner_inclusion",
    "suite_petty",
    "suite_sandwich",
    "suite_sl_invariance",
    "suite_bridge",
    "sandwich_constants",
]

DEFAULT_TOLERANCES = {
    "affine_ps": 0.02,
    "euclidean_ps": 0.02,
    "steiner_inclusion": 0.03,
    "steiner_chain": 0.01,
    "petty": 0.005,
    "petty_ellipse": 0.015,
    "sandwich": 0.02,
    "sl_invariance": 0.015,
    "bridge": 0.03,
}


def _tol(cfg, key):
    return float(cfg.get("tolerances", {}).get(key, DEFAULT_TOLERANCES[key]))


def _phi_label(phi: OrliczFunction) -> str:
    if phi.family == "power":
        return f"power({phi.params[0]:g})"
    if phi.family == "asymmetric_power":
        return f"asymmetric_power({phi.params[0]:g},{phi.params[1]:g})"
    return phi.family


def _body_plot(K, overlays=()):
    q = K.quadrature
    ang = q.angles.tolist()
    return {"angles": ang, "radial": K.radial.tolist(),
            "overlays": [{"angles": ang, "radial": o.radial.tolist()} for o in overlays]}


class RunContext:
    """Corpus plus memoised per-(field, phi) quantities for one run."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.grid = make_grid(cfg)
        self.q = make_quadrature(self.grid.dim, int(cfg["quadrature"]["count"]))
        self.specs = cfg["fields"]
        self.fields = build_fields(cfg)
        self.phis = build_phis(cfg)
        self._cache: dict = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def name(self, i: int) -> str:
        return self.fields[i].meta.get("name", f"field_{i}")

    def is_radial(self, i: int) -> bool:
        return bool(self.specs[i].get("radial", False))

    def grad(self, i):
        return self._memo(("grad", i), lambda: gradient(self.fields[i]))

    def star(self, i):
        return self._memo(("sdr", i), lambda: sdr(self.fields[i]))

    def star_grad(self, i):
        return self._memo(("sdr_grad", i), lambda: gradient(self.star(i)))

    def ball(self, i, j, star=False):
        def build():
            f = self.star(i) if star else self.fields[i]
            g = self.star_grad(i) if star else self.grad(i)
            return affine_ball(f, self.phis[j], self.q, g)
        return self._memo(("ball", i, j, star), build)

    def energy(self, i, j, star=False):
        return energy_from_volume(body_volume(self.ball(i, j, star)), self.grid.dim)

    def grad_norm(self, i, j, star=False):
        def build():
            f = self.star(i) if star else self.fields[i]
            g = self.star_grad(i) if star else self.grad(i)
            return gradient_norm(f, self.phis[j], g)
        return self._memo(("gnorm", i, j, star), build)


def _ctx(cfg, ctx):
    return ctx if ctx is not None else RunContext(cfg)


def _skip(rep, case_id, inputs, err):
    log.warning("skipping %s: %s", case_id, err)
    rep.add(case_id, "skipped", inputs, {"flagged_nodes": getattr(err, "flagged", [])},
            None, f"degenerate affine ball: {err}")


def suite_affine_ps(cfg: dict, ctx: RunContext | None = None) -> SuiteReport:
    """E_phi(f*) <= E_phi(f) (1 + tol); radial fields must also attain equality."""
    ctx = _ctx(cfg, ctx)
    tol = _tol(cfg, "affine_ps")
    rep = SuiteReport("affine_ps", config={"tol": tol})
    for i in range(len(ctx.fields)):
        for j, phi in enumerate(ctx.phis):
            cid = f"{ctx.name(i)}|{_phi_label(phi)}"
            inputs = {"field": ctx.specs[i], "phi": phi.spec}
            try:
                e = ctx.energy(i, j)
                es = ctx.energy(i, j, star=True)
            except DegenerateBodyError as err:
                _skip(rep, cid, inputs, err)
                continue
            ratio = es / e
            ok = ratio <= 1 + tol
            note = ""
            if ctx.is_radial(i):
                ok = ok and abs(ratio - 1) <= tol
                note = "radial control: equality expected"
            rep.add(cid, "pass" if ok else "fail", inputs,
                    {"energy": e, "energy_star": es, "ratio": ratio}, 1 + tol - ratio, note)
    return rep


def suite_euclidean_ps(cfg: dict, ctx: RunContext | None = None) -> SuiteReport:
    """|| |grad f*| ||_Phi <= || |grad f| ||_Phi (1 + tol)."""
    ctx = _ctx(cfg, ctx)
    tol = _tol(cfg, "euclidean_ps")
    rep = SuiteReport("euclidean_ps", config={"tol": tol})
    for i in range(len(ctx.fields)):
        for j, phi in enumerate(ctx.phis):
            n = ctx.grad_norm(i, j)
            ns = ctx.grad_norm(i, j, star=True)
            ratio = ns / n
            ok = ratio <= 1 + tol
            if ctx.is_radial(i):
                ok = ok and abs(ratio - 1) <= tol
            rep.add(f"{ctx.name(i)}|{_phi_label(phi)}", "pass" if ok else "fail",
                    {"field": ctx.specs[i], "phi": phi.spec},
                    {"norm": n, "norm_star": ns, "ratio": ratio}, 1 + tol - ratio)
    return rep


def suite_steiner_inclusion(cfg: dict, ctx: RunContext | None = None,
                            chain_steps: int = 10) -> SuiteReport:
    """S(B_phi(f)) inside B_phi(Sf) node-wise, plus the volume chain along axis steps."""
    ctx = _ctx(cfg, ctx)
    tol = _tol(cfg, "steiner_inclusion")
    chain_tol = _tol(cfg, "steiner_chain")
    method = cfg.get("steiner_method", "profile")
    rep = SuiteReport("steiner_inclusion", config={"tol": tol, "chain_tol": chain_tol,
                                                   "chain_steps": chain_steps,
                                                   "steiner_method": method})
    dim = ctx.grid.dim
    axes = np.eye(dim)
    for i, f in enumerate(ctx.fields):
        sym = [steiner(f, u, method) for u in axes]
        sym_grad = [gradient(s) for s in sym]
        for j, phi in enumerate(ctx.phis):
            base = f"{ctx.name(i)}|{_phi_label(phi)}"
            inputs = {"field": ctx.specs[i], "phi": phi.spec}
            try:
                B = ctx.ball(i, j)
            except DegenerateBodyError as err:
                _skip(rep, base, inputs, err)
                continue
            for k, u in enumerate(axes):
                cid = f"{base}|e{k + 1}"
                try:
                    Bs = affine_ball(sym[k], phi, ctx.q, sym_grad[k])
                except DegenerateBodyError as err:
                    _skip(rep, cid, inputs, err)
                    continue
                SB = steiner_body(B, u)
                worst = float(np.max(SB.radial / Bs.radial))
                quantities = {"max_radial_ratio": worst,
                              "volume_SB": body_volume(SB), "volume_BSf": body_volume(Bs)}
                if dim == 2:
                    quantities["body"] = _body_plot(Bs, [SB])
                rep.add(cid, "pass" if worst <= 1 + tol else "fail", {**inputs, "axis": k},
                        quantities, 1 + tol - worst)
            # monotone volume chain along e1, e2, e1, ...
            cur, vols = f, [body_volume(B)]
            verdict, worst_step = "pass", math.inf
            try:
                for s in range(chain_steps):
                    cur = steiner(cur, axes[s % dim], method)
                    vols.append(body_volume(affine_ball(cur, phi, ctx.q)))
                    step = vols[-1] / vols[-2] - (1 - chain_tol)
                    worst_step = min(worst_step, step)
                    if step < 0:
                        verdict = "fail"
            except DegenerateBodyError as err:
                _skip(rep, f"{base}|chain", inputs, err)
                continue
            rep.add(f"{base}|chain", verdict, {**inputs, "steps": chain_steps},
                    {"volumes": vols}, worst_step, "volumes nondecreasing up to chain_tol")
    return rep


def suite_petty(cfg: dict, bodies=None, ellipse_axes=(1.0, 1.5, 2.0, 3.0)) -> SuiteReport:
    """Ball maximises |polar projection body| / |K|; ellipses share the ball's value."""
    tol = _tol(cfg, "petty")
    etol = _tol(cfg, "petty_ellipse")
    bodies = build_bodies(cfg) if bodies is None else bodies
    phis = build_phis(cfg)
    rep = SuiteReport("petty", config={"tol": tol, "ellipse_tol": etol})
    for phi in phis:
        for K in bodies:
            ball = equal_volume_ball(K)
            r = petty_ratio(K, phi)
            rb = petty_ratio(ball, phi)
            q = {"ratio": r, "ball_ratio": rb}
            if K.dim == 2:
                q["body"] = _body_plot(K)
            rep.add(f"{K.name}|{_phi_label(phi)}", "pass" if r <= rb * (1 + tol) else "fail",
                    {"body": K.name, "phi": phi.spec}, q, rb * (1 + tol) - r)
        if bodies and bodies[0].dim == 2:
            qd = bodies[0].quadrature
            for a in ellipse_axes:
                for angle in (0.0, 0.6):
                    E = ellipse(qd, a, 1.0 / a, angle)
                    r = petty_ratio(E, phi)
                    rb = petty_ratio(equal_volume_ball(E), phi)
                    gap = abs(r / rb - 1)
                    rep.add(f"{E.name}|{_phi_label(phi)}", "pass" if gap <= etol else "fail",
                            {"body": E.name, "phi": phi.spec}, {"ratio": r, "ball_ratio": rb},
                            etol - gap, "ellipse: equality expected")
    return rep


def sandwich_constants(n: int) -> tuple[float, float]:
    """(2 omega_{n-1} / (n omega_n^{(n+1)/n}), omega_n^{-1/n})."""
    wn = unit_ball_volume(n)
    lower = 2 * unit_ball_volume(n - 1) / (n * wn ** ((n + 1) / n))
    return lower, wn ** (-1.0 / n)


def _shear_demo(phi: OrliczFunction, taus=(1, 2, 4, 8)) -> dict:
    """E_phi(f_tau) / ||grad f_tau||_Phi for f_tau(x) = f(x1 + tau x2, x2)."""
    grid = Grid.square(2.6, 384)
    q = make_quadrature(2, 256)
    ratios = []
    for t in taus:
        spec = {"kind": "bump", "profile": "biquadratic", "radius": 0.3,
                "matrix": [[1.0, float(t)], [0.0, 1.0]]}
        f = field_from_spec(grid, spec)
        g = gradient(f)
        e = energy_from_volume(body_volume(affine_ball(f, phi, q, g)), 2)
        ratios.append(e / gradient_norm(f, phi, g))
    return {"taus": list(taus), "ratios": ratios,
            "decreasing": bool(np.all(np.diff(ratios) < 0))}


def suite_sandwich(cfg: dict, ctx: RunContext | None = None, demo: bool = True) -> SuiteReport:
    """c_low ||grad f*||_Phi <= E(f*) <= E(f) <= c_up ||grad f||_Phi, even phi only."""
    ctx = _ctx(cfg, ctx)
    tol = _tol(cfg, "sandwich")
    lo_c, up_c = sandwich_constants(ctx.grid.dim)
    rep = SuiteReport("sandwich", config={"tol": tol, "c_lower": lo_c, "c_upper": up_c})
    for j, phi in enumerate(ctx.phis):
        if not phi.is_even:
            continue
        for i in range(len(ctx.fields)):
            cid = f"{ctx.name(i)}|{_phi_label(phi)}"
            inputs = {"field": ctx.specs[i], "phi": phi.spec}
            try:
                e, es = ctx.energy(i, j), ctx.energy(i, j, star=True)
            except DegenerateBodyError as err:
                _skip(rep, cid, inputs, err)
                continue
            ns, n = ctx.grad_norm(i, j, star=True), ctx.grad_norm(i, j)
            m1 = es * (1 + tol) - lo_c * ns
            m2 = e * (1 + tol) - es
            m3 = up_c * n * (1 + tol) - e
            margin = min(m1 / es, m2 / e, m3 / e)
            rep.add(cid, "pass" if margin >= 0 else "fail", inputs,
                    {"lower": lo_c * ns, "energy_star": es, "energy": e, "upper": up_c * n},
                    margin)
        if demo and ctx.grid.dim == 2:
            d = _shear_demo(phi)
            rep.add(f"shear_demo|{_phi_label(phi)}", "info", {"phi": phi.spec}, d, None,
                    "E / ||grad f||_Phi along a shear sequence; logged, not asserted")
    return rep


def suite_sl_invariance(cfg: dict, count: int = 20, max_cond: float = 4.0,
                        phis=None) -> SuiteReport:
    """|E(f o A) / E(f) - 1| <= tol for random A in SL(n) with cond(A) <= max_cond."""
    tol = _tol(cfg, "sl_invariance")
    sl_cfg = copy.deepcopy(cfg)
    sl_cfg["grid"] = {**cfg["grid"], **cfg.get("sl_grid", {"half_width": 1.6, "resolution": 256})}
    grid = make_grid(sl_cfg)
    q = make_quadrature(grid.dim, int(cfg["quadrature"]["count"]))
    phis = build_phis(cfg) if phis is None else phis
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    rep = SuiteReport("sl_invariance", config={"tol": tol, "count": count, "max_cond": max_cond})
    for spec in cfg["fields"]:
        f = field_from_spec(grid, spec)
        g = gradient(f)
        e0 = [energy_from_volume(body_volume(affine_ball(f, p, q, g)), grid.dim) for p in phis]
        for a in range(count):
            A = random_sl(rng, grid.dim, max_cond)
            fa = sl_transform(f, A)
            ga = gradient(fa)
            for p, e in zip(phis, e0):
                ea = energy_from_volume(body_volume(affine_ball(fa, p, q, ga)), grid.dim)
                gap = abs(ea / e - 1)
                rep.add(f"{spec.get('name')}|{_phi_label(p)}|A{a}",
                        "pass" if gap <= tol else "fail",
                        {"field": spec.get("name"), "phi": p.spec, "A": A.tolist()},
                        {"energy": e, "energy_A": ea, "cond": float(np.linalg.cond(A))},
                        tol - gap)
    return rep


def suite_bridge(cfg: dict, bodies=None, phis=None, resolution: int = 256) -> SuiteReport:
    """Grid cone norms against spherical projection-body support values."""
    tol = _tol(cfg, "bridge")
    bodies = build_bodies(cfg) if bodies is None else bodies
    phis = build_phis(cfg) if phis is None else phis
    rep = SuiteReport("bridge", config={"tol": tol, "resolution": resolution})
    for K in bodies:
        grid = Grid.square(1.15 * float(K.radial.max()), resolution, K.dim)
        for phi in phis:
            r = bridge_check(K, phi, K.quadrature, grid, tol)
            rep.add(f"{K.name}|{_phi_label(phi)}", "pass" if r.passed else "fail",
                    {"body": K.name, "phi": phi.spec}, {"sup_gap": r.sup_gap},
                    tol - r.sup_gap)
    return rep


SUITES = {
    "affine_ps": suite_affine_ps,
    "euclidean_ps": suite_euclidean_ps,
    "steiner_inclusion": suite_steiner_inclusion,
    "petty": suite_petty,
    "sandwich": suite_sandwich,
    "sl_invariance": suite_sl_invariance,
    "bridge": suite_bridge,
}

_CTX_SUITES = {"affine_ps", "euclidean_ps", "steiner_inclusion", "sandwich"}


def run_suite(name: str, cfg: dict, ctx: RunContext | None = None) -> SuiteReport:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    if name in _CTX_SUITES:
        return SUITES[name](cfg, ctx)
    return SUITES[name](cfg)
