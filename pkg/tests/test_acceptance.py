"""Acceptance run: one test per criterion, each printing a PASS/FAIL line.

Run just this file with ``pytest tests/test_acceptance.py -v -s`` or
``pytest -m acceptance``.  The corpus is the default 20-field, 6-phi,
12-body configuration on a 128^2 grid with 512 quadrature nodes.
"""

import time

import numpy as np
import pytest

from orliczps.affine_ball import energy_from_volume, make_quadrature
from orliczps.corpus import build_bodies, default_config, field_from_spec
from orliczps.field import Grid, gradient
from orliczps.luxemburg import CERT_TOL, c_phi, directional_norms
from orliczps.orlicz import asymmetric_power, exponential, power
from orliczps.rearrangement import DirectionSchedule, approximate_sdr, sdr, steiner
from orliczps.star import cone_function, disk
from orliczps.suites import (
    RunContext,
    suite_affine_ps,
    suite_bridge,
    suite_euclidean_ps,
    suite_petty,
    suite_sandwich,
    suite_sl_invariance,
    suite_steiner_inclusion,
)

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

ROUND_OFF_CENTER_BUMP = {"kind": "radial", "profile": "quadratic", "radius": 0.4,
                         "center": [0.25, -0.15]}


@pytest.fixture(scope="module")
def cfg():
    return default_config(0)


@pytest.fixture(scope="module")
def ctx(cfg):
    return RunContext(cfg)


def verdict(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}")
    assert ok, detail


def summary_line(rep):
    s = rep.summary()
    return (f"{s['pass']} pass, {s['fail']} fail, {s['skipped']} skipped, "
            f"min margin {s['min_margin']:.4g}")


def test_criterion_01_affine_polya_szego(ctx, capsys):
    t0 = time.perf_counter()
    rep = suite_affine_ps(ctx.cfg, ctx)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and len(rep.cases) == 120 and not rep.skipped and elapsed <= 300
    verdict(capsys, 1, "affine Orlicz Polya-Szego", ok,
            f"{summary_line(rep)}, {elapsed:.1f} s")


def test_criterion_02_euclidean_polya_szego(ctx, capsys):
    rep = suite_euclidean_ps(ctx.cfg, ctx)
    verdict(capsys, 2, "Euclidean Orlicz Polya-Szego", rep.passed and len(rep.cases) == 120,
            summary_line(rep))


def test_criterion_03_cone_closed_form(capsys):
    q = make_quadrature(2, 512)
    f = cone_function(disk(q), Grid.square(1.1, 256))
    g = gradient(f)
    norms = directional_norms(f, q.nodes, power(2), g)
    gap = float(np.max(np.abs(norms / 2 ** -0.5 - 1)))
    # B is the disk of radius sqrt(2), so E = |B|^(-1/2) = (2 pi)^(-1/2)
    vol = 0.5 * float(np.sum(q.weights / norms ** 2))
    e_gap = abs(energy_from_volume(vol, 2) / (2 * np.pi) ** -0.5 - 1)
    verdict(capsys, 3, "cone closed form", gap <= 0.01 and e_gap <= 0.01,
            f"max norm gap {gap:.3%} over 512 directions, energy gap {e_gap:.3%}")


def test_criterion_04_bridge_identity(cfg, capsys):
    bodies = build_bodies(cfg)[:6]
    phis = [power(1.5), power(3), asymmetric_power(2, 0.3), exponential()]
    rep = suite_bridge(cfg, bodies, phis)
    worst = max(c.quantities["sup_gap"] for c in rep.cases)
    verdict(capsys, 4, "bridge identity", rep.passed and len(rep.cases) == 24,
            f"{summary_line(rep)}, worst sup gap {worst:.3%}")


def test_criterion_05_sl_invariance(cfg, capsys):
    rep = suite_sl_invariance(cfg, count=20, max_cond=4.0)
    conds = [c.quantities["cond"] for c in rep.cases]
    ok = rep.passed and len(rep.cases) == 20 * 20 * 6 and max(conds) <= 4.0 + 1e-9
    verdict(capsys, 5, "SL(2) invariance", ok, summary_line(rep))


def test_criterion_06_steiner_inclusion(ctx, capsys):
    rep = suite_steiner_inclusion(ctx.cfg, ctx, chain_steps=10)
    chains = [c for c in rep.cases if c.case_id.endswith("|chain")]
    ok = rep.passed and len(chains) == 120 and not rep.skipped
    verdict(capsys, 6, "Steiner inclusion and volume chain", ok, summary_line(rep))


def test_criterion_07_petty(cfg, capsys):
    rep = suite_petty(cfg)
    corpus = [c for c in rep.cases if not c.note]
    ellipses = [c for c in rep.cases if c.note]
    ok = rep.passed and len(corpus) == 12 * 6 and ellipses
    verdict(capsys, 7, "Petty ratio", ok, summary_line(rep))


def test_criterion_08_sandwich(ctx, capsys):
    rep = suite_sandwich(ctx.cfg, ctx)
    lo, up = rep.config["c_lower"], rep.config["c_upper"]
    consts = abs(lo - 2 / np.pi ** 1.5) < 1e-15 and abs(up - np.pi ** -0.5) < 1e-15
    even = sum(phi.is_even for phi in ctx.phis)
    checked = [c for c in rep.cases if c.verdict != "info"]
    ok = rep.passed and consts and len(checked) == 20 * even
    verdict(capsys, 8, "sandwich", ok, summary_line(rep))


def _cell_counts(values, levels):
    return np.array([np.count_nonzero(values > t) for t in levels])


def _radially_monotone(f, tol=1e-12):
    r2 = np.sum((f.grid.coords() - f.grid.center) ** 2, axis=-1).ravel()
    v = f.values.ravel()
    keys = np.round(r2, 12)
    uniq, inv = np.unique(keys, return_inverse=True)
    hi = np.full(uniq.size, -np.inf)
    lo = np.full(uniq.size, np.inf)
    np.maximum.at(hi, inv, v)
    np.minimum.at(lo, inv, v)
    # constant on each sphere and no rise between consecutive spheres
    return float(max(np.max(hi - lo), np.max(hi[1:] - lo[:-1])))


def test_criterion_09_rearrangement_invariants(ctx, capsys):
    worst_count = 0
    worst_mono = 0.0
    for f in ctx.fields:
        levels = np.linspace(0, f.max(), 66)[1:-1]
        ref = _cell_counts(f.values, levels)
        cur = f
        for k in range(4):
            cur = steiner(cur, np.eye(2)[k % 2])
            worst_count = max(worst_count, int(np.max(np.abs(_cell_counts(cur.values, levels)
                                                              - ref))))
        worst_mono = max(worst_mono, _radially_monotone(sdr(f)))
    bump = field_from_spec(Grid.square(1.0, 128), ROUND_OFF_CENTER_BUMP)
    _, trace = approximate_sdr(bump, DirectionSchedule.axes_cyclic(2, 40), 40)
    l1 = trace.l1[-1] / bump.integral()
    ok = worst_count == 0 and worst_mono <= 1e-12 and l1 <= 0.03
    verdict(capsys, 9, "rearrangement invariants", ok,
            f"max cell-count discrepancy {worst_count}, sdr monotonicity defect "
            f"{worst_mono:.2e}, approximate sdr L1 {l1:.3%}")


def test_criterion_10_solver_certificates(ctx, capsys):
    residuals = []
    for i in range(len(ctx.fields)):
        for j in range(len(ctx.phis)):
            residuals.append(ctx.ball(i, j).meta["max_residual"])
    worst = max(residuals)
    powers = max(abs(c_phi(power(p)) - 1) for p in (1.1, 1.5, 2, 3, 10))
    asym = abs(c_phi(asymmetric_power(2, 0.3)) - 0.7 ** -0.5)
    ok = worst <= CERT_TOL and powers <= 1e-12 and asym <= 1e-10
    verdict(capsys, 10, "solver certificates", ok,
            f"worst residual {worst:.2e} over {len(residuals)} balls, "
            f"c_phi(power) error {powers:.1e}, c_phi(asym) error {asym:.1e}")
