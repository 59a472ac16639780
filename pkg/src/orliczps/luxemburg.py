"""Luxemburg-type norms via a certified monotone root find.

For samples ``g_i`` with weights ``w_i`` and normalising mass ``M`` the
modular ``m(lam) = (1/M) sum_i w_i phi(g_i / lam)`` is continuous and strictly
decreasing as soon as one sample sits on a side where ``phi`` is strictly
monotone, so the norm ``inf{lam > 0 : m(lam) <= 1}`` is the unique root of
``m(lam) = 1``.

The bracket is certified before iterating: ``hi = max|g| / c_phi`` gives
``m(hi) <= 1`` and convexity (``phi(s t) >= s phi(t)`` for ``s >= 1``) gives
``m(hi * m(hi)) >= 1``.  The bracket is then shrunk by false position on
``(log lam, log m)`` with the Illinois modification, falling back to plain
bisection whenever a step does not halve the bracket.  No derivative of
``phi`` is used.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .field import GradientField, ScalarField, _check_unit, gradient
from .orlicz import OrliczFunction

log = logging.getLogger(__name__)

__all__ = [
    "WeightedSampleSet",
    "RootCertificate",
    "modular",
    "luxemburg_norm",
    "luxemburg_solve",
    "solve_batch",
    "directional_norm",
    "directional_norms",
    "gradient_norm",
    "field_samples",
    "c_phi",
    "CERT_TOL",
]

CERT_TOL = 1e-10
MAX_ITER = 80
_ROW_BLOCK = 128


@dataclass(frozen=True)
class WeightedSampleSet:
    samples: np.ndarray
    weights: np.ndarray
    total_mass: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).ravel()
        w = np.broadcast_to(np.asarray(self.weights, dtype=float), s.shape).copy()
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if not self.total_mass > 0:
            raise ValueError("total_mass must be positive")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "total_mass", float(self.total_mass))

    def scaled(self, c: float) -> "WeightedSampleSet":
        return WeightedSampleSet(c * self.samples, self.weights, self.total_mass)


@dataclass(frozen=True)
class RootCertificate:
    value: float
    status: str  # "ok", "zero" or "kernel"
    residual: float = 0.0  # |m(value) - 1|
    bracket: tuple = (math.nan, math.nan)
    bracket_modular: tuple = (math.nan, math.nan)
    iterations: int = 0


def modular(s: WeightedSampleSet, phi: OrliczFunction, lam: float) -> float:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    with np.errstate(over="ignore"):
        vals = phi(s.samples / lam)
    return float(np.dot(s.weights, vals) / s.total_mass)


def _modular_rows(S, w, mass, phi, lam):
    with np.errstate(over="ignore", invalid="ignore"):
        return (phi(S / lam[:, None]) @ w) / mass


def c_phi(phi: OrliczFunction) -> float:
    """Largest c > 0 with Phi(c) <= 1, by bisection to full precision."""
    hi = 1.0
    while phi.big_phi(hi) <= 1.0:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("Phi never exceeds 1; phi is not in the admissible class")
    lo = 0.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi.big_phi(mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    # lo satisfies Phi(lo) <= 1 and is the largest such double
    return lo


def solve_batch(S: np.ndarray, weights: np.ndarray, total_mass: float,
                phi: OrliczFunction, *, cphi: float | None = None,
                max_iter: int = MAX_ITER) -> list[RootCertificate]:
    """Solve ``m(lam) = 1`` for every row of the sample matrix ``S``."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    w = np.asarray(weights, dtype=float)
    if cphi is None:
        cphi = c_phi(phi)
    out: list[RootCertificate] = []
    for start in range(0, S.shape[0], _ROW_BLOCK):
        out.extend(_solve_block(S[start:start + _ROW_BLOCK], w, total_mass, phi, cphi, max_iter))
    return out


def _solve_block(S, w, mass, phi, cphi, max_iter):
    K = S.shape[0]
    certs: list[RootCertificate | None] = [None] * K
    amax = np.max(np.abs(S), axis=1)
    pos_ok = phi.positive_active
    neg_ok = phi.negative_active
    sensitive = ((S > 0) & pos_ok) | ((S < 0) & neg_ok)
    live = []
    for k in range(K):
        if amax[k] == 0:
            certs[k] = RootCertificate(0.0, "zero")
        elif not sensitive[k].any():
            log.info("samples lie in the kernel of phi; returning +inf sentinel")
            certs[k] = RootCertificate(math.inf, "kernel")
        else:
            live.append(k)
    if not live:
        return certs
    rows = np.array(live)
    A = S[rows]

    hi = amax[rows] / cphi
    m_hi = _modular_rows(A, w, mass, phi, hi)
    while np.any(m_hi > 1.0):
        bad = m_hi > 1.0
        hi[bad] *= 2.0
        m_hi[bad] = _modular_rows(A[bad], w, mass, phi, hi[bad])

    lo = np.where(m_hi > 0, hi * m_hi, 0.5 * hi)
    m_lo = _modular_rows(A, w, mass, phi, lo)
    while np.any(m_lo < 1.0):
        bad = m_lo < 1.0
        lo[bad] *= 0.5
        m_lo[bad] = _modular_rows(A[bad], w, mass, phi, lo[bad])
    bracket0 = (lo.copy(), hi.copy(), m_lo.copy(), m_hi.copy())

    # best point seen per row (smallest |m - 1|)
    best = np.where(np.abs(m_hi - 1) <= np.abs(m_lo - 1), hi, lo)
    best_r = np.minimum(np.abs(m_hi - 1), np.abs(m_lo - 1))
    # Illinois bookkeeping: y = log m, scaled copies for the stuck side
    ya = np.log(m_lo)
    yb = np.log(np.maximum(m_hi, 1e-300))
    side = np.zeros(len(rows), dtype=int)  # +1 last replaced lo, -1 hi
    ref_width = np.log(hi) - np.log(lo)
    slow = np.zeros(len(rows), dtype=int)  # steps since the bracket last halved
    iters = np.zeros(len(rows), dtype=int)
    active = best_r > 1e-13

    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        xa = np.log(lo[idx])
        xb = np.log(hi[idx])
        a_y = ya[idx]
        b_y = yb[idx]
        with np.errstate(invalid="ignore", divide="ignore"):
            x = xb - b_y * (xb - xa) / (b_y - a_y)
        mid = 0.5 * (xa + xb)
        stuck = slow[idx] >= 4
        use_mid = ~np.isfinite(x) | (x <= xa) | (x >= xb) | ~np.isfinite(a_y) | stuck
        x = np.where(use_mid, mid, x)
        lam = np.exp(x)
        m = _modular_rows(A[idx], w, mass, phi, lam)
        iters[idx] += 1
        r = np.abs(m - 1.0)
        better = r < best_r[idx]
        best[idx[better]] = lam[better]
        best_r[idx[better]] = r[better]

        y = np.log(np.maximum(m, 1e-300))
        upper = m >= 1.0  # root lies above lam -> replace lo
        for j, k in enumerate(idx):
            if upper[j]:
                lo[k] = lam[j]
                ya[k] = y[j]
                if side[k] == 1:
                    yb[k] *= 0.5
                side[k] = 1
            else:
                hi[k] = lam[j]
                yb[k] = y[j]
                if side[k] == -1:
                    ya[k] *= 0.5
                side[k] = -1
        new_width = np.log(hi[idx]) - np.log(lo[idx])
        halved = new_width <= 0.5 * ref_width[idx]
        ref_width[idx] = np.where(halved, new_width, ref_width[idx])
        slow[idx] = np.where(halved, 0, slow[idx] + 1)
        done = (best_r[idx] <= 1e-13) | (new_width <= 4e-16)
        active[idx[done]] = False

    for j, k in enumerate(rows):
        certs[k] = RootCertificate(
            float(best[j]), "ok", float(best_r[j]),
            (float(bracket0[0][j]), float(bracket0[1][j])),
            (float(bracket0[2][j]), float(bracket0[3][j])),
            int(iters[j]),
        )
        if best_r[j] > CERT_TOL:
            log.warning("Luxemburg root residual %.3g exceeds %.1g", best_r[j], CERT_TOL)
    return certs


def luxemburg_solve(s: WeightedSampleSet, phi: OrliczFunction) -> RootCertificate:
    return solve_batch(s.samples[None, :], s.weights, s.total_mass, phi)[0]


def luxemburg_norm(s: WeightedSampleSet, phi: OrliczFunction) -> float:
    """inf{lam > 0 : modular(s, phi, lam) <= 1}.

    Returns 0 for all-zero samples and ``inf`` (with a log record) when every
    sample sits where ``phi`` vanishes identically.
    """
    return luxemburg_solve(s, phi).value


def field_samples(f: ScalarField, grad: GradientField | None = None):
    """Support gradients, per-cell weight and the support measure ``|G|``."""
    G = gradient(f) if grad is None else grad
    supp = f.values > 0
    vecs = G.vectors[supp]
    return vecs, f.grid.cell_volume, float(np.count_nonzero(supp) * f.grid.cell_volume)


def directional_norms(f: ScalarField, directions, phi: OrliczFunction,
                      grad: GradientField | None = None, *, certificates: bool = False):
    """``||v||_{f,phi}`` for each row ``v`` of ``directions`` (need not be unit)."""
    V = np.atleast_2d(np.asarray(directions, dtype=float))
    vecs, cell, mass = field_samples(f, grad)
    if vecs.shape[0] == 0:
        raise ValueError("field has empty support")
    # flat cells contribute phi(0) = 0 whatever lam is
    moving = np.any(vecs != 0, axis=1)
    vecs = vecs[moving]
    w = np.full(vecs.shape[0], cell)
    certs = solve_batch(V @ vecs.T, w, mass, phi)
    vals = np.array([c.value for c in certs])
    return (vals, certs) if certificates else vals


def directional_norm(f: ScalarField, v, phi: OrliczFunction,
                     grad: GradientField | None = None) -> float:
    v = _check_unit(v, f.grid.dim)
    return float(directional_norms(f, v[None, :], phi, grad)[0])


def gradient_norm(f: ScalarField, phi: OrliczFunction, grad: GradientField | None = None) -> float:
    """Mean-normalised ``|| |grad f| ||_Phi`` over the support of ``f``."""
    vecs, cell, mass = field_samples(f, grad)
    mags = np.sqrt(np.sum(vecs**2, axis=1))
    mags = mags[mags > 0]
    if mags.size == 0:
        return 0.0
    return solve_batch(mags[None, :], np.full(mags.size, cell), mass, phi.envelope())[0].value
