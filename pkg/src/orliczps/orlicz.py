"""Convex Young-type functions phi and their even envelopes Phi.

An :class:`OrliczFunction` wraps a vectorised evaluator ``phi: R -> [0, inf)``
that is convex, vanishes at 0, is strictly monotone on at least one
half-line, and whose envelope ``Phi(t) = max(phi(t), phi(-t))`` grows
superlinearly.  Constructors are provided for the power, asymmetric power,
exponential and piecewise-linear families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "OrliczFunction",
    "ValidationReport",
    "CheckResult",
    "power",
    "asymmetric_power",
    "exponential",
    "custom",
    "from_spec",
    "big_phi",
    "validate",
    "convexity_split_check",
    "psi_monotone_check",
]

FAMILIES = ("power", "asymmetric_power", "exponential", "custom", "envelope")

# probe point used to decide whether a half-line is in the kernel of phi
_FAR = 1.0e6


@dataclass(frozen=True)
class OrliczFunction:
    evaluator: Callable[[np.ndarray], np.ndarray]
    family: str
    params: tuple = ()
    is_even: bool = False
    # degree p when phi(c t) = c^p phi(t) for c > 0, else None
    homogeneity: float | None = None
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = self.evaluator(t)
        if out.ndim == 0:
            return float(out)
        return out

    def eval(self, t):
        return self(t)

    def big_phi(self, t):
        """Phi(t) = max(phi(t), phi(-t)), t >= 0."""
        t = np.asarray(t, dtype=float)
        out = np.maximum(self(t), self(-t))
        return float(out) if np.ndim(out) == 0 else out

    def envelope(self) -> "OrliczFunction":
        """The even function t -> Phi(|t|), used for Euclidean gradient norms."""
        parent = self

        def ev(t):
            a = np.abs(t)
            return np.maximum(parent.evaluator(a), parent.evaluator(-a))

        return OrliczFunction(
            ev,
            "envelope",
            params=(parent.family,) + tuple(parent.params),
            is_even=True,
            homogeneity=parent.homogeneity,
            spec={"envelope_of": parent.spec},
        )

    @property
    def positive_active(self) -> bool:
        """True unless phi vanishes on the whole of [0, inf)."""
        return bool(self(_FAR) > 0)

    @property
    def negative_active(self) -> bool:
        return bool(self(-_FAR) > 0)

    def __repr__(self):
        return f"OrliczFunction({self.family}, params={self.params})"


def _pow_abs(x, p):
    # integer exponents are far cheaper through repeated multiplication
    a = np.abs(x)
    if p == 2.0:
        return a * a
    if p == 3.0:
        return a * a * a
    if p == 4.0:
        b = a * a
        return b * b
    return a**p


def power(p: float) -> OrliczFunction:
    """phi(t) = |t|^p, p > 1."""
    p = float(p)
    if not p > 1:
        raise ValueError(f"power family needs p > 1 (got {p}); Phi must be superlinear")
    return OrliczFunction(
        lambda t: _pow_abs(t, p),
        "power",
        params=(p,),
        is_even=True,
        homogeneity=p,
        spec={"family": "power", "p": p},
    )


def asymmetric_power(p: float, lam: float) -> OrliczFunction:
    """phi(t) = (1 - lam) (t)_+^p + lam (t)_-^p."""
    p = float(p)
    lam = float(lam)
    if not p > 1:
        raise ValueError(f"asymmetric_power needs p > 1 (got {p})")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1] (got {lam})")

    def ev(t):
        pos = _pow_abs(np.maximum(t, 0.0), p)
        neg = _pow_abs(np.maximum(-t, 0.0), p)
        return (1.0 - lam) * pos + lam * neg

    return OrliczFunction(
        ev,
        "asymmetric_power",
        params=(p, lam),
        is_even=(lam == 0.5),
        homogeneity=p,
        spec={"family": "asymmetric_power", "p": p, "lambda": lam},
    )


def exponential() -> OrliczFunction:
    """phi(t) = exp(|t|) - |t| - 1."""

    def ev(t):
        a = np.abs(t)
        # expm1 keeps precision near 0 where phi ~ t^2 / 2
        return np.expm1(a) - a

    return OrliczFunction(ev, "exponential", params=(), is_even=True,
                          spec={"family": "exponential"})


def custom(breakpoints: Sequence[float], values: Sequence[float]) -> OrliczFunction:
    """Piecewise-linear phi through ``(breakpoints[i], values[i])``.

    Outside the table the first and last slopes are continued linearly.
    """
    xs = np.asarray(breakpoints, dtype=float)
    ys = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("breakpoints and values must be 1-D arrays of equal length >= 2")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    left_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
    right_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])

    def ev(t):
        out = np.interp(t, xs, ys)
        out = np.where(t < xs[0], ys[0] + left_slope * (t - xs[0]), out)
        out = np.where(t > xs[-1], ys[-1] + right_slope * (t - xs[-1]), out)
        return out

    even = bool(np.allclose(ev(-xs), ev(xs), rtol=0, atol=1e-14))
    return OrliczFunction(
        ev,
        "custom",
        params=tuple(xs.tolist()) + tuple(ys.tolist()),
        is_even=even,
        spec={"family": "custom", "breakpoints": xs.tolist(), "values": ys.tolist()},
    )


def from_spec(spec: dict) -> OrliczFunction:
    """Build from a config dict such as ``{"family": "power", "p": 2}``."""
    fam = spec.get("family")
    if fam == "power":
        return power(spec["p"])
    if fam == "asymmetric_power":
        return asymmetric_power(spec["p"], spec["lambda"])
    if fam == "exponential":
        return exponential()
    if fam == "custom":
        return custom(spec["breakpoints"], spec["values"])
    raise ValueError(f"unknown phi family {fam!r}")


def big_phi(phi: OrliczFunction, t):
    if np.any(np.asarray(t) < 0):
        raise ValueError("big_phi is defined for t >= 0")
    return phi.big_phi(t)


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: list | None = None
    note: str = ""


@dataclass
class ValidationReport:
    family: str
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {
            "family": self.family,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "witness": c.witness, "note": c.note}
                for c in self.checks
            ],
        }


def _strictly_monotone(vals) -> tuple[bool, int | None]:
    vals = np.asarray(vals, dtype=float)
    with np.errstate(invalid="ignore"):
        d = np.diff(vals)
    overflow = np.isinf(vals[:-1]) & np.isinf(vals[1:])
    bad = np.nonzero(~((d > 0) | overflow))[0]
    return (bad.size == 0, None if bad.size == 0 else int(bad[0]))


def validate(phi: OrliczFunction, T: float = 1e3, grid_count: int = 256,
             tol: float = 1e-12) -> ValidationReport:
    """Sample the class invariants of ``phi`` on ``[-T, T]``.

    Failures are reported, never raised.
    """
    if T <= 0 or grid_count < 64:
        raise ValueError("need T > 0 and grid_count >= 64")
    checks = []

    z = phi(0.0)
    checks.append(CheckResult("zero_at_origin", z == 0.0, [0.0, z]))

    s = np.linspace(-T, T, grid_count)
    vals = phi(s)
    mid = phi(0.5 * (s[:, None] + s[None, :]))
    gap = mid - 0.5 * (vals[:, None] + vals[None, :])
    finite = np.isfinite(gap)
    worst = np.where(finite, gap, -np.inf)
    i, j = np.unravel_index(np.argmax(worst), worst.shape)
    ok = bool(worst[i, j] <= tol)
    checks.append(CheckResult("midpoint_convexity", ok,
                              [float(s[i]), float(s[j]), float(worst[i, j])]))

    tpos = np.linspace(0.0, T, grid_count)
    inc_ok, inc_at = _strictly_monotone(phi(tpos))
    dec_ok, dec_at = _strictly_monotone(phi(-tpos))
    inc_vacuous = bool(np.all(phi(tpos) == 0.0))
    dec_vacuous = bool(np.all(phi(-tpos) == 0.0))
    checks.append(CheckResult(
        "increasing_on_positive", inc_ok,
        None if inc_ok else [float(tpos[inc_at]), float(tpos[inc_at + 1])],
        "vacuous: phi vanishes on [0, inf)" if inc_vacuous else ""))
    checks.append(CheckResult(
        "decreasing_on_negative", dec_ok,
        None if dec_ok else [float(-tpos[dec_at]), float(-tpos[dec_at + 1])],
        "vacuous: phi vanishes on (-inf, 0]" if dec_vacuous else ""))
    # class membership needs one strict branch, not both
    for c in checks[-2:]:
        if not c.passed and (inc_ok or dec_ok):
            c.passed = True
            c.note = c.note or "branch not strict; the other branch is"

    ts = np.array([1e1, 1e2, 1e3, 1e4])
    ratios = phi.big_phi(ts) / ts
    r = np.where(np.isfinite(ratios), ratios, np.inf)
    sup_ok = True
    for a, b in zip(r[:-1], r[1:]):
        if math.isinf(a) and math.isinf(b):
            continue  # overflow witnesses unbounded growth
        if not b > a:
            sup_ok = False
    checks.append(CheckResult("superlinearity", sup_ok, [float(x) for x in r]))
    return ValidationReport(phi.family, checks)


def convexity_split_check(phi: OrliczFunction, a_list, b_list, tol: float = 1e-10) -> bool:
    """sum(b) phi(sum(a)/sum(b)) <= sum(b_i phi(a_i/b_i))."""
    a = np.asarray(a_list, dtype=float)
    b = np.asarray(b_list, dtype=float)
    if np.any(b <= 0):
        raise ValueError("all b_i must be positive")
    lhs = b.sum() * phi(a.sum() / b.sum())
    rhs = float(np.sum(b * phi(a / b)))
    return bool(lhs <= rhs + tol)


def psi_monotone_check(phi: OrliczFunction, a: float, b: float,
                       t_max: float = 10.0, count: int = 512, tol: float = 1e-12) -> bool:
    """Psi(t) = phi(a t - b) + phi(-a t - b) is nondecreasing on t > 0."""
    if a == 0:
        raise ValueError("a must be nonzero")
    t = np.linspace(t_max / count, t_max, count)
    psi = phi(a * t - b) + phi(-a * t - b)
    scale = np.maximum(1.0, np.abs(psi[:-1]))
    return bool(np.all(np.diff(psi) >= -tol * scale))
