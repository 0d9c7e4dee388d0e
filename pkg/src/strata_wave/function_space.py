"""Streamline coefficient functions: the Bernoulli function and the density.

Only five closed-form kinds are representable so that derivatives of any
order are exact (finite recurrences, never finite differences):

``constant``     ``coeffs = [c]``
``polynomial``   ``coeffs = [a0, a1, ...]``, ``f(p) = sum a_j p**j``
``series``       ``coeffs = [a0, a1, ...]``, ``f(p) = sum a_j (p - p0)**j``
``exponential``  ``coeffs = [A, lam]`` or ``[A, lam, B]``, ``f = A exp(lam p) + B``
``rational``     ``coeffs = [A, c, n]``, ``f = A (c - p)**(-n)``, pole ``c`` outside
                 ``[p0, 0]`` and ``n`` a positive integer
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, UnsupportedOrderError

KINDS = ("constant", "polynomial", "series", "exponential", "rational")
MAX_ORDER = 60
DEFAULT_PROBE_POINTS = 257
S_LATTICE_STEP = 0.05
_DOMAIN_SLACK = 1e-12
# Float rounding of k! against the product recurrence; keeps exact-boundary
# cases such as 1/(1-p) at p = 0 on the passing side.
_RATIO_RTOL = 1e-10


@dataclass(frozen=True)
class CoefficientFunction:
    kind: str
    coeffs: tuple
    p0: float
    s: Optional[float] = None
    M: Optional[float] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.p0 < 0:
            raise DomainError(f"p0 must be negative, got {self.p0}")
        if not self.coeffs:
            raise ValueError("coeffs must be nonempty")
        if self.kind == "constant" and len(self.coeffs) != 1:
            raise ValueError("constant kind takes exactly one coefficient")
        if self.kind == "exponential" and len(self.coeffs) not in (2, 3):
            raise ValueError("exponential kind takes [A, lam] or [A, lam, B]")
        if self.kind == "rational":
            if len(self.coeffs) != 3:
                raise ValueError("rational kind takes [A, c, n]")
            _, c, n = self.coeffs
            if n != int(n) or n < 1:
                raise ValueError("rational exponent n must be a positive integer")
            # pole must stay a fixed fraction of the interval away from [p0, 0]
            if self.p0 - 1e-9 * abs(self.p0) <= c <= 1e-9 * abs(self.p0):
                raise DomainError(f"rational pole c={c} lies in [{self.p0}, 0]")
        if self.s is not None and self.s < 1:
            raise ValueError("declared Gevrey index must be >= 1")
        if self.M is not None and self.M <= 0:
            raise ValueError("declared Gevrey constant must be > 0")

    # -- convenience constructors -------------------------------------------------
    @classmethod
    def constant(cls, value, p0, **kw):
        return cls("constant", (value,), p0, **kw)

    @classmethod
    def polynomial(cls, coeffs, p0, **kw):
        return cls("polynomial", tuple(coeffs), p0, **kw)

    @classmethod
    def series(cls, coeffs, p0, **kw):
        return cls("series", tuple(coeffs), p0, **kw)

    @classmethod
    def exponential(cls, amplitude, rate, p0, offset=0.0, **kw):
        return cls("exponential", (amplitude, rate, offset), p0, **kw)

    @classmethod
    def rational(cls, amplitude, pole, power, p0, **kw):
        return cls("rational", (amplitude, pole, power), p0, **kw)

    @classmethod
    def from_dict(cls, spec: dict) -> "CoefficientFunction":
        return cls(spec["kind"], tuple(spec["coeffs"]), float(spec["p0"]),
                   s=spec.get("s"), M=spec.get("M"))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "coeffs": list(self.coeffs), "p0": self.p0}
        if self.s is not None:
            out["s"] = self.s
        if self.M is not None:
            out["M"] = self.M
        return out

    @property
    def domain(self):
        return (self.p0, 0.0)

    def __call__(self, p, k=0):
        return eval_derivative(self, k, p)

    def scaled(self, factor: float) -> "CoefficientFunction":
        """Return ``factor * self`` (exact, same kind)."""
        c = list(self.coeffs)
        if self.kind in ("constant", "polynomial", "series"):
            c = [factor * a for a in c]
        elif self.kind == "exponential":
            c = [factor * c[0], c[1], factor * (c[2] if len(c) == 3 else 0.0)]
        else:
            c[0] *= factor
        return CoefficientFunction(self.kind, tuple(c), self.p0)


def linear_combination(a: float, f: CoefficientFunction, b: float,
                       g: CoefficientFunction) -> CoefficientFunction:
    """``a f + b g`` for functions sharing a kind (and a rate/pole where relevant)."""
    if f.p0 != g.p0:
        raise ValueError("functions live on different domains")
    if {f.kind, g.kind} <= {"constant", "polynomial"}:
        cf = np.zeros(max(len(f.coeffs), len(g.coeffs)))
        cf[: len(f.coeffs)] += a * np.asarray(f.coeffs)
        cf[: len(g.coeffs)] += b * np.asarray(g.coeffs)
        return CoefficientFunction.polynomial(cf, f.p0)
    if f.kind == g.kind == "series":
        cf = np.zeros(max(len(f.coeffs), len(g.coeffs)))
        cf[: len(f.coeffs)] += a * np.asarray(f.coeffs)
        cf[: len(g.coeffs)] += b * np.asarray(g.coeffs)
        return CoefficientFunction.series(cf, f.p0)
    if f.kind == g.kind == "exponential" and f.coeffs[1] == g.coeffs[1]:
        fb = f.coeffs[2] if len(f.coeffs) == 3 else 0.0
        gb = g.coeffs[2] if len(g.coeffs) == 3 else 0.0
        return CoefficientFunction.exponential(a * f.coeffs[0] + b * g.coeffs[0], f.coeffs[1],
                                               f.p0, offset=a * fb + b * gb)
    if f.kind == g.kind == "rational" and f.coeffs[1:] == g.coeffs[1:]:
        return CoefficientFunction("rational", (a * f.coeffs[0] + b * g.coeffs[0],) + f.coeffs[1:], f.p0)
    raise ValueError(f"cannot combine kinds {f.kind!r} and {g.kind!r} exactly")


def _check_domain(f, p):
    p = np.asarray(p, dtype=float)
    slack = _DOMAIN_SLACK * abs(f.p0)
    if np.any(p < f.p0 - slack) or np.any(p > slack) or np.any(~np.isfinite(p)):
        raise DomainError(f"p outside [{f.p0}, 0]")
    return np.clip(p, f.p0, 0.0)


def _poly_derivative(coeffs, k, x):
    n = len(coeffs)
    if k >= n:
        return np.zeros_like(x)
    # falling factorials j!/(j-k)! as exact integers before conversion
    dc = [coeffs[j] * float(math.perm(j, k)) for j in range(k, n)]
    out = np.zeros_like(x)
    for c in reversed(dc):
        out = out * x + c
    return out


def eval_derivative(f: CoefficientFunction, k: int, p):
    """Exact k-th derivative of ``f`` at ``p`` (scalar or array)."""
    if int(k) != k or k < 0:
        raise ValueError("derivative order must be a nonnegative integer")
    k = int(k)
    if k > MAX_ORDER:
        raise UnsupportedOrderError(f"order {k} exceeds cap {MAX_ORDER}")
    scalar = np.ndim(p) == 0
    x = _check_domain(f, p)
    c = f.coeffs
    if f.kind == "constant":
        out = np.full_like(x, c[0] if k == 0 else 0.0)
    elif f.kind == "polynomial":
        out = _poly_derivative(c, k, x)
    elif f.kind == "series":
        out = _poly_derivative(c, k, x - f.p0)
    elif f.kind == "exponential":
        amp, lam = c[0], c[1]
        out = amp * lam**k * np.exp(lam * x)
        if k == 0 and len(c) == 3:
            out = out + c[2]
    else:
        amp, pole, n = c
        rising = 1.0
        for j in range(k):
            rising *= n + j
        out = amp * rising * (pole - x) ** (-(n + k))
    return float(out) if scalar else out


def default_probe_grid(f: CoefficientFunction, n: int = DEFAULT_PROBE_POINTS):
    return np.linspace(f.p0, 0.0, n)


def _sup_derivatives(f, k_max, probe_grid):
    grid = default_probe_grid(f) if probe_grid is None else np.asarray(probe_grid, float)
    if grid.size == 0:
        raise ValueError("probe grid must be nonempty")
    sups = np.empty(k_max + 1)
    argmax = np.empty(k_max + 1)
    for k in range(k_max + 1):
        vals = np.abs(eval_derivative(f, k, grid))
        i = int(np.argmax(vals))
        sups[k], argmax[k] = vals[i], grid[i]
    return sups, argmax


def _log_gevrey_bound(k, s, M):
    return (k + 1) * math.log(M) + s * math.lgamma(k + 1)


class GevreyCheck(NamedTuple):
    ok: bool
    worst_ratio: float
    worst_k: int
    worst_p: float


def verify_gevrey_bound(f: CoefficientFunction, s: float, M: float, k_max: int,
                        probe_grid: Optional[Sequence[float]] = None) -> GevreyCheck:
    """Check ``sup |d^k f| <= M**(k+1) (k!)**s`` for every ``k <= k_max`` on the probe grid."""
    if s < 1 or M <= 0:
        raise ValueError("need s >= 1 and M > 0")
    sups, where = _sup_derivatives(f, k_max, probe_grid)
    worst, wk = 0.0, 0
    for k, sup in enumerate(sups):
        if sup == 0.0:
            continue
        r = math.exp(math.log(sup) - _log_gevrey_bound(k, s, M))
        if r > worst:
            worst, wk = r, k
    return GevreyCheck(worst <= 1.0 + _RATIO_RTOL, worst, wk, float(where[wk]))


class GevreyConstants(NamedTuple):
    s_hat: float
    M_hat: float
    degenerate: bool = False


def minimal_gevrey_constant(sups, s):
    """Least ``M`` with ``sups[k] <= M**(k+1) (k!)**s`` for all k."""
    logs = [(math.log(v) - s * math.lgamma(k + 1)) / (k + 1)
            for k, v in enumerate(sups) if v > 0]
    return math.exp(max(logs))


def estimate_gevrey_constants(f: CoefficientFunction, k_max: int,
                              probe_grid: Optional[Sequence[float]] = None,
                              s_max: float = 4.0) -> GevreyConstants:
    """Fit ``(s, M)`` minimising the mean log-slack of the Gevrey bound.

    ``s`` runs over the lattice ``1, 1.05, ..., s_max``; for each ``s`` the
    tightest ``M`` is computed and the slack is averaged over the nonzero orders.
    Ties go to the smallest ``s``.
    """
    if k_max < 5:
        raise ValueError("k_max must be at least 5")
    sups, _ = _sup_derivatives(f, k_max, probe_grid)
    nz = [k for k, v in enumerate(sups) if v > 0]
    if not nz:
        return GevreyConstants(1.0, float(np.finfo(float).tiny), True)
    best = None
    n_steps = int(round((s_max - 1.0) / S_LATTICE_STEP))
    for i in range(n_steps + 1):
        s = 1.0 + i * S_LATTICE_STEP
        M = minimal_gevrey_constant(sups, s)
        slack = np.mean([_log_gevrey_bound(k, s, M) - math.log(sups[k]) for k in nz])
        if best is None or slack < best[0] - 1e-12:
            best = (slack, s, M)
    _, s, M = best
    return GevreyConstants(round(s, 10), M, False)
