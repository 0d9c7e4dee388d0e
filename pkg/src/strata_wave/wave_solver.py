"""Laminar flows, Newton solves and amplitude continuation for the strip problem.

Along a branch ``Q`` is an unknown and the first cosine mode of the surface is
pinned.  Translation invariance is removed by pinning the first sine mode to
zero; the extra equation is balanced by an unfolding scalar ``nu`` multiplying
a fixed odd forcing on the surface row, which vanishes (to round-off) at every
true solution.  This keeps the Newton system square so a plain LU works.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (BifurcationPointError, BlowUpError, DivergenceError,
                     StagnationError, StrataWaveError)
from .strip_problem import (STAGNATION_FLOOR, HeightField, StripGrid, WaveParameters,
                            full_residual, linearize)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_ITER = 25
MAX_HALVINGS = 8
MAX_BISECTIONS = 6
_RCOND_MIN = 1e-15


@dataclass
class LaminarProfile:
    p: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    Q: float
    kappa: float

    def field(self, grid: StripGrid) -> HeightField:
        return HeightField.laminar(grid, self.H)


def _laminar_rhs(params: WaveParameters):
    g, d = params.g, params.d
    beta, rho = params.beta, params.rho

    def rhs(p, y):
        p = min(max(p, params.p0), 0.0)
        return [y[1], -(beta(p) - g * (y[0] - d) * rho(p, 1)) * y[1] ** 3]

    return rhs


def laminar_Q(params: WaveParameters, H_top: float, dH_top: float) -> float:
    """Bernoulli constant making a flat surface at height ``H_top`` satisfy the surface condition."""
    return 2 * params.g * params.rho(0.0) * H_top + 1.0 / dH_top**2


def solve_laminar(params: WaveParameters, kappa0: float, p_nodes: Optional[Sequence[float]] = None,
                  rtol: float = 1e-13, atol: float = 1e-15) -> LaminarProfile:
    """Integrate ``H'' = -(beta - g (H - d) rho') H'^3`` from the bed with ``H(p0)=0, H'(p0)=kappa0``."""
    if not kappa0 > 0:
        raise ValueError("kappa0 must be positive")
    p0 = params.p0
    nodes = np.linspace(p0, 0.0, 33) if p_nodes is None else np.asarray(p_nodes, dtype=float)

    def stagnation(p, y):
        return y[1] - STAGNATION_FLOOR

    def blowup(p, y):
        return 1e8 - y[1]

    stagnation.terminal = blowup.terminal = True
    sol = solve_ivp(_laminar_rhs(params), (p0, 0.0), [0.0, kappa0], method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True, events=(stagnation, blowup))
    if sol.status == 1:
        if sol.t_events[0].size:
            raise StagnationError(f"laminar H' reached the floor at p = {sol.t_events[0][0]:.6g}")
        raise BlowUpError(f"laminar H' blew up at p = {sol.t_events[1][0]:.6g}")
    if sol.status != 0:
        # the step size collapses just short of a square-root singularity in H'
        if abs(sol.y[1, -1]) > 1e3 * max(1.0, kappa0):
            raise BlowUpError(f"laminar H' blew up near p = {sol.t[-1]:.6g}")
        raise StrataWaveError(f"laminar integration failed: {sol.message}")
    H, dH = sol.sol(nodes)
    H[0] = 0.0
    Htop, dHtop = sol.y[0, -1], sol.y[1, -1]
    if np.any(dH <= 0):
        raise StagnationError("laminar profile has non-positive H'")
    return LaminarProfile(nodes, H, dH, laminar_Q(params, Htop, dHtop), kappa0)


def check_no_stagnation(h: HeightField, delta: float) -> bool:
    """``0 < min h_p`` and ``max h_p <= 1/delta`` on every node."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    hp = h.h_p
    return bool(hp.min() > 0 and hp.max() <= 1.0 / delta)


# -- Newton -------------------------------------------------------------------------

@dataclass
class ContinuationState:
    h: HeightField
    Q: float
    amplitude: float
    step_count: int = 0
    residual_norm: float = 0.0
    residual_history: List[float] = field(default_factory=list)
    unfolding: float = 0.0

    @property
    def min_hp(self):
        return self.h.min_hp()

    @property
    def max_hp(self):
        return self.h.max_hp()

    def summary_row(self):
        return {"amplitude": self.amplitude, "Q": self.Q, "residual": self.residual_norm,
                "min_hp": self.min_hp, "max_hp": self.max_hp, "steps": self.step_count}


def _mode_rows(grid: StripGrid):
    """Row vectors (on the raveled field) extracting the surface cos/sin first modes."""
    arg = grid.wavenumber * grid.q
    cos_row = np.zeros(grid.shape)
    sin_row = np.zeros(grid.shape)
    cos_row[:, -1] = 2.0 / grid.n_q * np.cos(arg)
    sin_row[:, -1] = 2.0 / grid.n_q * np.sin(arg)
    return cos_row.ravel(), sin_row.ravel()


def _unfolding_column(grid: StripGrid):
    c = np.zeros(grid.shape)
    c[:, -1] = np.sin(grid.wavenumber * grid.q)
    return c.ravel()


class _System:
    """Residual/Jacobian of the bordered Newton system for one constraint type."""

    def __init__(self, params, grid, constraint, amplitude, Q_fixed):
        self.params, self.grid = params, grid
        self.constraint = constraint
        self.amplitude = amplitude
        self.Q_fixed = Q_fixed
        self.n = grid.size
        if constraint == "amplitude":
            self.cos_row, self.sin_row = _mode_rows(grid)
            self.c = _unfolding_column(grid)

    def pack(self, h, Q, nu=0.0):
        if self.constraint == "amplitude":
            return np.concatenate([h.values.ravel(), [Q, nu]])
        return h.values.ravel().copy()

    def unpack(self, x):
        vals = x[: self.n].reshape(self.grid.shape).copy()
        # the bed rows are linear with unit Jacobian, so this only removes rounding
        vals[:, 0] = 0.0
        h = HeightField(vals, self.grid)
        if self.constraint == "amplitude":
            return h, x[self.n], x[self.n + 1]
        return h, self.Q_fixed, 0.0

    def residual(self, x):
        h, Q, nu = self.unpack(x)
        F = full_residual(h, self.params, Q).ravel()
        if self.constraint == "amplitude":
            F = F + nu * self.c
            hv = x[: self.n]
            F = np.concatenate([F, [self.cos_row @ hv - self.amplitude, self.sin_row @ hv]])
        return F

    def jacobian(self, x):
        h, Q, _ = self.unpack(x)
        if self.constraint != "amplitude":
            return linearize(h, self.params, Q=Q).matrix
        L = linearize(h, self.params, q_unknown=True, Q=Q)
        n = self.n
        J = np.zeros((n + 2, n + 2))
        J[:n, :n] = L.matrix
        J[:n, n] = L.q_column
        J[:n, n + 1] = self.c
        J[n, :n] = self.cos_row
        J[n + 1, :n] = self.sin_row
        return J


def _solve_linear(J, rhs):
    lu, piv = sla.lu_factor(J, check_finite=False)
    anorm = np.abs(J).sum(axis=0).max()
    rcond, info = sla.lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond < _RCOND_MIN or not np.all(np.isfinite(lu.diagonal())):
        raise BifurcationPointError(f"Jacobian numerically singular (rcond = {rcond:.2e})")
    return sla.lu_solve((lu, piv), rhs, check_finite=False)


def newton_solve(h0: HeightField, params: WaveParameters, constraint: str = "Q-fixed",
                 tol: float = DEFAULT_TOL, amplitude: Optional[float] = None,
                 Q0: Optional[float] = None, max_iter: int = MAX_ITER) -> ContinuationState:
    """Damped Newton (Armijo halving) on the collocation system.

    ``constraint="Q-fixed"`` solves with ``Q = Q0`` (default ``params.Q``).
    ``constraint="amplitude"`` treats ``Q`` as unknown (initial guess ``Q0``) and
    pins the first surface cosine mode to ``amplitude`` and the first sine mode to 0.
    """
    if constraint not in ("Q-fixed", "amplitude"):
        raise ValueError(f"unknown constraint {constraint!r}")
    Q0 = params.Q if Q0 is None else float(Q0)
    if constraint == "amplitude" and amplitude is None:
        amplitude = h0.amplitude
    grid = h0.grid
    system = _System(params, grid, constraint, amplitude, Q0)
    x = system.pack(h0, Q0)
    F = system.residual(x)
    r = float(np.abs(F).max())
    history = [r]
    steps = 0
    while r > tol:
        if steps >= max_iter:
            raise DivergenceError(f"no convergence in {max_iter} Newton iterations "
                                  f"(residual {r:.3e})", history)
        dx = _solve_linear(system.jacobian(x), -F)
        lam, accepted, stagnated = 1.0, False, False
        for _ in range(MAX_HALVINGS + 1):
            xt = x + lam * dx
            try:
                Ft = system.residual(xt)
            except StagnationError:
                stagnated = True
                lam *= 0.5
                continue
            rt = float(np.abs(Ft).max())
            if np.isfinite(rt) and rt <= (1 - 1e-4 * lam) * r:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            if stagnated:
                raise StagnationError("every damped Newton trial violated the no-stagnation floor")
            raise DivergenceError(f"line search failed at residual {r:.3e}", history)
        x, F, r = xt, Ft, rt
        history.append(r)
        steps += 1
        log.debug("newton step %d: lambda=%g residual=%.3e", steps, lam, r)
    h, Q, nu = system.unpack(x)
    return ContinuationState(h=h, Q=float(Q), amplitude=float(h.amplitude), step_count=steps,
                             residual_norm=r, residual_history=history, unfolding=float(nu))


def quadratic_constant(history: Sequence[float], last: int = 3, floor: float = 1e-12) -> float:
    """Largest ``r_{k+1} / r_k^2`` over the final ``last`` Newton steps.

    Steps that land below ``floor`` are round-off limited and carry no
    information about the convergence order, so they are skipped.
    """
    h = [r for r in history if r > 0]
    pairs = [(a, b) for a, b in zip(h[:-1], h[1:]) if b >= floor][-last:]
    if not pairs:
        return 0.0
    return max(b / a**2 for a, b in pairs)


def residual_noise_floor(h: HeightField, params: WaveParameters, Q: Optional[float] = None,
                         samples: int = 3, seed: int = 0) -> float:
    """Size of the residual change caused by 1-ulp relative perturbations of ``h``.

    Newton residuals below this level are set by rounding in the collocation
    operators, not by the iteration.
    """
    rng = np.random.default_rng(seed)
    base = full_residual(h, params, Q)
    eps = np.finfo(float).eps
    worst = 0.0
    for _ in range(samples):
        v = h.values * (1 + eps * rng.standard_normal(h.values.shape))
        worst = max(worst, float(np.abs(full_residual(h.with_values(v), params, Q) - base).max()))
    return worst


# -- bifurcation from the laminar family ------------------------------------------

def _mode_operator(profile: LaminarProfile, params: WaveParameters, grid: StripGrid, k: float):
    """Collocation matrix of the linearisation at a laminar flow, restricted to ``cos(k q) psi(p)``."""
    Dp, Dpp = grid.Dp, grid.Dpp
    H = profile.H
    hp = Dp @ H
    p = grid.p
    forcing = params.beta(p) - params.g * (H - params.d) * params.rho(p, 1)
    A = (Dpp + (3 * forcing * hp**2)[:, None] * Dp
         + np.diag(-(k**2) * hp**2 - params.g * params.rho(p, 1) * hp**3))
    A[0] = 0.0
    A[0, 0] = 1.0
    rho0 = params.rho(0.0)
    Q = profile.Q
    bracket = 2 * params.g * rho0 * H[-1] - Q
    A[-1] = 2 * bracket * hp[-1] * Dp[-1]
    A[-1, -1] += 2 * params.g * rho0 * hp[-1] ** 2 + 2 * params.sigma * k**2 * hp[-1] ** 2
    return A


def dispersion_function(kappa: float, params: WaveParameters, grid: StripGrid, k: Optional[float] = None):
    """Surface-row mismatch of the mode-``k`` linear problem normalised by ``psi(0) = 1``.

    Zero exactly where the linearisation about the laminar flow with bed slope
    ``kappa`` is singular on the grid, i.e. where a wave of that length bifurcates.
    """
    k = grid.wavenumber if k is None else k
    profile = solve_laminar(params, kappa, grid.p)
    A = _mode_operator(profile, params, grid, k)
    B = A.copy()
    B[-1] = 0.0
    B[-1, -1] = 1.0
    rhs = np.zeros(grid.n_p)
    rhs[-1] = 1.0
    psi = np.linalg.solve(B, rhs)
    return float(A[-1] @ psi), psi, profile


def critical_kappa(params: WaveParameters, grid: StripGrid, kappa_guess: Optional[float] = None,
                   span: float = 4.0, samples: int = 81) -> float:
    """Bed slope of the laminar flow from which the wave of length ``grid.wavelength`` bifurcates."""
    guess = kappa_guess if kappa_guess else params.d / -params.p0
    ks = np.geomspace(guess / span, guess * span, samples)
    vals = []
    for kap in ks:
        try:
            vals.append(dispersion_function(kap, params, grid)[0])
        except StrataWaveError:
            vals.append(np.nan)
    vals = np.asarray(vals)
    roots = []
    for i in range(samples - 1):
        a, b = vals[i], vals[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            r = brentq(lambda t: dispersion_function(t, params, grid)[0], ks[i], ks[i + 1],
                       xtol=1e-15, rtol=1e-15, maxiter=200)
            roots.append(r)
    if not roots:
        raise BifurcationPointError("no laminar bifurcation point found near kappa = %g" % guess)
    return min(roots, key=lambda r: abs(math.log(r / guess)))


# -- continuation -------------------------------------------------------------------

def _laminar_state(profile, grid, params):
    h = profile.field(grid)
    res = float(np.abs(full_residual(h, params, profile.Q)).max())
    return ContinuationState(h=h, Q=profile.Q, amplitude=0.0, residual_norm=res,
                             residual_history=[res])


def continuation_run(params: WaveParameters, amplitude_targets: Sequence[float],
                     grid: Optional[StripGrid] = None, kappa0: Optional[float] = None,
                     tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                     find_bifurcation: bool = True) -> List[ContinuationState]:
    """Follow the wave branch bifurcating from the laminar family up to each target amplitude.

    ``kappa0`` seeds the bifurcation search (default ``d / -p0``); with
    ``find_bifurcation=False`` it is used as-is.  A step that fails is retried
    from the midpoint amplitude, up to six times; after that the partial branch
    is attached to the raised error as ``err.branch``.
    """
    targets = [float(a) for a in amplitude_targets]
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise ValueError("amplitude targets must be strictly increasing")
    if targets and targets[0] < 0:
        raise ValueError("amplitude targets must be nonnegative")
    grid = grid or StripGrid(wavelength=params.wavelength, p0=params.p0)
    if grid.p0 != params.p0 or grid.wavelength != params.wavelength:
        raise ValueError("grid and parameters disagree on p0 or wavelength")
    kap = critical_kappa(params, grid, kappa0) if find_bifurcation else (kappa0 or params.d / -params.p0)
    _, psi, profile = dispersion_function(kap, params, grid)
    base = _laminar_state(profile, grid, params)
    mode = np.cos(grid.wavenumber * grid.q)[:, None] * psi[None, :]

    known = [base]
    out: List[ContinuationState] = []
    for target in targets:
        if target == 0.0:
            out.append(base)
            continue
        a_done = known[-1].amplitude
        pending = [target]
        bisections = 0
        while pending:
            a = pending[-1]
            try:
                h_guess, Q_guess = _predict(known, a, base, mode)
                state = newton_solve(h_guess, params, "amplitude", tol=tol, amplitude=a,
                                     Q0=Q_guess, max_iter=max_iter)
            except (DivergenceError, StagnationError, BifurcationPointError) as err:
                bisections += 1
                if bisections > MAX_BISECTIONS:
                    err.branch = out
                    raise
                pending.append(0.5 * (a_done + a))
                continue
            known.append(state)
            a_done = a
            pending.pop()
        out.append(known[-1])
    return out


def _predict(known, a, base, mode):
    if len(known) == 1:
        return base.h.with_values(base.h.values + a * mode), base.Q
    s0, s1 = known[-2], known[-1]
    t = (a - s1.amplitude) / (s1.amplitude - s0.amplitude)
    hv = s1.h.values + t * (s1.h.values - s0.h.values)
    return s1.h.with_values(hv), s1.Q + t * (s1.Q - s0.Q)
