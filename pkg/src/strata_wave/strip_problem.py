"""The fixed-strip height-function problem.

Unknown ``h(q, p) = y + d`` on ``[0, L) x [p0, 0]`` solves

    (1 + h_q^2) h_pp - 2 h_p h_q h_pq + h_p^2 h_qq + (beta(p) - g (h - d) rho'(p)) h_p^3 = 0
    1 + h_q^2 + (2 g rho h - 2 sigma h_qq / (1 + h_q^2)^{3/2} - Q) h_p^2 = 0     on p = 0
    h = 0                                                                        on p = p0

Arrays are stored as ``values[i_q, j_p]``; column 0 is the bed, the last column
is the free surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import spectral
from .errors import DomainError, StagnationError
from .function_space import CoefficientFunction, default_probe_grid

STAGNATION_FLOOR = 1e-6


@dataclass(frozen=True)
class StripGrid:
    n_q: int = 64
    n_p: int = 32
    wavelength: float = 2 * np.pi
    p0: float = -1.0

    def __post_init__(self):
        if self.n_q <= 0 or self.n_q % 2:
            raise ValueError(f"n_q must be a positive even integer, got {self.n_q}")
        if self.n_p < 3:
            raise ValueError("n_p must be at least 3 (bed, interior, surface)")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not self.p0 < 0:
            raise DomainError("p0 must be negative")

    @property
    def shape(self):
        return (self.n_q, self.n_p)

    @property
    def size(self):
        return self.n_q * self.n_p

    @property
    def wavenumber(self):
        return 2 * np.pi / self.wavelength

    @cached_property
    def q(self):
        return spectral.fourier_nodes(self.n_q, self.wavelength)

    @cached_property
    def p(self):
        return spectral.strip_nodes(self.n_p, self.p0)

    @cached_property
    def Dq(self):
        return spectral.fourier_diff_matrix(self.n_q, self.wavelength, 1)

    @cached_property
    def Dqq(self):
        return spectral.fourier_diff_matrix(self.n_q, self.wavelength, 2)

    @cached_property
    def Dp(self):
        return spectral.cheb_diff_matrix(self.n_p, self.p0)

    @cached_property
    def Dpp(self):
        return self.Dp @ self.Dp

    def mesh(self):
        return np.meshgrid(self.q, self.p, indexing="ij")

    def refined(self, factor_q=2, factor_p=2):
        return StripGrid(self.n_q * factor_q, self.n_p * factor_p, self.wavelength, self.p0)

    def to_dict(self):
        return {"n_q": self.n_q, "n_p": self.n_p, "wavelength": self.wavelength, "p0": self.p0}

    @classmethod
    def from_dict(cls, spec):
        return cls(int(spec["n_q"]), int(spec["n_p"]), float(spec["wavelength"]), float(spec["p0"]))


@dataclass(frozen=True, eq=False)
class HeightField:
    values: np.ndarray
    grid: StripGrid

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: StripGrid, fn):
        Q, P = grid.mesh()
        return cls(np.broadcast_to(fn(Q, P), grid.shape), grid)

    @classmethod
    def laminar(cls, grid: StripGrid, profile):
        """q-independent field from a profile sampled at ``grid.p``."""
        profile = np.asarray(profile, dtype=float)
        return cls(np.tile(profile, (grid.n_q, 1)), grid)

    def with_values(self, values):
        return HeightField(values, self.grid)

    @cached_property
    def h_q(self):
        return spectral.fourier_derivative(self.values, self.grid.wavelength, 1, axis=0)

    @cached_property
    def h_qq(self):
        return spectral.fourier_derivative(self.values, self.grid.wavelength, 2, axis=0)

    @cached_property
    def h_p(self):
        return self.values @ self.grid.Dp.T

    @cached_property
    def h_pp(self):
        return self.values @ self.grid.Dpp.T

    @cached_property
    def h_qp(self):
        return self.h_q @ self.grid.Dp.T

    @property
    def surface(self):
        return self.values[:, -1]

    @property
    def bed(self):
        return self.values[:, 0]

    def surface_mode(self, k=1):
        """Cosine and sine coefficients of mode ``k`` of the surface trace."""
        arg = k * self.grid.wavenumber * self.grid.q
        s = self.surface
        return (2.0 / self.grid.n_q * np.dot(s, np.cos(arg)),
                2.0 / self.grid.n_q * np.dot(s, np.sin(arg)))

    @property
    def amplitude(self):
        return self.surface_mode(1)[0]

    def shifted(self, fraction):
        """Translate in q by ``fraction`` of a period (spectrally exact)."""
        n = self.grid.n_q
        cells = fraction * n
        if abs(cells - round(cells)) < 1e-12:
            # whole grid cells: a roll is exact
            return self.with_values(np.roll(self.values, int(round(cells)), axis=0))
        k = spectral.wavenumbers(n, self.grid.wavelength)
        shift = fraction * self.grid.wavelength
        c = np.fft.fft(self.values, axis=0) * np.exp(-1j * k * shift)[:, None]
        if n % 2 == 0:
            c[n // 2] = np.real(c[n // 2] * np.exp(1j * k[n // 2] * shift))
        return self.with_values(np.real(np.fft.ifft(c, axis=0)))

    def min_hp(self):
        return float(self.h_p.min())

    def max_hp(self):
        return float(self.h_p.max())


@dataclass(frozen=True)
class WaveParameters:
    g: float
    sigma: float
    Q: float
    d: float
    rho: CoefficientFunction
    beta: CoefficientFunction
    wavelength: float = 2 * np.pi
    p0: float = -1.0
    regime: Optional[str] = None

    def __post_init__(self):
        if self.g < 0 or self.sigma < 0:
            raise ValueError("g and sigma must be nonnegative")
        if not self.d > 0:
            raise ValueError("mean depth d must be positive")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not self.p0 < 0:
            raise DomainError("p0 must be negative")
        for name, fn in (("rho", self.rho), ("beta", self.beta)):
            if fn.p0 != self.p0:
                raise DomainError(f"{name} is declared on [{fn.p0}, 0], expected [{self.p0}, 0]")
        if np.any(self.rho(default_probe_grid(self.rho)) <= 0):
            raise ValueError("density must be strictly positive on [p0, 0]")
        inferred = self.infer_regime(self.g, self.sigma)
        if self.regime is None:
            object.__setattr__(self, "regime", inferred)
        elif self.regime != inferred:
            raise ValueError(f"regime {self.regime!r} inconsistent with g={self.g}, sigma={self.sigma}")

    @staticmethod
    def infer_regime(g, sigma):
        if g == 0 and sigma > 0:
            return "capillary"
        if sigma == 0:
            return "gravity"
        return "capillary-gravity"

    def replace(self, **changes):
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        if "g" in changes or "sigma" in changes:
            kw["regime"] = None
        return WaveParameters(**kw)

    def to_dict(self):
        return {"g": self.g, "sigma": self.sigma, "Q": self.Q, "d": self.d,
                "rho": self.rho.to_dict(), "beta": self.beta.to_dict(),
                "wavelength": self.wavelength, "p0": self.p0, "regime": self.regime}

    @classmethod
    def from_dict(cls, spec):
        p0 = float(spec["p0"])
        fns = {}
        for key in ("rho", "beta"):
            d = dict(spec[key])
            d.setdefault("p0", p0)
            fns[key] = CoefficientFunction.from_dict(d)
        return cls(g=float(spec["g"]), sigma=float(spec["sigma"]), Q=float(spec.get("Q", 0.0)),
                   d=float(spec["d"]), rho=fns["rho"], beta=fns["beta"],
                   wavelength=float(spec.get("wavelength", 2 * np.pi)), p0=p0,
                   regime=spec.get("regime"))


def _require_flow(h: HeightField, floor=STAGNATION_FLOOR):
    m = h.min_hp()
    if not m >= floor:
        raise StagnationError(f"min h_p = {m:.3e} below stagnation floor {floor:g}")


def _coefficients(h: HeightField, params: WaveParameters):
    p = h.grid.p
    beta = params.beta(p)[None, :]
    drho = params.rho(p, 1)[None, :]
    return beta, drho


def interior_residual(h: HeightField, params: WaveParameters):
    """Residual of the field equation on the interior p-nodes, shape ``(n_q, n_p - 2)``."""
    _require_flow(h)
    beta, drho = _coefficients(h, params)
    hq, hp = h.h_q, h.h_p
    r = ((1 + hq**2) * h.h_pp - 2 * hp * hq * h.h_qp + hp**2 * h.h_qq
         + (beta - params.g * (h.values - params.d) * drho) * hp**3)
    return r[:, 1:-1]


def curvature_of_trace(trace, wavelength):
    """``eta'' / (1 + eta'^2)^{3/2}`` of a periodic trace sampled on equispaced nodes."""
    trace = np.asarray(trace, dtype=float)
    d1 = spectral.fourier_derivative(trace, wavelength, 1)
    d2 = spectral.fourier_derivative(trace, wavelength, 2)
    return d2 / (1 + d1**2) ** 1.5


def curvature_term(h: HeightField):
    """Curvature expression of the surface row, without the ``2 sigma`` factor."""
    return (h.h_qq[:, -1]) / (1 + h.h_q[:, -1] ** 2) ** 1.5


def surface_residual(h: HeightField, params: WaveParameters, Q: Optional[float] = None):
    """Residual of the dynamic boundary condition on ``p = 0``.

    With ``sigma == 0`` the curvature term drops out and this is the pure
    gravity condition.
    """
    _require_flow(h)
    Q = params.Q if Q is None else Q
    rho0 = params.rho(0.0)
    hq = h.h_q[:, -1]
    hp = h.h_p[:, -1]
    bracket = 2 * params.g * rho0 * h.surface - Q
    if params.sigma:
        bracket = bracket - 2 * params.sigma * curvature_term(h)
    return 1 + hq**2 + bracket * hp**2


def full_residual(h: HeightField, params: WaveParameters, Q: Optional[float] = None):
    """Bed, interior and surface residuals packed into a field-shaped array."""
    out = np.empty(h.grid.shape)
    out[:, 0] = h.bed
    out[:, 1:-1] = interior_residual(h, params)
    out[:, -1] = surface_residual(h, params, Q)
    return out


@dataclass
class Linearization:
    """Dense Frechet derivative of :func:`full_residual`.

    ``matrix`` acts on ``phi.ravel()`` (row-major ``(n_q, n_p)``); ``q_column``
    is the derivative with respect to ``Q`` when it was requested.
    """

    matrix: np.ndarray
    grid: StripGrid
    q_column: Optional[np.ndarray] = None

    def __call__(self, phi, dQ=0.0):
        phi = np.asarray(phi.values if isinstance(phi, HeightField) else phi, dtype=float)
        out = self.matrix @ phi.ravel()
        if dQ and self.q_column is not None:
            out = out + dQ * self.q_column
        return out.reshape(self.grid.shape)


def linearize(h: HeightField, params: WaveParameters, q_unknown: bool = False,
              Q: Optional[float] = None) -> Linearization:
    _require_flow(h)
    grid = h.grid
    nq, npn = grid.shape
    Q = params.Q if Q is None else Q
    g = params.g
    beta, drho = _coefficients(h, params)
    hq, hp, hqq, hpp, hqp = h.h_q, h.h_p, h.h_qq, h.h_pp, h.h_qp
    forcing = beta - g * (h.values - params.d) * drho

    c_q = 2 * hq * hpp - 2 * hp * hqp
    c_p = -2 * hq * hqp + 2 * hp * hqq + 3 * forcing * hp**2
    c_pp = 1 + hq**2
    c_qp = -2 * hp * hq
    c_qq = hp**2
    c_0 = -g * drho * hp**3

    J = np.einsum("ij,ik,jl->ijkl", c_qp, grid.Dq, grid.Dp)
    for j in range(npn):
        J[:, j, :, j] += c_q[:, j, None] * grid.Dq + c_qq[:, j, None] * grid.Dqq
    for i in range(nq):
        J[i, :, i, :] += c_p[i, :, None] * grid.Dp + c_pp[i, :, None] * grid.Dpp
    idx = np.arange(nq)
    for j in range(npn):
        J[idx, j, idx, j] += c_0[:, j]

    # bed rows
    J[:, 0] = 0.0
    J[idx, 0, idx, 0] = 1.0

    # surface rows
    s = -1
    rho0 = params.rho(0.0)
    sq, sp, sqq = hq[:, s], hp[:, s], hqq[:, s]
    w = 1 + sq**2
    bracket = 2 * g * rho0 * h.surface - Q
    a_q = 2 * sq
    a_qq = np.zeros(nq)
    if params.sigma:
        bracket = bracket - 2 * params.sigma * sqq / w**1.5
        a_q = a_q + 6 * params.sigma * sp**2 * sqq * sq / w**2.5
        a_qq = -2 * params.sigma * sp**2 / w**1.5
    a_p = 2 * bracket * sp
    a_0 = 2 * g * rho0 * sp**2
    J[:, s] = 0.0
    J[:, s, :, s] = a_q[:, None] * grid.Dq + a_qq[:, None] * grid.Dqq
    J[idx, s, idx, :] += a_p[:, None] * grid.Dp[s][None, :]
    J[idx, s, idx, s] += a_0

    q_col = None
    if q_unknown:
        q_col = np.zeros(grid.shape)
        q_col[:, s] = -(sp**2)
        q_col = q_col.ravel()
    return Linearization(J.reshape(grid.size, grid.size), grid, q_col)


def ellipticity_margin(h: HeightField):
    """``(1 + h_q^2) h_p^2 - (h_q h_p)^2`` at every node; equals ``h_p^2``."""
    hq, hp = h.h_q, h.h_p
    return (1 + hq**2) * hp**2 - (hq * hp) ** 2


@dataclass
class SurfaceIdentity:
    """Surface comparison of ``(2 g rho h - Q) h_p`` against ``sign * (1 + h_q^2) / h_p``."""

    sign: int
    max_deviation: float
    min_common_value: float
    inverse_max_hp: float

    @property
    def bounded_below(self):
        return self.min_common_value >= self.inverse_max_hp


def gravity_surface_identity(h: HeightField, params: WaveParameters, Q: Optional[float] = None,
                             sign: int = -1) -> SurfaceIdentity:
    """Check the pure-gravity surface relation on a solved state.

    Dividing ``1 + h_q^2 + (2 g rho h - Q) h_p^2 = 0`` by ``h_p`` gives
    ``(2 g rho h - Q) h_p = -(1 + h_q^2) / h_p``, so ``sign=-1`` is the relation a
    solution satisfies. ``sign=+1`` tests the form with the opposite sign; the
    "common value" is then ``sign * (2 g rho h - Q) h_p`` taken at each node.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    if params.sigma:
        raise ValueError("the identity holds only in the gravity regime (sigma = 0)")
    _require_flow(h)
    Q = params.Q if Q is None else Q
    hq = h.h_q[:, -1]
    hp = h.h_p[:, -1]
    lhs = (2 * params.g * params.rho(0.0) * h.surface - Q) * hp
    rhs = sign * (1 + hq**2) / hp
    common = sign * lhs
    return SurfaceIdentity(sign, float(np.abs(lhs - rhs).max()), float(common.min()),
                           float(1.0 / h.h_p.max()))
