"""Inverse of the semi-hodograph map: streamlines, surface, velocity and psi.

A point ``(q, p)`` of the strip sits at ``(x, y) = (q, h(q, p) - d)`` in the fluid,
and the pseudo-stream function there is ``psi = -p``.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np
from numpy.polynomial import chebyshev as C

from . import spectral
from .errors import DomainError
from .function_space import CoefficientFunction
from .strip_problem import STAGNATION_FLOOR, HeightField, _require_flow

_PSI_TOL = 1e-11
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class PhysicalStreamline:
    p_level: float
    x_samples: np.ndarray
    y_samples: np.ndarray

    def rows(self):
        return list(zip(self.x_samples.tolist(), self.y_samples.tolist()))


def streamline(h: HeightField, p_level: float, d: float) -> PhysicalStreamline:
    """The curve ``y = h(x, p_level) - d`` at the q-nodes.

    Off-node levels use barycentric interpolation in the Lobatto basis.
    """
    grid = h.grid
    p = float(p_level)
    if not (grid.p0 - _DOMAIN_SLACK <= p <= _DOMAIN_SLACK):
        raise DomainError(f"p_level {p} outside [{grid.p0}, 0]")
    p = min(max(p, grid.p0), 0.0)
    hit = np.nonzero(np.abs(grid.p - p) <= 1e-15)[0]
    if hit.size:
        col = h.values[:, hit[0]]
    else:
        col = spectral.lobatto_interpolate(h.values, grid.p0, [p], axis=1)[:, 0]
    return PhysicalStreamline(p, grid.q.copy(), col - d)


def reconstruct_surface(h: HeightField, d: float) -> PhysicalStreamline:
    """The free surface ``eta(x) = h(x, 0) - d``."""
    return streamline(h, 0.0, d)


def physical_points(h: HeightField, d: float):
    """Images ``(x, y) = (q, h(q, p) - d)`` of the grid nodes."""
    x = np.broadcast_to(h.grid.q[:, None], h.grid.shape).copy()
    return x, h.values - d


def velocity_field(h: HeightField, rho: CoefficientFunction, c: float):
    """``(u, v)`` at the images of the grid nodes (see :func:`physical_points`).

    ``u = c - 1/(sqrt(rho) h_p)`` and ``v = -h_q/(sqrt(rho) h_p)``; the wave speed
    ``c`` is an outside input, the strip problem never uses it.
    """
    _require_flow(h, STAGNATION_FLOOR)
    root = np.sqrt(rho(h.grid.p))[None, :]
    hp = h.h_p
    return c - 1.0 / (root * hp), -h.h_q / (root * hp)


def _invert_column(coeffs, p0, targets, lo_val, hi_val):
    """Solve ``H(p) = t`` for each target, ``H`` increasing with Chebyshev ``coeffs`` in x.

    ``lo_val``/``hi_val`` are the sampled end values, so the bed and surface map
    to ``p0`` and ``0`` exactly.  Bisection brackets the root, Newton polishes it;
    targets outside ``[H(p0), H(0)]`` come back as NaN.
    """
    dcoeffs = C.chebder(coeffs)
    t = np.asarray(targets, dtype=float)
    out = np.full(t.shape, np.nan)
    inside = (t >= lo_val - _PSI_TOL * 1e-2) & (t <= hi_val + _PSI_TOL * 1e-2)
    out[inside & (t <= lo_val)] = -1.0
    out[inside & (t >= hi_val)] = 1.0
    todo = inside & (t > lo_val) & (t < hi_val)
    if todo.any():
        tt = t[todo]
        a = np.full(tt.shape, -1.0)
        b = np.full(tt.shape, 1.0)
        for _ in range(30):
            mid = 0.5 * (a + b)
            below = C.chebval(mid, coeffs) < tt
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
        x = 0.5 * (a + b)
        for _ in range(6):
            step = (C.chebval(x, coeffs) - tt) / C.chebval(x, dcoeffs)
            x = np.clip(x - step, a, b)
            if np.abs(step).max() < 1e-16:
                break
        out[todo] = x
    # x in [-1, 1] back to p in [p0, 0]
    return np.where(np.isnan(out), np.nan, p0 * (1 - out) / 2)


def psi_at(h: HeightField, x, y, d: float):
    """Pseudo-stream function at scattered points; NaN outside the fluid."""
    grid = h.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x, y = np.broadcast_arrays(x, y)
    flat_x, flat_y = x.ravel(), y.ravel()
    out = np.full(flat_x.shape, np.nan)
    ux, inv = np.unique(flat_x, return_inverse=True)
    on_node = _node_lookup(grid, ux)
    need = [i for i, j in enumerate(on_node) if j < 0]
    cols = np.empty((ux.size, grid.n_p))
    for i, j in enumerate(on_node):
        if j >= 0:
            cols[i] = h.values[j]
    if need:
        cols[need] = spectral.fourier_interpolate(h.values, grid.wavelength, ux[need], axis=0)
    coeffs = spectral.cheb_coefficients(cols, axis=1)
    for i in range(ux.size):
        sel = inv == i
        out[sel] = -_invert_column(coeffs[i], grid.p0, flat_y[sel] + d, cols[i, 0], cols[i, -1])
    return out.reshape(x.shape)


def _node_lookup(grid, xs):
    dq = grid.wavelength / grid.n_q
    idx = np.rint(np.mod(xs, grid.wavelength) / dq).astype(int) % grid.n_q
    hit = np.abs(np.mod(xs - idx * dq + 0.5 * grid.wavelength, grid.wavelength)
                 - 0.5 * grid.wavelength) <= 1e-14 * grid.wavelength
    return np.where(hit, idx, -1)


def reconstruct_psi(h: HeightField, x_grid, y_grid, d: float):
    """Psi on the rectangular grid ``x_grid`` x ``y_grid`` (shape ``(len(x), len(y))``).

    Returns ``(psi, mask)`` where ``mask`` is true inside the fluid and ``psi`` is NaN outside.
    """
    X, Y = np.meshgrid(np.asarray(x_grid, float), np.asarray(y_grid, float), indexing="ij")
    psi = psi_at(h, X, Y, d)
    return psi, ~np.isnan(psi)
