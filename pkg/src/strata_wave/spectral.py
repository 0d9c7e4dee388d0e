"""Fourier (periodic q) and Chebyshev-Lobatto (p on [p0, 0]) collocation tools."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as C


def fourier_nodes(n, length):
    return np.arange(n) * (length / n)


def wavenumbers(n, length):
    return np.fft.fftfreq(n, d=length / n) * 2 * np.pi


def fourier_diff_matrix(n, length, order=1):
    """Dense matrix of the trigonometric-interpolant derivative on ``n`` equispaced nodes.

    The Nyquist mode is dropped for odd orders so the result stays real.
    """
    k = wavenumbers(n, length)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[n // 2] = 0.0
    eye = np.eye(n)
    return np.real(np.fft.ifft(mult[:, None] * np.fft.fft(eye, axis=0), axis=0))


def fourier_derivative(values, length, order=1, axis=0):
    """Derivative along a periodic axis by Fourier multiplier."""
    if order == 0:
        return np.array(values, dtype=float, copy=True)
    n = values.shape[axis]
    k = wavenumbers(n, length)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(mult.reshape(shape) * np.fft.fft(values, axis=axis), axis=axis))


def lobatto_nodes(n):
    """Chebyshev-Gauss-Lobatto points on [-1, 1] in increasing order."""
    if n == 1:
        return np.array([1.0])
    return -np.cos(np.pi * np.arange(n) / (n - 1))


def strip_nodes(n, p0):
    """Lobatto points mapped to [p0, 0]; first node is p0, last is 0."""
    x = lobatto_nodes(n)
    p = p0 * (1 - x) / 2
    p[0], p[-1] = p0, 0.0
    return p


def cheb_diff_matrix(n, p0):
    """First-derivative collocation matrix on ``strip_nodes(n, p0)``."""
    if n == 1:
        return np.zeros((1, 1))
    x = lobatto_nodes(n)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    # dp/dx = -p0 / 2
    return D * (2.0 / -p0)


def cheb_coefficients(values, axis=-1):
    """Chebyshev coefficients of the interpolant through Lobatto samples (increasing x)."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = v.shape[-1]
    if n == 1:
        return np.moveaxis(v.copy(), -1, axis)
    # reorder to x_j = cos(pi j / (n-1)) and apply a DCT-I via an even extension
    w = v[..., ::-1]
    ext = np.concatenate([w, w[..., -2:0:-1]], axis=-1)
    a = np.real(np.fft.fft(ext, axis=-1))[..., :n] / (n - 1)
    a[..., 0] /= 2
    a[..., -1] /= 2
    return np.moveaxis(a, -1, axis)


def cheb_values(coeffs, axis=-1):
    """Inverse of :func:`cheb_coefficients` (values at increasing Lobatto points)."""
    a = np.moveaxis(np.asarray(coeffs, dtype=float), axis, -1)
    n = a.shape[-1]
    x = lobatto_nodes(n)
    V = C.chebvander(x, n - 1)
    return np.moveaxis(a @ V.T, -1, axis)


def cheb_derivative_coeffs(coeffs, order, p0, axis=-1):
    """Differentiate Chebyshev coefficients ``order`` times w.r.t. ``p``."""
    a = np.moveaxis(np.asarray(coeffs, dtype=float), axis, -1)
    n = a.shape[-1]
    scale = (2.0 / -p0) ** order
    out = np.zeros_like(a)
    if order < n:
        d = C.chebder(a, m=order, axis=-1) * scale
        out[..., : d.shape[-1]] = d
    return np.moveaxis(out, -1, axis)


def barycentric_weights_lobatto(n):
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def lobatto_interpolate(values, p0, p_eval, axis=-1):
    """Barycentric interpolation of Lobatto samples at arbitrary ``p_eval`` points."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = v.shape[-1]
    nodes = strip_nodes(n, p0)
    w = barycentric_weights_lobatto(n)
    pe = np.atleast_1d(np.asarray(p_eval, dtype=float))
    diff = pe[:, None] - nodes[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15 * max(1.0, abs(p0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        tmp = w[None, :] / diff
    tmp[exact.any(axis=1)] = 0.0
    rows, cols = np.nonzero(exact)
    tmp[rows, cols] = 1.0
    denom = tmp.sum(axis=1)
    W = tmp / denom[:, None]
    out = v @ W.T
    out = np.moveaxis(out, -1, axis)
    return out


def fourier_interpolate(values, length, x, axis=0):
    """Evaluate the trigonometric interpolant of periodic samples at arbitrary ``x``.

    The Nyquist mode enters as a cosine so the interpolant stays real.
    """
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    n = v.shape[0]
    c = np.fft.fft(v, axis=0) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phase = np.exp(2j * np.pi * np.outer(x, k) / length)
    if n % 2 == 0:
        phase[:, n // 2] = np.cos(np.pi * n * x / length)
    out = np.real(np.tensordot(phase, c, axes=(1, 0)))
    return np.moveaxis(out, 0, axis)
