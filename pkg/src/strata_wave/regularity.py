"""Regularity diagnostics on solved height fields.

Fourier decay of streamline traces, the growth of ``d_q^m h`` in a discrete
``C^{2,mu}`` norm, mixed-derivative majorants, a Gevrey-index fit, and a
Leibniz-sum check of the q-differentiated system.

Derivatives of a field come from its Fourier (q) x Chebyshev (p) coefficients.
Coefficients under ``noise_floor * max|coef|`` can be zeroed first; without that,
round-off in the top modes is amplified by ``k**m`` and swamps real growth.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit
from scipy.optimize import curve_fit

from . import spectral
from .errors import InsufficientModesError, NotGevreyDiagnosableError, ResolutionError
from .strip_problem import HeightField, StripGrid, WaveParameters

DEFAULT_MU = 0.5
DEFAULT_NOISE_FLOOR = 1e-13
DECAY_FLOOR = 1e-13
MIN_MODES = 8
TAIL_SLACK = 0.05
LATTICE_FACTOR = 1.1


# -- spectral derivatives --------------------------------------------------------

class SpectralField:
    """Fourier x Chebyshev coefficient representation of a field on a StripGrid."""

    def __init__(self, values, grid: StripGrid, noise_floor: Optional[float] = None,
                 filter_mode: str = "q"):
        self.grid = grid
        v = np.asarray(values, dtype=float)
        fq = np.fft.fft(v, axis=0)
        coef = (spectral.cheb_coefficients(fq.real, axis=1)
                + 1j * spectral.cheb_coefficients(fq.imag, axis=1))
        if noise_floor:
            cut = noise_floor * np.abs(coef).max()
            if filter_mode == "q":
                # drop whole Fourier modes; zeroing single Chebyshev coefficients
                # would be amplified again by the p-derivatives
                coef[np.abs(coef).max(axis=1) < cut, :] = 0.0
            elif filter_mode == "qp":
                coef[np.abs(coef) < cut] = 0.0
            else:
                raise ValueError(f"unknown filter mode {filter_mode!r}")
        self.coef = coef
        self.noise_floor = noise_floor

    @classmethod
    def of(cls, h, noise_floor=None, filter_mode="q"):
        if isinstance(h, SpectralField):
            return h
        return cls(h.values, h.grid, noise_floor, filter_mode)

    def check_order(self, alpha):
        a1, a2 = alpha
        if a1 < 0 or a2 < 0:
            raise ValueError("derivative orders must be nonnegative")
        if a1 > self.grid.n_q // 4 or a2 > self.grid.n_p // 2:
            raise ResolutionError(f"order {alpha} exceeds resolution guard "
                                  f"({self.grid.n_q // 4}, {self.grid.n_p // 2})")

    def derivative(self, alpha, guard=True):
        a1, a2 = alpha
        if guard:
            self.check_order(alpha)
        g = self.grid
        c = self.coef
        if a1:
            k = spectral.wavenumbers(g.n_q, g.wavelength)
            mult = (1j * k) ** a1
            if a1 % 2:
                mult[g.n_q // 2] = 0.0
            c = c * mult[:, None]
        if a2:
            c = (spectral.cheb_derivative_coeffs(c.real, a2, g.p0, axis=1)
                 + 1j * spectral.cheb_derivative_coeffs(c.imag, a2, g.p0, axis=1))
        vals = spectral.cheb_values(c.real, axis=1) + 1j * spectral.cheb_values(c.imag, axis=1)
        return np.real(np.fft.ifft(vals, axis=0))


def spectral_derivative(h: HeightField, alpha: Tuple[int, int],
                        noise_floor: Optional[float] = None):
    """``d_q^a1 d_p^a2 h`` on the grid nodes; raises ResolutionError past the guards."""
    return SpectralField.of(h, noise_floor).derivative(tuple(alpha))


# -- discrete Hoelder norms --------------------------------------------------------

@njit(cache=True)
def _pair_quotients(vals, q, p, period, mu):
    nf, n = vals.shape
    best = np.zeros(nf)
    half = 0.5 * period
    for a in range(n):
        for b in range(a + 1, n):
            dq = abs(q[a] - q[b])
            if dq > half:
                dq = period - dq
            dp = p[a] - p[b]
            dist2 = dq * dq + dp * dp
            if dist2 == 0.0:
                continue
            inv = dist2 ** (-0.5 * mu)
            for f in range(nf):
                r = abs(vals[f, a] - vals[f, b]) * inv
                if r > best[f]:
                    best[f] = r
    return best


def holder_seminorms(fields: Sequence[np.ndarray], grid: StripGrid, mu: float):
    """Max over all node pairs of ``|f(x) - f(y)| / |x - y|^mu`` (periodic in q), per field."""
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    Q, P = grid.mesh()
    vals = np.ascontiguousarray(np.stack([np.asarray(f, float).ravel() for f in fields]))
    return _pair_quotients(vals, Q.ravel(), P.ravel(), float(grid.wavelength), float(mu))


def _multi_indices(order):
    return [(order - j, j) for j in range(order + 1)]


def _holder_norm(deriv, k, mu, grid):
    """``deriv(gamma)`` supplies ``d^gamma w``; returns the discrete ``C^{k,mu}`` norm."""
    total = 0.0
    for order in range(k + 1):
        for gamma in _multi_indices(order):
            total += float(np.abs(deriv(gamma)).max())
    semi = holder_seminorms([deriv(gamma) for gamma in _multi_indices(k)], grid, mu)
    return total + float(semi.max())


def discrete_holder_norm(field, k: int, mu: float, grid: Optional[StripGrid] = None,
                         noise_floor: Optional[float] = None) -> float:
    """Discrete surrogate of ``||w||_{k,mu}``: node sups of derivatives up to order k
    plus the largest pairwise Hoelder quotient of the order-k derivatives."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    if isinstance(field, HeightField):
        grid, values = field.grid, field.values
    else:
        values = np.asarray(field, dtype=float)
        if grid is None:
            raise ValueError("a grid is required for raw arrays")
    sf = SpectralField(values, grid, noise_floor)
    cache = {}

    def deriv(gamma):
        if gamma not in cache:
            cache[gamma] = values if gamma == (0, 0) else sf.derivative(gamma, guard=False)
        return cache[gamma]

    return _holder_norm(deriv, k, mu, grid)


def c2_norm(deriv):
    """``||w||_2 = sum_{|gamma| <= 2} sup |d^gamma w|`` (the C^{2,0} norm)."""
    return sum(float(np.abs(deriv(g)).max()) for o in range(3) for g in _multi_indices(o))


# -- Fourier decay -----------------------------------------------------------------

@dataclass
class DecayFit:
    rate: float
    intercept: float
    r_squared: float
    modes: np.ndarray
    log_coefficients: np.ndarray

    @property
    def fit_residual(self):
        return 1.0 - self.r_squared


def fourier_magnitudes(trace):
    trace = np.asarray(trace, dtype=float)
    n = trace.size
    return np.abs(np.fft.rfft(trace)) / n


def usable_modes(trace, floor=DECAY_FLOOR, band=2.0 / 3.0):
    c = fourier_magnitudes(trace)
    n = np.asarray(trace).size
    kmax = band * (n // 2)
    ks = np.arange(c.size)
    mask = (ks >= 1) & (ks < kmax) & (c > floor)
    return ks[mask], c[mask]


def fourier_decay_fit(trace, floor: float = DECAY_FLOOR, min_modes: int = MIN_MODES) -> DecayFit:
    """Least-squares fit ``log|c_k| ~ intercept - rate * k`` over modes above the noise floor
    and below two thirds of Nyquist."""
    ks, c = usable_modes(trace, floor)
    if ks.size < min_modes:
        raise InsufficientModesError(f"only {ks.size} usable Fourier modes (need {min_modes})")
    y = np.log(c)
    A = np.vstack([np.ones_like(ks, dtype=float), ks.astype(float)]).T
    (b0, b1), *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = b0 + b1 * ks
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(max(-b1, 0.0), float(b0), r2, ks, y)


@dataclass
class GevreyIndexFit:
    s_hat: float
    s_raw: float
    exponent: float
    b: float
    log_C: float
    fit_residual: float


def gevrey_index_fit(trace, floor: float = DECAY_FLOOR, min_modes: int = MIN_MODES) -> GevreyIndexFit:
    """Fit ``log|c_k| = log C - b k^(1/s)``; ``s_hat = max(s, 1)``."""
    ks, c = usable_modes(trace, floor)
    if ks.size < min_modes:
        raise InsufficientModesError(f"only {ks.size} usable Fourier modes (need {min_modes})")
    k = ks.astype(float)
    y = np.log(c)
    slope = np.polyfit(k, y, 1)[0]
    if slope >= 0:
        raise NotGevreyDiagnosableError("spectrum does not decay")

    def model(k, logC, logb, gamma):
        return logC - np.exp(logb) * k**gamma

    p0 = (y[0] - slope * k[0], math.log(-slope), 1.0)
    try:
        popt, _ = curve_fit(model, k, y, p0=p0, bounds=([-np.inf, -50, 0.05], [np.inf, 50, 3.0]),
                            maxfev=20000)
    except RuntimeError as err:
        raise NotGevreyDiagnosableError(str(err)) from err
    logC, logb, gamma = popt
    resid = float(np.sqrt(np.mean((y - model(k, *popt)) ** 2)))
    s_raw = 1.0 / gamma
    return GevreyIndexFit(max(s_raw, 1.0), s_raw, float(gamma), float(math.exp(logb)),
                          float(logC), resid)


# -- (E_m) growth ------------------------------------------------------------------

@dataclass
class EmDiagnostic:
    m: List[int]
    norms: List[float]
    ratios: List[float]
    L_estimate: float
    passed: bool


def em_norm(h, m: int, mu: float = DEFAULT_MU, noise_floor: Optional[float] = DEFAULT_NOISE_FLOOR):
    """Discrete ``||d_q^m h||_{2,mu}``."""
    sf = SpectralField.of(h, noise_floor)
    sf.check_order((m + 2, 2))
    cache = {}

    def deriv(gamma):
        key = (gamma[0] + m, gamma[1])
        if key not in cache:
            cache[key] = sf.derivative(key)
        return cache[key]

    return _holder_norm(deriv, 2, mu, sf.grid)


def em_diagnostic(h: HeightField, m_max: int = 12, mu: float = DEFAULT_MU,
                  noise_floor: Optional[float] = DEFAULT_NOISE_FLOOR) -> EmDiagnostic:
    """``r_m = (||d_q^m h||_{2,mu} / (m-2)!)^(1/(m-1))`` for ``m = 3..m_max``.

    Passes when the tail ``m >= m_max/2`` is non-increasing up to 5% slack.
    """
    if m_max < 3:
        raise ValueError("m_max must be at least 3")
    sf = SpectralField.of(h, noise_floor)
    sf.check_order((m_max + 2, 2))
    ms = list(range(3, m_max + 1))
    norms = [em_norm(sf, m, mu) for m in ms]
    ratios = [(n / math.factorial(m - 2)) ** (1.0 / (m - 1)) for m, n in zip(ms, norms)]
    lo = math.ceil(m_max / 2)
    tail = [(m, r) for m, r in zip(ms, ratios) if m >= lo]
    L = max(r for _, r in tail)
    passed = all(b <= (1 + TAIL_SLACK) * a for (_, a), (_, b) in zip(tail, tail[1:]))
    return EmDiagnostic(ms, norms, ratios, float(L), bool(passed))


# -- (F_m) mixed-derivative majorants ------------------------------------------------

@dataclass
class FmDiagnostic:
    L1_hat: float
    L2_hat: float
    feasible: bool
    norms: Dict[Tuple[int, int], float]


def default_order_budget(max_order=8):
    return [(a1, n - a1) for n in range(2, max_order + 1) for a1 in range(n + 1)]


def fm_norms(h, budget, noise_floor=DEFAULT_NOISE_FLOOR):
    sf = SpectralField.of(h, noise_floor)
    for a in budget:
        if sum(a) < 2:
            raise ValueError("every multi-index in the budget needs |alpha| >= 2")
        sf.check_order((a[0] + 2, a[1] + 2))
    cache = {}

    def d(key):
        if key not in cache:
            cache[key] = sf.derivative(key)
        return cache[key]

    out = {}
    for a in budget:
        out[tuple(a)] = c2_norm(lambda g: d((a[0] + g[0], a[1] + g[1])))
    return out


def fm_feasible(norms, L1, L2, s):
    for (a1, a2), v in norms.items():
        bound = ((a1 - 1) * math.log(L1) + a2 * math.log(L2)
                 + s * math.lgamma(max(a1 + a2 - 2, 0) + 1))
        if v > 0 and math.log(v) > bound + 1e-12:
            return False
    return True


def fit_fm_constants(norms, s, cap=1e12, factor=LATTICE_FACTOR):
    """Smallest lattice pair ``L2 >= L1 >= 1`` (minimal L2, then minimal L1) bounding every norm."""
    n_steps = int(math.ceil(math.log(cap) / math.log(factor)))
    lat = [factor**i for i in range(n_steps + 1)]
    best = None
    for i, L1 in enumerate(lat):
        # the L2 requirement for fixed L1 is monotone, so bisect on the lattice
        lo, hi = i, len(lat) - 1
        if not fm_feasible(norms, L1, lat[hi], s):
            continue
        while lo < hi:
            mid = (lo + hi) // 2
            if fm_feasible(norms, L1, lat[mid], s):
                hi = mid
            else:
                lo = mid + 1
        cand = (lat[lo], L1)
        if best is None or cand[0] < best[0] * (1 - 1e-12):
            best = cand
    if best is None:
        return None
    return best[1], best[0]


def fm_diagnostic(h: HeightField, order_budget: Optional[Iterable[Tuple[int, int]]] = None,
                  s: float = 1.0, mu: float = DEFAULT_MU,
                  noise_floor: Optional[float] = DEFAULT_NOISE_FLOOR) -> FmDiagnostic:
    """Fit ``||d^alpha h||_2 <= L1^(a1-1) L2^a2 [(|alpha|-2)!]^s`` over the budget.

    ``mu`` is accepted for interface symmetry; the majorants use the ``C^{2,0}`` norm.
    """
    budget = list(order_budget) if order_budget is not None else default_order_budget()
    norms = fm_norms(h, budget, noise_floor)
    fit = fit_fm_constants(norms, s)
    if fit is None:
        return FmDiagnostic(float("nan"), float("nan"), False, norms)
    return FmDiagnostic(fit[0], fit[1], True, norms)


# -- the q-differentiated system -----------------------------------------------------

@dataclass
class DerivativeEquationCheck:
    m: int
    interior: float
    surface: float
    bed: float

    @property
    def max(self):
        return max(self.interior, self.surface, self.bed)


def _leibniz(da, db, n, start=0, stop=None):
    """``sum_{j=start}^{stop} C(n, j) da[j] db[n-j]`` with ``da[j] = d_q^j a``."""
    stop = n if stop is None else stop
    return sum(math.comb(n, j) * da[j] * db[n - j] for j in range(start, stop + 1))


def _derivs_of_product(da, db, upto):
    return [_leibniz(da, db, n) for n in range(upto + 1)]


def _derivs_of_power(du, exponent, upto):
    """q-derivatives of ``(1 + u)^exponent`` from those of ``u`` via the ODE
    ``(1 + u) G' = exponent u' G`` differentiated with Leibniz."""
    G = [(1 + du[0]) ** exponent]
    one_plus = [1 + du[0]] + list(du[1:])
    for n in range(upto):
        # d^n[(1+u) G'] = exponent d^n[u' G]
        rhs = exponent * sum(math.comb(n, j) * du[j + 1] * G[n - j] for j in range(n + 1))
        rhs = rhs - sum(math.comb(n, j) * one_plus[j] * G[n + 1 - j] for j in range(1, n + 1))
        G.append(rhs / one_plus[0])
    return G


def verify_derivative_equation(h: HeightField, m: int, params: WaveParameters,
                               Q: Optional[float] = None,
                               noise_floor: Optional[float] = DEFAULT_NOISE_FLOOR
                               ) -> DerivativeEquationCheck:
    """Residuals of the m-times q-differentiated field and surface equations.

    Interior: ``A(h)[d^m h] = f1 + f2``.  Surface with ``sigma > 0``:
    ``B(h)[d^m h] = phi1 + phi2``; with ``sigma == 0`` the gravity operator
    ``h_q phi_q + (2 g rho h - Q) h_p phi_p + g rho h_p^2 phi`` against its two
    right-hand sides.  Every product derivative is a Leibniz sum of q-derivatives
    of h, so no product is ever re-differentiated spectrally.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    Q = params.Q if Q is None else Q
    sf = SpectralField.of(h, noise_floor)
    sf.check_order((m + 2, 2))
    grid = sf.grid
    D = {}

    def d(a1, a2):
        if (a1, a2) not in D:
            D[(a1, a2)] = sf.derivative((a1, a2))
        return D[(a1, a2)]

    rng = range(m + 1)
    H = [d(n, 0) for n in rng]
    Hq = [d(n + 1, 0) for n in rng]
    Hp = [d(n, 1) for n in rng]
    Hqq = [d(n + 2, 0) for n in rng]
    Hpp = [d(n, 2) for n in rng]
    Hqp = [d(n + 1, 1) for n in rng]
    hq, hp = Hq[0], Hp[0]

    hq2 = _derivs_of_product(Hq, Hq, m)
    hphq = _derivs_of_product(Hp, Hq, m)
    hp2 = _derivs_of_product(Hp, Hp, m)
    hp3 = _derivs_of_product(hp2, Hp, m)

    beta = params.beta(grid.p)[None, :]
    drho = params.rho(grid.p, 1)[None, :]
    g = params.g

    A = (1 + hq**2) * Hpp[m] - 2 * hq * hp * Hqp[m] + hp**2 * Hqq[m]
    f1 = sum(math.comb(m, n) * (-hq2[n] * Hpp[m - n] + 2 * hphq[n] * Hqp[m - n] - hp2[n] * Hqq[m - n])
             for n in range(1, m + 1))
    Hmd = [H[0] - params.d] + H[1:]
    f2 = -beta * hp3[m] + g * drho * _leibniz(Hmd, hp3, m)
    interior = float(np.abs((A - f1 - f2)[:, 1:-1]).max())

    s = -1
    rho0 = params.rho(0.0)
    sv = lambda arr: arr[:, s]
    if params.sigma:
        w = [sv(x) for x in hq2]
        G = _derivs_of_power(w, -1.5, m)
        kern = _derivs_of_product([sv(x) for x in hp2], G, m)
        B = 2 * params.sigma * kern[0] * sv(Hqq[m])
        hhp2 = _leibniz([sv(x) for x in H], [sv(x) for x in hp2], m)
        phi1 = sv(hq2[m]) + 2 * g * rho0 * hhp2 - Q * sv(hp2[m])
        phi2 = -2 * params.sigma * sum(math.comb(m, n) * sv(Hqq[m - n]) * kern[n]
                                       for n in range(1, m + 1))
        surface = float(np.abs(B - phi1 - phi2).max())
    else:
        hs, hqs, hps = sv(H[0]), sv(hq), sv(hp)
        coef = 2 * g * rho0 * hs - Q
        Bt = hqs * sv(Hq[m]) + coef * hps * sv(Hp[m]) + g * rho0 * hps**2 * sv(H[m])
        Hq_s = [sv(x) for x in Hq]
        Hp_s = [sv(x) for x in Hp]
        phi1 = (-0.5 * _leibniz(Hq_s, Hq_s, m, 1, m - 1)
                - 0.5 * coef * _leibniz(Hp_s, Hp_s, m, 1, m - 1))
        phi2 = -rho0 * g * _leibniz([sv(x) for x in H], [sv(x) for x in hp2], m, 1, m - 1)
        surface = float(np.abs(Bt - phi1 - phi2).max())
    bed = float(np.abs(H[m][:, 0]).max())
    return DerivativeEquationCheck(m, interior, surface, bed)


# -- report ------------------------------------------------------------------------

@dataclass
class RegularityReport:
    per_p_decay: List[Tuple[float, float, float]]
    analyticity_half_width: float
    em_ratios: List[float]
    L_estimate: float
    gevrey_index_hat: float
    fm_constants: Tuple[float, float]
    mu: float
    em_passed: bool = True
    fm_feasible: bool = True
    degenerate_levels: List[float] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def streamline_levels(grid: StripGrid, count: int = 5):
    """Surface plus ``count`` interior node levels spread through the depth."""
    idx = np.unique(np.linspace(1, grid.n_p - 2, count).round().astype(int))
    return [grid.n_p - 1] + [int(i) for i in idx[::-1]]


def regularity_report(h: HeightField, m_max: int = 12, mu: float = DEFAULT_MU,
                      order_budget=None, s: float = 1.0, levels: Optional[Sequence[int]] = None,
                      noise_floor: Optional[float] = DEFAULT_NOISE_FLOOR) -> RegularityReport:
    grid = h.grid
    levels = streamline_levels(grid) if levels is None else levels
    decay, degenerate = [], []
    for j in levels:
        try:
            fit = fourier_decay_fit(h.values[:, j])
            decay.append((float(grid.p[j]), fit.rate, fit.fit_residual))
        except InsufficientModesError:
            degenerate.append(float(grid.p[j]))
    width = min((r * grid.wavelength / (2 * np.pi) for _, r, _ in decay), default=float("inf"))
    em = em_diagnostic(h, m_max, mu, noise_floor)
    try:
        s_hat = gevrey_index_fit(h.surface).s_hat
    except (InsufficientModesError, NotGevreyDiagnosableError):
        s_hat = float("nan")
    fm = fm_diagnostic(h, order_budget, s, mu, noise_floor)
    return RegularityReport(decay, float(width), em.ratios, em.L_estimate, s_hat,
                            (fm.L1_hat, fm.L2_hat), mu, em.passed, fm.feasible, degenerate)
