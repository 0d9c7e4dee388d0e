"""Combinatorial inequalities behind the regularity estimates, checked exactly,
plus a small calculus of factorial majorants for Leibniz products.

Binomials and factorials are big integers and the lemma sums are exact rationals,
so rounding can never flip a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import spectral
from .errors import InequalityViolation, RuleViolationError

PI2 = math.pi**2
LEMMA_BOUND = 8 * PI2


def _check_multi_index(a):
    a = tuple(int(x) for x in a)
    if len(a) != 2 or min(a) < 0:
        raise ValueError(f"expected a multi-index in N^2, got {a}")
    return a


def multi_binomial(alpha, beta):
    return math.comb(alpha[0], beta[0]) * math.comb(alpha[1], beta[1])


def multi_indices(order: int) -> Iterator[Tuple[int, int]]:
    for a1 in range(order, -1, -1):
        yield (a1, order - a1)


# -- inequality (i) ------------------------------------------------------------------

def verify_binomial_dominance(alpha, beta) -> bool:
    """``C(alpha, beta) <= C(|alpha|, |beta|)`` in exact integers."""
    alpha, beta = _check_multi_index(alpha), _check_multi_index(beta)
    if beta[0] > alpha[0] or beta[1] > alpha[1]:
        raise ValueError(f"beta {beta} is not <= alpha {alpha}")
    lhs = multi_binomial(alpha, beta)
    rhs = math.comb(sum(alpha), sum(beta))
    if lhs > rhs:
        raise InequalityViolation(f"C({alpha},{beta}) = {lhs} > {rhs}")
    return True


def binomial_dominance_margin(alpha):
    """Smallest ``C(|a|,|b|) - C(a,b)`` over all ``beta <= alpha``."""
    alpha = _check_multi_index(alpha)
    worst = None
    for b1 in range(alpha[0] + 1):
        for b2 in range(alpha[1] + 1):
            verify_binomial_dominance(alpha, (b1, b2))
            gap = math.comb(sum(alpha), b1 + b2) - multi_binomial(alpha, (b1, b2))
            worst = gap if worst is None else min(worst, gap)
    return worst


# -- inequality (ii) -----------------------------------------------------------------

def verify_factorial_superadditivity(m: int, n: int, s: float) -> bool:
    """``(m!)^(s-1) (n!)^(s-1) <= ((m+n)!)^(s-1)``.

    With ``s >= 1`` the power is monotone, so the verdict is the integer comparison
    ``m! n! <= (m+n)!``; the log-space margin is reported by
    :func:`factorial_superadditivity_margin`.
    """
    if m < 0 or n < 0:
        raise ValueError("m and n must be nonnegative")
    if s < 1:
        raise ValueError("s must be >= 1")
    if math.factorial(m) * math.factorial(n) > math.factorial(m + n):
        raise InequalityViolation(f"{m}! {n}! > {m + n}!")
    return True


def factorial_superadditivity_margin(m: int, n: int, s: float) -> float:
    verify_factorial_superadditivity(m, n, s)
    big = math.factorial(m + n) // (math.factorial(m) * math.factorial(n))
    return (s - 1) * math.log(big)


# -- inequality (iii) ----------------------------------------------------------------

@dataclass(frozen=True)
class SumCheck:
    value: Fraction
    bound: float
    ok: bool

    @property
    def margin(self):
        return self.bound - float(self.value)


def _exact_sum(numerators_denominators):
    """Exact sum of ``num/den`` terms over a common denominator."""
    den = 1
    for _, d in numerators_denominators:
        den = math.lcm(den, d)
    total = sum(num * (den // d) for num, d in numerators_denominators)
    return Fraction(total, den)


def verify_kernel_sum(m: int, k: int) -> SumCheck:
    """``sum_{0<j<m} m^k / (j^k (m-j)^k) <= 2^k pi^2``."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if k not in (2, 3):
        raise ValueError("k must be 2 or 3")
    value = _exact_sum([(m**k, j**k * (m - j) ** k) for j in range(1, m)])
    bound = 2**k * PI2
    ok = value <= bound
    if not ok:
        raise InequalityViolation(f"kernel sum m={m}, k={k}: {float(value)} > {bound}")
    return SumCheck(value, bound, True)


# -- weighted order sums -------------------------------------------------------------

# (power of |alpha|, power of |beta|, power of |alpha|-|beta|, bound grows with |alpha|)
LEMMA_SUM_FORMS = (
    (2, 3, 2, False),
    (2, 2, 2, True),
    (1, 3, 1, False),
    (3, 4, 3, False),
)


def _count_by_order(alpha, b):
    lo, hi = max(0, b - alpha[1]), min(alpha[0], b)
    return max(0, hi - lo + 1)


@lru_cache(maxsize=None)
def _lemma_terms(n, form):
    pa, pb, pc, _ = LEMMA_SUM_FORMS[form]
    dens = [b**pb * (n - b) ** pc for b in range(1, n)]
    den = 1
    for d in dens:
        den = math.lcm(den, d)
    return den, [n**pa * (den // d) for d in dens]


def verify_lemma_sums(alpha) -> List[SumCheck]:
    """The four sums over ``beta <= alpha`` with ``0 < |beta| < |alpha|``, each against its bound."""
    alpha = _check_multi_index(alpha)
    n = sum(alpha)
    if n < 2:
        raise ValueError("|alpha| must be >= 2")
    counts = [_count_by_order(alpha, b) for b in range(1, n)]
    out = []
    for form, (_, _, _, grows) in enumerate(LEMMA_SUM_FORMS):
        den, nums = _lemma_terms(n, form)
        value = Fraction(sum(c * t for c, t in zip(counts, nums)), den)
        bound = LEMMA_BOUND * n if grows else LEMMA_BOUND
        if not value <= bound:
            raise InequalityViolation(f"lemma sum {form + 1} at alpha={alpha}: "
                                      f"{float(value)} > {bound}")
        out.append(SumCheck(value, bound, True))
    return out


def lemma_sum_sweep(max_order: int, min_order: int = 2):
    """Rows ``(alpha, checks)`` for every alpha with ``min_order <= |alpha| <= max_order``."""
    for n in range(max(min_order, 2), max_order + 1):
        for alpha in multi_indices(n):
            yield alpha, verify_lemma_sums(alpha)


# -- majorant sequences --------------------------------------------------------------

@dataclass(frozen=True)
class MajorantSequence:
    """Bound ``scale * H1^(a1-j) H2^a2 [(|a|-j-1)!]^s`` for ``|a| >= j+1``, and
    ``low_order_norm`` for ``|a| <= j``."""

    H1: float
    H2: float
    offset: int
    s: float = 1.0
    low_order_norm: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.H1 < 1 or self.H2 < self.H1:
            raise ValueError("need H2 >= H1 >= 1")
        if self.offset not in (0, 1, 2, 3):
            raise ValueError("offset must be 0, 1, 2 or 3")
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if self.low_order_norm < 0 or self.scale < 0:
            raise ValueError("norms and scale must be nonnegative")

    def log_bound(self, alpha):
        a1, a2 = alpha
        n, j = a1 + a2, self.offset
        if n <= j:
            return math.log(self.low_order_norm) if self.low_order_norm > 0 else -math.inf
        if self.scale == 0:
            return -math.inf
        return (math.log(self.scale) + (a1 - j) * math.log(self.H1) + a2 * math.log(self.H2)
                + self.s * math.lgamma(n - j))

    def bound(self, alpha):
        return math.exp(self.log_bound(alpha))

    def holds_for(self, norms: Dict[Tuple[int, int], float], rtol: float = 1e-12) -> bool:
        """True if every measured ``||d^alpha f||`` lies under the bound."""
        for alpha, v in norms.items():
            if v <= 0:
                continue
            if math.log(v) > self.log_bound(alpha) + math.log1p(rtol):
                return False
        return True


# rule -> (offsets of u, v, w (None if absent), output offset, extra H1 power)
RULES = {
    "a": ((2, 1, None), 1, 0),
    "a3": ((2, 1, 2), 1, 0),
    "b": ((2, 1, 1), 0, 0),
    "c": ((2, 2, 0), 0, 0),
    "d": ((2, 2, 2), 1, 1),
    "e": ((3, 2, None), 2, 0),
}

SUP_ORDER = 400


def _unit_majorant(j, low, scale, n_max):
    """``m(n)/n!`` for a factor of class A_j at ``H1 = H2 = 1``, ``s = 1``."""
    vals = np.empty(n_max + 1)
    for n in range(n_max + 1):
        if n <= j:
            vals[n] = low / math.factorial(n)
        else:
            vals[n] = scale * math.exp(math.lgamma(n - j) - math.lgamma(n + 1))
    return vals


def _product_ratio(offsets, lows, scales, j_out, n_max=SUP_ORDER):
    """``max_n M(n) / (n - j_out - 1)!`` with ``M`` the Leibniz majorant of the product
    at ``H = 1``.  Exponential generating functions turn the multinomial sum into a
    plain convolution."""
    conv = np.zeros(n_max + 1)
    conv[0] = 1.0
    for j, low, sc in zip(offsets, lows, scales):
        conv = np.convolve(conv, _unit_majorant(j, low, sc, n_max))[: n_max + 1]
    best = 0.0
    for k in range(j_out + 1, n_max + 1):
        best = max(best, conv[k] * math.exp(math.lgamma(k + 1) - math.lgamma(k - j_out)))
    return best


def product_constant(rule: str, lows: Sequence[float], scales: Optional[Sequence[float]] = None) -> float:
    """The constant ``c_*`` of a product rule for the given low-order norms.

    H1, H2 >= 1 and s >= 1 can only shrink every Leibniz term relative to the
    target bound, so the worst case is ``H1 = H2 = 1``, ``s = 1``.  There the bound
    depends on ``|alpha|`` alone, and the supremum over orders is taken up to
    ``SUP_ORDER``, far past where the ratio has settled.
    """
    offs, j_out, _ = RULES[rule]
    offs = [o for o in offs if o is not None]
    if len(lows) != len(offs):
        raise RuleViolationError(f"rule {rule} takes {len(offs)} factors")
    scales = [1.0] * len(offs) if scales is None else list(scales)
    return _product_ratio(offs, lows, scales, j_out)


def majorant_product(u: MajorantSequence, v: MajorantSequence,
                     w: Optional[MajorantSequence] = None, rule: str = "a"):
    """Apply one of the product rules and return ``(product majorant, c_*)``.

    Rules: (a) u in A2, v in A1 -> uv in A1, and with w in A2 also uvw in A1;
    (b) u in A2, v, w in A1 -> uvw in A0; (c) u, v in A2, w in A0 -> uvw in A0;
    (d) u, v, w in A2 -> H1 uvw in A1; (e) u in A3, v in A2 -> uv in A2.
    """
    key = "a3" if rule == "a" and w is not None else rule
    if key not in RULES:
        raise RuleViolationError(f"unknown rule {rule!r}")
    offs, j_out, extra = RULES[key]
    factors = [f for f in (u, v, w) if f is not None]
    expected = [o for o in offs if o is not None]
    if len(factors) != len(expected):
        raise RuleViolationError(f"rule {rule} takes {len(expected)} factors, got {len(factors)}")
    got = [f.offset for f in factors]
    if got != expected:
        raise RuleViolationError(f"rule {rule} needs offsets {expected}, got {got}")
    ref = factors[0]
    for f in factors[1:]:
        if (f.H1, f.H2, f.s) != (ref.H1, ref.H2, ref.s):
            raise RuleViolationError("factors must share (H1, H2, s)")
    c_star = product_constant(key, [f.low_order_norm for f in factors],
                              [f.scale for f in factors])
    # C^k norms of a product: ||fg||_k <= 2^k ||f||_k ||g||_k, and j_out <= every input offset
    low_out = 2 ** (j_out * (len(factors) - 1)) * math.prod(f.low_order_norm for f in factors)
    # rule d: c_* H1^(a1-2) is an offset-1 bound with scale c_* / H1
    out = MajorantSequence(ref.H1, ref.H2, j_out, ref.s, low_out, c_star / ref.H1**extra)
    return out, c_star


# -- empirical product checks on periodic samples ------------------------------------

def _derivatives_1d(samples, length, k_max, rel_floor=1e-15):
    """Spectral derivatives 0..k_max of a periodic sample after dropping noise modes."""
    f = np.asarray(samples, dtype=float)
    n = f.size
    c = np.fft.fft(f)
    cut = rel_floor * max(np.abs(c).max(), 1e-300)
    c[np.abs(c) < cut] = 0.0
    kk = spectral.wavenumbers(n, length)
    out = []
    for k in range(k_max + 1):
        mult = (1j * kk) ** k
        if k % 2:
            mult[n // 2] = 0.0
        out.append(np.real(np.fft.ifft(mult * c)))
    return out


def _holder_semi_1d(f, length, mu):
    n = f.size
    x = np.arange(n) * (length / n)
    dx = np.abs(x[:, None] - x[None, :])
    dx = np.minimum(dx, length - dx)
    np.fill_diagonal(dx, np.inf)
    return float((np.abs(f[:, None] - f[None, :]) / dx**mu).max())


def periodic_norm(f, length, mu=None):
    """``||f||_{0,mu}`` surrogate; plain sup norm when ``mu`` is None."""
    f = np.asarray(f, dtype=float)
    val = float(np.abs(f).max())
    if mu is not None:
        val += _holder_semi_1d(f, length, mu)
    return val


def periodic_holder_norm(derivs, order, length, mu=None):
    """``||f||_{order,mu}`` from precomputed derivatives ``derivs[0..order]``."""
    total = sum(float(np.abs(d).max()) for d in derivs[: order + 1])
    if mu is not None:
        total += _holder_semi_1d(derivs[order], length, mu)
    return total


@lru_cache(maxsize=None)
def stab_constant(ell: int) -> float:
    """A valid ``C_*`` for the triple-product estimate with offset ``ell``.

    Each factor is majorised by ``U_j`` below order ``ell + 1`` and by
    ``H^(k-ell) (k-ell-1)!`` above.  Every coefficient of the resulting
    polynomial in the ``U_j`` is nonnegative and each monomial is at most
    ``(sum U_j + 1)^3``, so the sup of the ratio at ``U_j = 1`` is a valid ``C_*``.
    """
    return _product_ratio([ell, ell, ell], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0], ell)


@dataclass
class LeibnizCheck:
    hypothesis_ok: bool
    conclusion_ok: bool
    measured_constant: float
    reference_constant: float
    worst_k: int
    detail: Dict[str, float]

    @property
    def ok(self):
        return self.hypothesis_ok and self.conclusion_ok and math.isfinite(self.measured_constant)


def _log_fact(k):
    return math.lgamma(k + 1)


def empirical_leibniz_check(u, v, w, H: float, ell: int, k_max: int, length: float = 2 * np.pi,
                            mu: Optional[float] = None, mode: str = "product") -> LeibnizCheck:
    """Check the triple-product estimate (``mode='product'``) or the bound on
    ``(1 + u^2)^(-3/2)`` (``mode='composite'``, where ``v`` and ``w`` are ignored) on samples.

    ``mu=None`` measures with sup norms; a float uses the discrete ``C^{k,mu}`` surrogate.
    Hypothesis failures are reported, not raised.
    """
    if ell not in (1, 2):
        raise ValueError("ell must be 1 or 2")
    if mode == "composite":
        return _composite_check(np.asarray(u, float), k_max, length, mu)
    if mode != "product":
        raise ValueError(f"unknown mode {mode!r}")
    fs = [np.asarray(x, dtype=float) for x in (u, v, w)]
    ders = [_derivatives_1d(f, length, k_max) for f in fs]
    hyp = True
    for d in ders:
        for k in range(ell + 1, k_max + 1):
            nk = periodic_norm(d[k], length, mu)
            if nk > H ** (k - ell) * math.factorial(k - ell - 1) * (1 + 1e-9):
                hyp = False
    lows = [periodic_holder_norm(d, ell + 1, length, mu) for d in ders]
    pre = (sum(lows) + 1) ** 3
    prod = fs[0] * fs[1] * fs[2]
    dprod = _derivatives_1d(prod, length, k_max)
    worst, worst_k = 0.0, ell + 1
    for k in range(ell + 1, k_max + 1):
        r = periodic_norm(dprod[k], length, mu) / (pre * H ** (k - ell) * math.factorial(k - ell - 1))
        if r > worst:
            worst, worst_k = r, k
    ref = stab_constant(ell)
    return LeibnizCheck(hyp, worst <= ref, worst, ref, worst_k, {"low_order_sum": sum(lows)})


def _composite_check(u, k_max, length, mu):
    if k_max < 3:
        raise ValueError("k_max must be >= 3")
    du2 = _derivatives_1d(u**2, length, k_max)
    inv1 = _derivatives_1d(1.0 / (1 + u**2), length, max(k_max, 3))
    inv32 = _derivatives_1d((1 + u**2) ** -1.5, length, k_max)
    c_star = stab_constant(2)
    norm2 = lambda d: periodic_holder_norm(d, 2, length, mu)
    C0 = c_star * (2 * norm2(inv1) + 2 * norm2(inv32) + norm2(du2[1:]) + 1) ** 6
    Ht = 2 * C0**2 + periodic_norm(inv1[3], length, mu) + periodic_norm(inv32[3], length, mu)
    hyp = True
    worst, worst_k = 0.0, 3
    for k in range(3, k_max + 1):
        # compare in log space; C0 and Ht are large
        scale = math.log(C0) + (k - 2) * math.log(Ht) + _log_fact(k - 3)
        a = periodic_norm(du2[k], length, mu)
        if a > 0 and math.log(a) > scale + 1e-9:
            hyp = False
        b = periodic_norm(inv32[k], length, mu)
        if b > 0:
            r = math.exp(math.log(b) - scale - math.log(C0))
            if r > worst:
                worst, worst_k = r, k
    return LeibnizCheck(hyp, worst <= 1.0, worst, 1.0, worst_k, {"C0": C0, "H_tilde": Ht})


def measured_derivative_norms(field, grid, max_order, noise_floor=1e-13):
    """``sup |d^alpha f|`` on the grid for ``|alpha| <= max_order``."""
    from .regularity import SpectralField

    sf = SpectralField(field, grid, noise_floor)
    out = {}
    for n in range(max_order + 1):
        for a in multi_indices(n):
            out[a] = float(np.abs(sf.derivative(a, guard=False)).max())
    return out
