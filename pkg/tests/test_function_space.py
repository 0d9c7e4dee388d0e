import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from strata_wave.errors import DomainError, UnsupportedOrderError
from strata_wave.function_space import (CoefficientFunction as CF, MAX_ORDER,
                                        default_probe_grid, estimate_gevrey_constants,
                                        eval_derivative, linear_combination, verify_gevrey_bound)

P = sp.Symbol("p")


def test_constant_derivative_vanishes():
    assert eval_derivative(CF.constant(0.0, -1.0), 5, -0.5) == 0.0
    assert eval_derivative(CF.constant(3.0, -1.0), 0, -0.5) == 3.0
    assert eval_derivative(CF.constant(3.0, -1.0), 2, -0.5) == 0.0


def test_exponential_identity():
    assert eval_derivative(CF.exponential(1.0, 1.0, -1.0), 7, 0.0) == pytest.approx(1.0, rel=1e-15)


def test_rational_matches_factorial():
    f = CF.rational(1.0, 1.0, 1, -0.5)
    assert eval_derivative(f, 3, 0.0) == pytest.approx(6.0, rel=1e-15)


@pytest.mark.parametrize("f, expr", [
    (CF.polynomial([1.0, -0.1, 0.3, 2.0], -1.0), 1 - 0.1 * P + 0.3 * P**2 + 2 * P**3),
    (CF.series([0.5, 1.0, -2.0], -0.7), 0.5 + (P + 0.7) - 2 * (P + 0.7) ** 2),
    (CF.exponential(2.0, -1.5, -1.0, offset=0.25), 2 * sp.exp(-1.5 * P) + 0.25),
    (CF.rational(1.5, 0.4, 2, -1.0), 1.5 / (0.4 - P) ** 2),
])
def test_derivatives_match_symbolic_oracle(f, expr):
    for k in (0, 1, 2, 5, 9):
        dk = sp.lambdify(P, sp.diff(expr, P, k), "mpmath")
        for p in (f.p0, 0.5 * f.p0, 0.0):
            exact = float(dk(p))
            assert eval_derivative(f, k, p) == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_array_evaluation_matches_scalar():
    f = CF.exponential(1.0, 2.0, -1.0)
    ps = np.linspace(-1, 0, 7)
    np.testing.assert_allclose(eval_derivative(f, 3, ps), [eval_derivative(f, 3, p) for p in ps])


def test_domain_and_order_errors():
    f = CF.constant(1.0, -1.0)
    with pytest.raises(DomainError):
        eval_derivative(f, 0, 0.5)
    with pytest.raises(DomainError):
        eval_derivative(f, 0, -1.5)
    with pytest.raises(UnsupportedOrderError):
        eval_derivative(f, MAX_ORDER + 1, -0.5)
    assert MAX_ORDER >= 40


def test_rational_pole_inside_domain_rejected():
    with pytest.raises(ValueError):
        CF.rational(1.0, -0.5, 1, -1.0)


def test_positive_p0_rejected():
    with pytest.raises(DomainError):
        CF.constant(1.0, 0.5)


def test_dict_round_trip():
    f = CF.exponential(2.0, -1.5, -1.0, offset=0.25, s=1.0, M=3.0)
    assert CF.from_dict(f.to_dict()) == f


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), k=st.integers(0, 12), p=st.floats(-1, 0))
def test_derivative_linearity(a, b, k, p):
    f = CF.polynomial([1.0, 2.0, -0.5, 0.1], -1.0)
    g = CF.polynomial([0.3, -1.0, 4.0], -1.0)
    combo = linear_combination(a, f, b, g)
    lhs = eval_derivative(combo, k, p)
    rhs = a * eval_derivative(f, k, p) + b * eval_derivative(g, k, p)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_default_probe_grid():
    grid = default_probe_grid(CF.constant(1.0, -2.0))
    assert grid.size == 257 and grid[0] == -2.0 and grid[-1] == 0.0


def test_gevrey_zero_function():
    chk = verify_gevrey_bound(CF.constant(0.0, -1.0), 1.0, 1.0, 10)
    assert chk.ok and chk.worst_ratio == 0.0


def test_gevrey_exponential():
    assert verify_gevrey_bound(CF.exponential(1.0, 1.0, -1.0), 1.0, 1.0, 20).ok


def test_gevrey_rational_boundary_case():
    chk = verify_gevrey_bound(CF.rational(1.0, 1.0, 1, -0.5), 1.0, 1.0, 15)
    assert chk.ok
    assert chk.worst_ratio == pytest.approx(1.0, abs=1e-12)
    assert chk.worst_p == 0.0


def test_gevrey_violation_detected():
    chk = verify_gevrey_bound(CF.rational(1.0, 1.0, 1, -0.5), 1.0, 0.9, 15)
    assert not chk.ok and chk.worst_ratio > 1


@pytest.mark.parametrize("s, M", [(1.0, 1.0), (1.5, 1.0), (1.0, 2.0), (2.0, 3.0)])
def test_gevrey_monotone_in_s_and_M(s, M):
    f = CF.rational(1.0, 1.0, 1, -0.5)
    assert verify_gevrey_bound(f, s, M, 15).ok


def test_estimate_constant():
    est = estimate_gevrey_constants(CF.constant(3.0, -1.0), 10)
    assert est.s_hat == 1.0 and est.M_hat == pytest.approx(3.0)


def test_estimate_exponential():
    est = estimate_gevrey_constants(CF.exponential(1.0, 1.0, -1.0), 20)
    assert est.s_hat == 1.0 and est.M_hat <= 1 + 1e-6


def test_estimate_gevrey_two_design():
    # coefficients (k!)^2 / k!  = k!, so d^k f(p0) = (k!)^2: a Gevrey-2 germ
    coeffs = [float(math.factorial(k)) for k in range(13)]
    f = CF.series(coeffs, -0.01)
    est = estimate_gevrey_constants(f, 12)
    assert 1.9 <= est.s_hat <= 2.1


def test_estimate_degenerate():
    est = estimate_gevrey_constants(CF.constant(0.0, -1.0), 8)
    assert est.degenerate and est.s_hat == 1.0 and est.M_hat > 0


def test_estimate_needs_k_max():
    with pytest.raises(ValueError):
        estimate_gevrey_constants(CF.constant(1.0, -1.0), 4)


@pytest.mark.parametrize("f", [
    CF.constant(3.0, -1.0),
    CF.exponential(2.0, 3.0, -1.0),
    CF.polynomial([1.0, -0.1], -1.0),
    CF.rational(0.5, 0.3, 2, -1.0),
    CF.series([float(math.factorial(k)) for k in range(13)], -0.01),
])
def test_estimate_verify_round_trip(f):
    est = estimate_gevrey_constants(f, 12)
    assert verify_gevrey_bound(f, est.s_hat, est.M_hat * (1 + 1e-6), 12).ok
    assert verify_gevrey_bound(f, est.s_hat, est.M_hat * 1.01, 12).ok
