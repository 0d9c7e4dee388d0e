import numpy as np
import pytest

from strata_wave.function_space import CoefficientFunction
from strata_wave.strip_problem import StripGrid, WaveParameters
from strata_wave.wave_solver import continuation_run

P0 = -1.0
TWO_PI = 2 * np.pi
WAVE_TARGETS = (2.5e-3, 5e-3, 1e-2)


def stratified_params(**changes):
    """Gravity regime, linear density, constant Bernoulli function, shallow enough
    that the 2*pi wave keeps about ten Fourier modes above round-off at a = 1e-2."""
    kw = dict(g=9.81, sigma=0.0, Q=0.0, d=0.5, p0=P0, wavelength=TWO_PI,
              rho=CoefficientFunction.polynomial([1.0, -0.1], P0),
              beta=CoefficientFunction.constant(0.3, P0))
    kw.update(changes)
    return WaveParameters(**kw)


def homogeneous_params(g=1.0, beta=0.0, **changes):
    kw = dict(g=g, sigma=0.0, Q=3.0, d=1.0, p0=P0, wavelength=TWO_PI,
              rho=CoefficientFunction.constant(1.0, P0),
              beta=CoefficientFunction.constant(beta, P0))
    kw.update(changes)
    return WaveParameters(**kw)


_BRANCHES = {}


def wave_branch(n_q=64, n_p=32):
    """Continuation states at the acceptance amplitudes, cached across the session."""
    key = (n_q, n_p)
    if key not in _BRANCHES:
        grid = StripGrid(n_q, n_p, TWO_PI, P0)
        _BRANCHES[key] = continuation_run(stratified_params(), list(WAVE_TARGETS), grid)
    return _BRANCHES[key]


def wave_state(n_q=64, n_p=32):
    return wave_branch(n_q, n_p)[-1]


@pytest.fixture(scope="session")
def params():
    return stratified_params()


@pytest.fixture(scope="session")
def wave():
    return wave_state()


@pytest.fixture(scope="session")
def wave_params(wave):
    return stratified_params(Q=wave.Q)


ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
