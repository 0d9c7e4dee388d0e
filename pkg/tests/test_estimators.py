import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from strata_wave.errors import InsufficientModesError
from strata_wave.estimators import FourierDecay, GevreyIndex, WaveBranch

from conftest import stratified_params


def _traces():
    q = np.arange(128) * 2 * np.pi / 128
    poisson = lambda r: (1 - r**2) / (1 - 2 * r * np.cos(q) + r**2)
    return np.vstack([poisson(0.5), poisson(0.3), np.cos(q)])


def test_fourier_decay_transform():
    out = FourierDecay().fit(_traces()).transform(_traces())
    assert out.shape == (3, 3)
    np.testing.assert_allclose(out[:2, 0], [math.log(2), math.log(1 / 0.3)], rtol=0.02)
    assert np.isnan(out[2]).all()
    with pytest.raises(InsufficientModesError):
        FourierDecay(strict=True).fit_transform(_traces())


def test_gevrey_index_in_pipeline():
    pipe = make_pipeline(GevreyIndex())
    out = pipe.fit_transform(_traces()[:2])
    assert np.all(out[:, 0] <= 1.05)
    assert clone(GevreyIndex(min_modes=10)).get_params()["min_modes"] == 10


def test_wave_branch_predicts_quadratic_head():
    est = WaveBranch(stratified_params(), n_q=32, n_p=16).fit(np.array([[2e-3], [1e-3], [0.0]]))
    np.testing.assert_allclose(est.amplitudes_, [0.0, 1e-3, 2e-3], atol=1e-15)
    mid = est.predict(np.array([[1e-3]]))[0]
    assert mid == pytest.approx(est.Q_[1], rel=1e-14)
    with pytest.raises(ValueError):
        WaveBranch().fit(np.array([[1e-3]]))
