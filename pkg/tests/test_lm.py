import numpy as np
import pytest

from lfrlpv.errors import OptimizationStalled
from lfrlpv.lm import levenberg_marquardt


def test_rosenbrock():
    res = levenberg_marquardt(lambda x: np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]]),
                              lambda x: np.array([[-20 * x[0], 10.0], [-1.0, 0.0]]),
                              [-1.2, 1.0], max_iter=200)
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-8)


def test_cost_history_decreases(rng):
    t = np.linspace(0, 1, 50)
    y = 2.0 * np.exp(-3.0 * t)
    res = levenberg_marquardt(lambda p: p[0] * np.exp(-p[1] * t) - y,
                              lambda p: np.column_stack([np.exp(-p[1] * t),
                                                         -p[0] * t * np.exp(-p[1] * t)]),
                              [1.0, 1.0])
    assert np.all(np.diff(res.cost_history) < 0)
    np.testing.assert_allclose(res.x, [2.0, 3.0], rtol=1e-8)


def test_badly_scaled_parameters():
    # parameters differing by six orders of magnitude converge thanks to column scaling
    t = np.linspace(0, 1, 40)
    y = 1e3 * t + 1e-3 * t ** 2
    res = levenberg_marquardt(lambda p: p[0] * t + p[1] * t ** 2 - y,
                              lambda p: np.column_stack([t, t ** 2]), [1.0, 1.0])
    np.testing.assert_allclose(res.x, [1e3, 1e-3], rtol=1e-6)


def test_constraint_respected():
    res = levenberg_marquardt(lambda x: np.array([x[0] + 1.0]), lambda x: np.array([[1.0]]),
                              [2.0], constraint=lambda x: x[0] > 0)
    assert res.x[0] > 0


def test_nonfinite_start_raises():
    with pytest.raises(OptimizationStalled):
        levenberg_marquardt(lambda x: np.array([np.nan]), lambda x: np.ones((1, 1)), [0.0])
