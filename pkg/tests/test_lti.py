import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import dlsim, lfilter

from lfrlpv.errors import (DimensionError, InvalidFrequency, InvalidTolerance, NonCausal,
                           SingularDcGain)
from lfrlpv.lti import (StateSpaceModel, TransferFunction, dc_gain, frequency_response,
                        markov_parameters, minimal_realization, series, simulate_lti,
                        spectral_radius, ss_to_tf, tf_to_ss)

from _systems import random_stable, silverbox_G


def random_ss(rng, n=4, p=2, m=2, radius=0.8):
    return StateSpaceModel(random_stable(rng, n, radius), rng.standard_normal((n, m)),
                           rng.standard_normal((p, n)), rng.standard_normal((p, m)))


def test_state_space_validates_shapes():
    with pytest.raises(DimensionError):
        StateSpaceModel(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), [[0.0]])
    with pytest.raises(DimensionError):
        StateSpaceModel(np.ones((2, 3)), np.ones((2, 1)), np.ones((1, 2)), [[0.0]])


def test_state_space_is_read_only():
    m = StateSpaceModel([[0.5]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(ValueError):
        m.A[0, 0] = 2.0


def test_simulate_matches_scipy(rng):
    model = random_ss(rng)
    u = rng.standard_normal((300, 2))
    x0 = rng.standard_normal(4)
    _, y_ref, _ = dlsim((model.A, model.B, model.C, model.D, 1), u, x0=x0)
    np.testing.assert_allclose(simulate_lti(model, u, x0), y_ref, rtol=1e-12, atol=1e-12)


def test_simulate_siso_returns_1d(rng):
    model = tf_to_ss(silverbox_G())
    y = simulate_lti(model, rng.standard_normal(50))
    assert y.shape == (50,)


def test_simulate_static_model():
    model = StateSpaceModel(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[2.5]])
    np.testing.assert_array_equal(simulate_lti(model, np.arange(4.0)), 2.5 * np.arange(4.0))


def test_simulate_rejects_wrong_input_width(rng):
    with pytest.raises(DimensionError):
        simulate_lti(random_ss(rng), rng.standard_normal(10))


def test_tf_to_ss_matches_lfilter(rng):
    G = silverbox_G()
    u = rng.standard_normal(500)
    np.testing.assert_allclose(simulate_lti(tf_to_ss(G), u), lfilter(G.num, G.den, u),
                               rtol=1e-10, atol=1e-12)


def test_silverbox_block_order_and_gain():
    m = tf_to_ss(silverbox_G())
    assert m.n == 5
    assert dc_gain(m)[0, 0] == pytest.approx(0.456 / 0.405, rel=1e-12)


def test_ss_to_tf_round_trip(rng):
    G = TransferFunction([0.2, 0.5, -0.1], [1.0, -0.9, 0.2])
    back = ss_to_tf(tf_to_ss(G))
    np.testing.assert_allclose(back.impulse_response(40), G.impulse_response(40), atol=1e-12)


def test_impulse_response_matches_markov():
    G = silverbox_G()
    h = markov_parameters(tf_to_ss(G), 30)[:, 0, 0]
    np.testing.assert_allclose(h, G.impulse_response(30), atol=1e-12)


def test_min_delay_and_zero():
    assert TransferFunction([0, 0, 1.0], [1.0]).min_delay == 2
    assert TransferFunction.zero().min_delay == 1
    with pytest.raises(NonCausal):
        TransferFunction([1.0], [0.0, 1.0])


def test_dc_gain_singular():
    m = StateSpaceModel([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(SingularDcGain):
        dc_gain(m)


def test_dc_gain_equals_zero_frequency_response(rng):
    m = random_ss(rng)
    np.testing.assert_allclose(frequency_response(m, [0.0])[0].real, dc_gain(m), atol=1e-12)


def test_frequency_response_matches_tf():
    G = silverbox_G()
    f = np.linspace(0, 0.5, 17)
    zinv = np.exp(-2j * np.pi * f)
    ref = np.polyval(G.num[::-1], zinv) / np.polyval(G.den[::-1], zinv)
    np.testing.assert_allclose(frequency_response(tf_to_ss(G), f)[:, 0, 0], ref, rtol=1e-10)


def test_frequency_response_rejects_out_of_range():
    with pytest.raises(InvalidFrequency):
        frequency_response(tf_to_ss(silverbox_G()), [0.6])


def test_minimal_realization_removes_redundant_states(rng):
    core = random_ss(rng, n=3, p=1, m=1)
    # append an uncontrollable and an unobservable mode
    A = np.block([[core.A, np.zeros((3, 2))], [np.zeros((2, 3)), np.diag([0.3, -0.4])]])
    B = np.vstack([core.B, [[0.0], [1.0]]])
    C = np.hstack([core.C, [[1.0, 0.0]]])
    padded = StateSpaceModel(A, B, C, core.D)
    red = minimal_realization(padded)
    assert red.n == 3
    np.testing.assert_allclose(markov_parameters(red, 40), markov_parameters(padded, 40),
                               atol=1e-12)


def test_minimal_realization_idempotent(rng):
    m = random_ss(rng)
    assert minimal_realization(m) is m


def test_minimal_realization_rejects_bad_tol(rng):
    with pytest.raises(InvalidTolerance):
        minimal_realization(random_ss(rng), tol=0.0)


def test_minimal_realization_timing():
    from _systems import silverbox_model
    core = silverbox_model().core
    minimal_realization(core)
    t0 = time.perf_counter()
    assert minimal_realization(core).n == 5
    assert time.perf_counter() - t0 < 1.0


def test_series_matches_cascade(rng):
    a, b = random_ss(rng, 2, 1, 1), random_ss(rng, 3, 1, 1)
    u = rng.standard_normal(100)
    np.testing.assert_allclose(simulate_lti(series(a, b), u),
                               simulate_lti(b, simulate_lti(a, u)), atol=1e-10)


def test_spectral_radius():
    assert spectral_radius(np.diag([0.5, -0.9])) == pytest.approx(0.9)
    assert spectral_radius(np.zeros((0, 0))) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-3, 3, allow_subnormal=False),
       st.floats(-3, 3, allow_subnormal=False))
def test_simulation_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    m = random_ss(rng, 3, 1, 2)
    u1, u2 = rng.standard_normal((60, 2)), rng.standard_normal((60, 2))
    lhs = simulate_lti(m, a * u1 + b * u2)
    rhs = a * simulate_lti(m, u1) + b * simulate_lti(m, u2)
    scale = (abs(a) + abs(b)) * max(np.max(np.abs(simulate_lti(m, u1))),
                                    np.max(np.abs(simulate_lti(m, u2))), 1e-300)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale + 1e-290


def _scalar(a, b, c, d):
    return StateSpaceModel([[a]], [[b]], [[c]], [[d]])


def test_unit_delay_response():
    np.testing.assert_array_equal(simulate_lti(_scalar(0, 1, 1, 0), [1.0, 0, 0]), [0, 1, 0])


def test_static_pass_through(rng):
    u = rng.standard_normal(10)
    np.testing.assert_array_equal(simulate_lti(_scalar(0, 1, 0, 1), u), u)


def test_two_mode_impulse_geometric_sum():
    m = StateSpaceModel(np.diag([0.5, 0.25]), [[1], [1]], [[1, 1]], [[0]])
    u = np.zeros(30)
    u[0] = 1
    t = np.arange(1, 30)
    np.testing.assert_allclose(simulate_lti(m, u)[1:], 0.5 ** (t - 1) + 0.25 ** (t - 1),
                               rtol=1e-14)


def test_dc_gain_of_delay():
    assert dc_gain(_scalar(0, 1, 1, 0))[0, 0] == 1.0
    with pytest.raises(SingularDcGain):
        dc_gain(_scalar(1, 2, 3, 0))


def test_trivial_conversions():
    m = tf_to_ss(TransferFunction([0, 1], [1]))
    assert (m.A.tolist(), m.B.tolist(), m.C.tolist(), m.D.tolist()) == \
        ([[0.0]], [[1.0]], [[1.0]], [[0.0]])
    m = tf_to_ss(TransferFunction([1], [1]))
    assert m.n == 0 and m.D[0, 0] == 1.0


def test_silverbox_impulse_against_filter():
    G = silverbox_G()
    impulse = np.zeros(50)
    impulse[0] = 1
    h = markov_parameters(tf_to_ss(G), 50)[:, 0, 0]
    np.testing.assert_allclose(h, lfilter(G.num, G.den, impulse), rtol=0, atol=1e-12)


def test_pole_zero_cancellation_is_removed():
    G = TransferFunction([0, 1.0], [1, -0.5])
    inverse = TransferFunction([1, -0.5], [1, -0.2])
    cascade = series(tf_to_ss(G), tf_to_ss(inverse))
    red = minimal_realization(cascade)
    assert cascade.n == 2 and red.n == 1
    np.testing.assert_allclose(markov_parameters(red, 40), markov_parameters(cascade, 40),
                               atol=1e-12)


def test_minimal_model_keeps_order(rng):
    m = random_ss(rng, 3, 1, 1)
    assert minimal_realization(m).n == 3


def test_unit_delay_frequency_response():
    h = frequency_response(_scalar(0, 1, 1, 0), [0.0, 0.25])[:, 0, 0]
    np.testing.assert_allclose(h, [1.0, -1j], atol=1e-15)


def test_silverbox_zero_frequency_matches_dc_gain():
    m = tf_to_ss(silverbox_G())
    assert frequency_response(m, 0.0)[0, 0, 0].real == pytest.approx(dc_gain(m)[0, 0], rel=1e-12)


def test_dc_gain_equals_settled_output(rng):
    for _ in range(5):
        m = random_ss(rng, 4, 1, 1, radius=rng.uniform(0.5, 0.98))
        rho = spectral_radius(m.A)
        tau = -1.0 / np.log(rho)
        n = int(np.ceil(10 * tau * np.log(10) * 1.6)) + 50
        y = simulate_lti(m, np.ones(n))
        assert y[-1] == pytest.approx(dc_gain(m)[0, 0], rel=1e-8)
