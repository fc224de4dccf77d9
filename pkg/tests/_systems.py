"""Reference systems and signals shared by the test modules."""
import numpy as np

from lfrlpv.lfr import NonlinearLfrModel, assemble_from_blocks, simulate_nl_lfr
from lfrlpv.lti import TransferFunction
from lfrlpv.static_nl import StaticNonlinearity
from lfrlpv.errors import DivergedSimulation

# G(q) of the feedback benchmark model
SILVERBOX_NUM = [0.0, 0.488, -0.110, 0.131, -0.079, 0.026]
SILVERBOX_DEN = [0.994, -1.518, 0.929]
SILVERBOX_POLY = [0.0079, 0.1166, -0.0060, 3.8885]
SILVERBOX_CY = 0.0024

WH_G2 = TransferFunction([0, 0.6, 0.3], [1, -1.2, 0.6])
WH_G3 = TransferFunction([0, 0.4, -0.2], [1, -0.5, 0.3])
WH_POLY = [0.05, 1.0, -0.3, 0.5]


def silverbox_G():
    return TransferFunction(SILVERBOX_NUM, SILVERBOX_DEN)


def silverbox_model(poly=SILVERBOX_POLY, y_offset=0.0):
    G = silverbox_G()
    return assemble_from_blocks(G, G, G, G, StaticNonlinearity.polynomial(poly),
                                w_gain=-1.0, y_offset=y_offset)


def wh_model(poly=WH_POLY, G2=WH_G2, G3=WH_G3):
    zero = TransferFunction.zero()
    return assemble_from_blocks(zero, G2, G3, zero, StaticNonlinearity.polynomial(poly))


def multisine(N, rng, fmax=0.2):
    """Random-phase multisine with flat amplitude up to ``fmax`` cycles/sample, unit std."""
    k = np.arange(1, int(fmax * N))
    U = np.zeros(N // 2 + 1, complex)
    U[k] = np.exp(1j * rng.uniform(0, 2 * np.pi, k.size))
    u = np.fft.irfft(U, N)
    return u / np.std(u)


def random_stable(rng, n, radius):
    """Random n x n matrix rescaled to the given spectral radius."""
    A = rng.standard_normal((n, n))
    rho = np.max(np.abs(np.linalg.eigvals(A)))
    return A * (radius / rho)


def random_lfr(rng, n=None, degree=None, radius=None, c=None, feedthrough=True):
    """Random stable nonlinear LFR with a polynomial nonlinearity."""
    n = int(rng.integers(1, 7)) if n is None else n
    degree = int(rng.integers(1, 6)) if degree is None else degree
    radius = rng.uniform(0.3, 0.95) if radius is None else radius
    A = random_stable(rng, n, radius)
    coeffs = rng.uniform(-1, 1, degree + 1) / (1.0 + np.arange(degree + 1)) ** 2
    if c is not None:
        coeffs[0] = c
    d = (lambda: rng.uniform(-0.5, 0.5)) if feedthrough else (lambda: 0.0)
    return NonlinearLfrModel(
        A, rng.standard_normal(n), 0.2 * rng.standard_normal(n),
        rng.standard_normal(n), 0.5 * rng.standard_normal(n) / np.sqrt(n),
        d(), d(), d(), StaticNonlinearity.polynomial(coeffs))


def random_simulable_lfr(rng, u, **kwargs):
    """Draw random models until one simulates without diverging on ``u``."""
    for _ in range(100):
        m = random_lfr(rng, **kwargs)
        try:
            tr = simulate_nl_lfr(m, u)
        except DivergedSimulation:
            continue
        if np.max(np.abs(tr.z)) < 10:
            return m
    raise RuntimeError("no simulable random model found")
