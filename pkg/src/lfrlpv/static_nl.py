"""Scalar static nonlinearities, fitting, and the factorization f(z) = z*fbar(z) + c."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (DegenerateFit, FactorizationResidualTooLarge, InvalidInput,
                     InvalidOffset)
from .lm import levenberg_marquardt

KINDS = {"polynomial": _kernels.POLY, "tanh_network": _kernels.TANH,
         "rbf_network": _kernels.RBF}

DEFAULT_REGION = (-1.0, 1.0)
REFIT_GRID_SIZE = 1000
RBF_NEURONS = 10
#: reconstruction RMS bounds relative to the RMS of f on the refit grid
POLY_RESIDUAL_BOUND = 1e-6
NETWORK_RESIDUAL_BOUND = 1e-2


@dataclass(frozen=True, eq=False)
class StaticNonlinearity:
    """Memoryless scalar map w = f(z).

    ``theta`` is the flat parameter vector (see :mod:`lfrlpv._kernels` for
    the layout per kind). Use the ``polynomial``/``tanh_network``/
    ``rbf_network`` constructors rather than building ``theta`` by hand.
    """

    kind: str
    theta: np.ndarray
    region: tuple = DEFAULT_REGION
    fit_rms: float = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown nonlinearity kind {self.kind!r}")
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if theta.size == 0 or not np.all(np.isfinite(theta)):
            raise InvalidInput("nonlinearity parameters must be finite and non-empty")
        if self.kind != "polynomial":
            if (theta.size - 1) % 3:
                raise InvalidInput("network parameter vector must have 3k+1 entries")
            if self.kind == "rbf_network" and np.any(theta[self.neurons:2 * self.neurons] <= 0):
                raise InvalidInput("rbf widths must be positive")
        lo, hi = (float(v) for v in self.region)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise InvalidInput(f"region must be a nonempty finite interval, got {self.region}")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "region", (lo, hi))

    @classmethod
    def polynomial(cls, coeffs, region=DEFAULT_REGION):
        """Polynomial with ascending-degree coefficients."""
        return cls("polynomial", coeffs, region)

    @classmethod
    def tanh_network(cls, input_weight, bias, output_weight, output_bias=0.0,
                     region=DEFAULT_REGION):
        theta = np.concatenate([np.atleast_1d(input_weight), np.atleast_1d(bias),
                                np.atleast_1d(output_weight), [output_bias]])
        return cls("tanh_network", theta, region)

    @classmethod
    def rbf_network(cls, center, width, output_weight, output_bias=0.0,
                    region=DEFAULT_REGION):
        theta = np.concatenate([np.atleast_1d(center), np.atleast_1d(width),
                                np.atleast_1d(output_weight), [output_bias]])
        return cls("rbf_network", theta, region)

    @classmethod
    def identity(cls, region=DEFAULT_REGION):
        return cls.polynomial([0.0, 1.0], region)

    @property
    def kind_code(self):
        return KINDS[self.kind]

    @property
    def neurons(self):
        return 0 if self.kind == "polynomial" else (self.theta.size - 1) // 3

    @property
    def coeffs(self):
        if self.kind != "polynomial":
            raise AttributeError("coeffs is only defined for polynomials")
        return self.theta

    def with_theta(self, theta):
        return StaticNonlinearity(self.kind, theta, self.region)

    def with_region(self, region):
        return StaticNonlinearity(self.kind, self.theta, region, self.fit_rms)

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        return f"StaticNonlinearity({self.kind}, theta={np.array2string(self.theta, precision=4)})"


def _eval_array(f, z):
    th = f.theta
    if f.kind == "polynomial":
        out = np.full_like(z, th[-1])
        for a in th[-2::-1]:
            out = out * z + a
        return out
    k = f.neurons
    a, b, v, b0 = th[:k], th[k:2 * k], th[2 * k:3 * k], th[3 * k]
    zz = z[..., None]
    if f.kind == "tanh_network":
        basis = np.tanh(zz * a + b)
    else:
        basis = np.exp(-((zz - a) / b) ** 2)
    return basis @ v + b0


def param_jacobian(f, z):
    """d f(z) / d theta evaluated on an array of points, shape (len(z), len(theta))."""
    z = np.asarray(z, dtype=float).reshape(-1)
    th = f.theta
    if f.kind == "polynomial":
        return np.vander(z, th.size, increasing=True)
    k = f.neurons
    a, b, v = th[:k], th[k:2 * k], th[2 * k:3 * k]
    zz = z[:, None]
    J = np.empty((z.size, th.size))
    if f.kind == "tanh_network":
        t = np.tanh(zz * a + b)
        dt = v * (1 - t * t)
        J[:, :k] = dt * zz
        J[:, k:2 * k] = dt
        J[:, 2 * k:3 * k] = t
    else:
        e = (zz - a) / b
        g = np.exp(-e * e)
        J[:, :k] = v * g * 2 * e / b
        J[:, k:2 * k] = v * g * 2 * e * e / b
        J[:, 2 * k:3 * k] = g
    J[:, 3 * k] = 1.0
    return J


def evaluate(f, z, *, with_flag=False):
    """Evaluate f at a scalar or array ``z``.

    With ``with_flag=True`` also returns a boolean (array) telling whether
    each point lies inside ``f.region``; evaluation outside the region is
    permitted.
    """
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("nonlinearity input must be finite")
    out = _eval_array(f, arr.reshape(-1)).reshape(arr.shape)
    if arr.ndim == 0:
        out = float(out)
    if with_flag:
        lo, hi = f.region
        return out, (arr >= lo) & (arr <= hi)
    return out


def derivative(f, z):
    """df/dz on an array of points."""
    z = np.asarray(z, dtype=float)
    th = f.theta
    if f.kind == "polynomial":
        return np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(th)) \
            if th.size > 1 else np.zeros_like(z)
    k = f.neurons
    a, b, v = th[:k], th[k:2 * k], th[2 * k:3 * k]
    zz = z[..., None]
    if f.kind == "tanh_network":
        t = np.tanh(zz * a + b)
        return (v * (1 - t * t) * a).sum(-1)
    e = (zz - a) / b
    return (-v * np.exp(-e * e) * 2 * e / b).sum(-1)


def _polyfit(z, w, degree):
    nparam = degree + 1
    # scale z to unit range so the Vandermonde conditioning reflects the data, not units
    s = max(np.max(np.abs(z)), 1e-300)
    V = np.vander(z / s, nparam, increasing=True)
    sv = np.linalg.svd(V, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateFit("polynomial design matrix is rank deficient", cond)
    coef, *_ = np.linalg.lstsq(V, w, rcond=None)
    return coef / s ** np.arange(nparam)


def _network_init(kind, neurons, region, rng):
    lo, hi = region
    width = hi - lo
    centers = np.linspace(lo, hi, neurons)
    if kind == "rbf_network":
        spacing = width / max(neurons - 1, 1)
        return np.concatenate([centers, np.full(neurons, 2.0 * spacing),
                               np.zeros(neurons), [0.0]])
    # tanh: slopes of a few units across the region, knees spread over it
    slope = (2.0 + rng.uniform(0.0, 2.0, neurons)) / (width / 2)
    return np.concatenate([slope, -slope * centers, np.zeros(neurons), [0.0]])


def _linear_output_layer(kind, theta, z, target, scale_by_z=False):
    """Least-squares output weights and bias for fixed hidden units."""
    f = StaticNonlinearity(kind, theta)
    k = f.neurons
    G = param_jacobian(f, z)[:, 2 * k:]
    if scale_by_z:
        G = G * z[:, None]
    sol, *_ = np.linalg.lstsq(G, target, rcond=None)
    theta = theta.copy()
    theta[2 * k:] = sol
    return theta


def fit_nonlinearity(z_samples, w_samples, kind="polynomial", size=3, region=None,
                     seed=0, max_iter=200):
    """Fit a static nonlinearity to (z, w) samples.

    ``size`` is the polynomial degree or the number of neurons. Polynomials are
    solved by linear least squares through an SVD; networks start from a
    deterministic initialization (``seed``) and are refined by
    Levenberg-Marquardt. The returned object carries the residual RMS in
    ``fit_rms``.
    """
    z = np.asarray(z_samples, dtype=float).reshape(-1)
    w = np.asarray(w_samples, dtype=float).reshape(-1)
    if z.shape != w.shape:
        raise InvalidInput("z and w must have equal length")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
        raise InvalidInput("samples must be finite")
    if kind not in KINDS:
        raise InvalidInput(f"unknown nonlinearity kind {kind!r}")
    nparam = size + 1 if kind == "polynomial" else 3 * size + 1
    if z.size < nparam:
        raise DegenerateFit(f"{z.size} samples cannot determine {nparam} parameters")
    if region is None:
        region = (float(z.min()), float(z.max())) if z.max() > z.min() else DEFAULT_REGION

    if kind == "polynomial":
        theta = _polyfit(z, w, size)
    else:
        rng = np.random.default_rng(seed)
        theta0 = _linear_output_layer(kind, _network_init(kind, size, region, rng), z, w)

        def residual(th):
            return _eval_array(StaticNonlinearity(kind, th), z) - w

        def jacobian(th):
            return param_jacobian(StaticNonlinearity(kind, th), z)

        theta = levenberg_marquardt(residual, jacobian, theta0, max_iter=max_iter,
                                    constraint=_width_guard(kind, size)).x
    f = StaticNonlinearity(kind, theta, region)
    rms = float(np.sqrt(np.mean((_eval_array(f, z) - w) ** 2)))
    return StaticNonlinearity(kind, theta, region, fit_rms=rms)


def _width_guard(kind, neurons):
    if kind != "rbf_network":
        return None
    return lambda th: bool(np.all(th[neurons:2 * neurons] > 0))


@dataclass(frozen=True, eq=False)
class FactorizedNonlinearity:
    """f(z) ~ z * fbar(z) + c over ``region``; ``fbar`` is the scheduling map."""

    c: float
    fbar: StaticNonlinearity
    region: tuple
    residual_rms: float = 0.0
    max_abs_error: float = 0.0

    def reconstruct(self, z):
        z = np.asarray(z, dtype=float)
        return z * evaluate(self.fbar, z) + self.c


def factorize(f, refit_grid_size=REFIT_GRID_SIZE, neurons=RBF_NEURONS, bound=None,
              seed=0):
    """Split f into an offset c = f(0) and a singularity-free scheduling map fbar.

    Polynomials are factorized exactly by shifting coefficients. Network
    nonlinearities are refit: z * fbar(z) is matched to f(z) - c on a dense
    grid over ``f.region`` with fbar an RBF network, since dividing by z
    would amplify any error in c near the origin.

    ``bound`` is the admissible reconstruction RMS relative to the RMS of f
    on the grid (defaults: 1e-6 for polynomials, 1e-2 for networks).
    """
    lo, hi = f.region
    grid = np.linspace(lo, hi, refit_grid_size)
    c = float(evaluate(f, 0.0))
    if not np.isfinite(c):
        raise InvalidOffset(f"offset f(0) is not finite: {c}")
    f_grid = _eval_array(f, grid)

    if f.kind == "polynomial":
        coeffs = f.theta[1:] if f.theta.size > 1 else np.zeros(1)
        fbar = StaticNonlinearity.polynomial(coeffs, f.region)
        rel = POLY_RESIDUAL_BOUND if bound is None else bound
    else:
        if refit_grid_size < 3 * neurons + 1:
            raise InvalidInput("refit grid is smaller than the scheduling-map parameter count")
        rng = np.random.default_rng(seed)
        target = f_grid - c
        theta0 = _network_init("rbf_network", neurons, f.region, rng)
        theta0 = _linear_output_layer("rbf_network", theta0, grid, target, scale_by_z=True)

        def residual(th):
            return grid * _eval_array(StaticNonlinearity("rbf_network", th), grid) - target

        def jacobian(th):
            return grid[:, None] * param_jacobian(StaticNonlinearity("rbf_network", th), grid)

        res = levenberg_marquardt(residual, jacobian, theta0, max_iter=200,
                                  constraint=_width_guard("rbf_network", neurons))
        fbar = StaticNonlinearity("rbf_network", res.x, f.region)
        rel = NETWORK_RESIDUAL_BOUND if bound is None else bound

    fbar_grid = _eval_array(fbar, grid)
    if not np.all(np.isfinite(fbar_grid)):
        raise InvalidOffset("scheduling map is not finite on the region")
    err = grid * fbar_grid + c - f_grid
    rms_err = float(np.sqrt(np.mean(err ** 2)))
    rms_f = float(np.sqrt(np.mean(f_grid ** 2)))
    limit = rel * rms_f if rms_f > 0 else rel
    if rms_err > limit:
        raise FactorizationResidualTooLarge(rms_err, limit)
    return FactorizedNonlinearity(c, fbar, f.region, rms_err, float(np.max(np.abs(err))))
