"""Output-error estimation of a linear approximation."""
from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from ..errors import DegenerateFit, InvalidInput
from ..lm import levenberg_marquardt
from ..lti import TransferFunction, tf_to_ss
from .data import FitReport, compute_rmse


def _arx(u, y, order, delay, num_order):
    """Equation-error least squares; returns monic den and num (with leading delay zeros)."""
    lag = max(order, delay + num_order)
    N = y.size
    cols = [-y[lag - k:N - k] for k in range(1, order + 1)]
    cols += [u[lag - k:N - k] for k in range(delay, delay + num_order + 1)]
    Phi = np.column_stack(cols)
    sv = np.linalg.svd(Phi, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateFit("ARX regression matrix is ill conditioned", cond)
    theta = np.linalg.lstsq(Phi, y[lag:], rcond=None)[0]
    den = np.concatenate([[1.0], theta[:order]])
    num = np.concatenate([np.zeros(delay), theta[order:]])
    return num, _stabilize(den)


def _stabilize(den):
    """Reflect denominator roots outside the unit circle to their inverses."""
    roots = np.roots(den)
    bad = np.abs(roots) >= 1.0
    if not np.any(bad):
        return den
    roots[bad] = 1.0 / np.conj(roots[bad])
    roots[np.abs(roots) >= 1.0] *= 0.99
    return np.poly(roots).real


class _OutputError:
    """Residuals and analytic Jacobian of the output-error cost."""

    def __init__(self, u, y, order, delay, num_order, skip):
        self.u, self.y = u, y
        self.order, self.delay, self.num_order = order, delay, num_order
        self.skip = skip
        self.scale = 1.0 / np.sqrt(y.size - skip)

    def split(self, theta):
        den = np.concatenate([[1.0], theta[:self.order]])
        num = np.concatenate([np.zeros(self.delay), theta[self.order:]])
        return num, den

    def simulate(self, theta):
        num, den = self.split(theta)
        return lfilter(num, den, self.u)

    def residual(self, theta):
        return (self.simulate(theta) - self.y)[self.skip:] * self.scale

    def jacobian(self, theta):
        num, den = self.split(theta)
        yhat = lfilter(num, den, self.u)
        fy = lfilter([1.0], den, yhat)
        fu = lfilter([1.0], den, self.u)
        N = self.u.size
        cols = []
        for k in range(1, self.order + 1):
            cols.append(-np.concatenate([np.zeros(k), fy[:N - k]]))
        for k in range(self.delay, self.delay + self.num_order + 1):
            cols.append(np.concatenate([np.zeros(k), fu[:N - k]]))
        return np.column_stack(cols)[self.skip:] * self.scale


def estimate_linear_model(data, order, delay=1, num_order=None, max_iter=100,
                          return_report=False):
    """Output-error linear model of the estimation part of ``data``.

    The model is ``q^-delay (b0 + ... + b_nb q^-nb) / (1 + a1 q^-1 + ... + a_n q^-n)``
    with ``nb = num_order`` (default ``order - delay``, at least 0). It is
    initialized by an ARX least-squares fit and refined by Levenberg-Marquardt
    on the simulation error. Returns the companion-form state-space model,
    plus a FitReport when ``return_report`` is set.
    """
    if order < 1:
        raise InvalidInput("order must be at least 1")
    if delay < 0:
        raise InvalidInput("delay must be non-negative")
    if num_order is None:
        num_order = max(order - delay, 0)
    est = data.estimation()
    u, y = est.u, est.y
    nparam = order + num_order + 1
    if u.size < 20 * nparam:
        raise InvalidInput(
            f"{u.size} estimation samples is too short for {nparam} parameters "
            f"(need {20 * nparam})")
    num0, den0 = _arx(u, y, order, delay, num_order)
    oe = _OutputError(u, y, order, delay, num_order, est.transient_skip)
    theta0 = np.concatenate([den0[1:], num0[delay:]])
    res = levenberg_marquardt(oe.residual, oe.jacobian, theta0, max_iter=max_iter)
    num, den = oe.split(res.x)
    model = tf_to_ss(TransferFunction(num, den))
    if not return_report:
        return model
    val = data.validation()
    rmse_val = None
    if val is not None:
        rmse_val = compute_rmse(lfilter(num, den, val.u), val.y, val.transient_skip)
    report = FitReport(float(np.sqrt(res.cost)), rmse_val, res.cost_history, res.iterations,
                       model_ref="linear", status=res.status)
    return model, report
