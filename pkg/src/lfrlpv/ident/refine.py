"""Joint simulation-error refinement of nonlinear LFR models."""
from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import DivergedSimulation, InvalidInput, OptimizationStalled
from ..lfr import NonlinearLfrModel, _signal, _state, simulate_nl_lfr
from ..lm import levenberg_marquardt
from .data import FitReport, compute_rmse


def pack(model):
    """Full parameter vector in the order used by the sensitivity recursion."""
    return np.concatenate([
        model.A.reshape(-1), model.B_u, model.B_w, model.C_y, model.C_z,
        [model.D_yu, model.D_yw, model.D_zu], model.f.theta, [model.y_offset]])


def unpack(template, theta):
    n = template.n
    i = 0

    def take(k):
        nonlocal i
        out = theta[i:i + k]
        i += k
        return out

    A = take(n * n).reshape(n, n)
    B_u, B_w, C_y, C_z = take(n), take(n), take(n), take(n)
    D_yu, D_yw, D_zu = take(3)
    f = template.f.with_theta(take(template.f.theta.size))
    y_offset = take(1)[0]
    return NonlinearLfrModel(A, B_u, B_w, C_y, C_z, D_yu, D_yw, D_zu, f, y_offset)


def default_free_mask(model, fit_y_offset=True):
    """Structural nonzeros of the LTI core, every nonlinearity parameter, the offset."""
    theta = pack(model)
    nss = theta.size - model.f.theta.size - 1
    mask = np.zeros(theta.size, dtype=bool)
    mask[:nss] = theta[:nss] != 0.0
    mask[nss:-1] = True
    mask[-1] = fit_y_offset
    return mask


def lfr_jacobian(model, u, x0=None, mode="analytic", step=1e-7):
    """Simulated output and d y / d theta for every packed parameter.

    ``mode="analytic"`` propagates state sensitivities alongside the state;
    ``mode="fd"`` uses forward differences with relative step ``step``.
    """
    u = _signal(u)
    x = _state(x0, model.n)
    if mode == "analytic":
        y, J, fail = _kernels.lfr_sensitivity(
            model.A, model.B_u, model.B_w, model.C_y, model.C_z, model.D_yu, model.D_yw,
            model.D_zu, model.y_offset, model.f.kind_code, model.f.theta, u, x)
        if fail >= 0:
            raise DivergedSimulation(fail)
        return y, J
    if mode != "fd":
        raise InvalidInput(f"unknown gradient mode {mode!r}")
    theta = pack(model)
    y = simulate_nl_lfr(model, u, x).y
    J = np.empty((u.size, theta.size))
    for k in range(theta.size):
        h = step * max(1.0, abs(theta[k]))
        tp = theta.copy()
        tp[k] += h
        J[:, k] = (simulate_nl_lfr(unpack(model, tp), u, x).y - y) / h
    return y, J


def optimize_nl_lfr(model, data, max_iter=100, lambda_init=1e-2, grad_mode="analytic",
                    free=None, fit_y_offset=True):
    """Levenberg-Marquardt on the mean squared simulation error.

    All parameters selected by ``free`` (default: structural nonzeros of the
    core, the nonlinearity, and the output offset) are optimized together on
    the estimation part of ``data`` after its transient skip. Returns the
    refined model and a FitReport; ``rmse_val`` is filled when ``data`` has a
    validation part.
    """
    est = data.estimation()
    u, y = est.u, est.y
    skip = est.transient_skip
    scale = 1.0 / np.sqrt(u.size - skip)
    theta0 = pack(model)
    mask = default_free_mask(model, fit_y_offset) if free is None else np.asarray(free, bool)
    if mask.shape != theta0.shape:
        raise InvalidInput(f"free mask must have {theta0.size} entries")
    # fail early on a model that cannot even be simulated
    simulate_nl_lfr(model, u)

    def full(p):
        th = theta0.copy()
        th[mask] = p
        return th

    def residual(p):
        m = unpack(model, full(p))
        return (simulate_nl_lfr(m, u).y - y)[skip:] * scale

    def jacobian(p):
        m = unpack(model, full(p))
        _, J = lfr_jacobian(m, u, mode=grad_mode)
        return J[skip:, mask] * scale

    constraint = None
    if model.f.kind == "rbf_network":
        k = model.f.neurons
        nss = theta0.size - model.f.theta.size - 1
        constraint = lambda p: bool(np.all(full(p)[nss + k:nss + 2 * k] > 0))  # noqa: E731

    try:
        res = levenberg_marquardt(residual, jacobian, theta0[mask], max_iter=max_iter,
                                  lambda_init=lambda_init, constraint=constraint)
    except OptimizationStalled as exc:
        raise OptimizationStalled(str(exc), best=unpack(model, full(exc.best))) from exc
    best = unpack(model, full(res.x))
    val = data.validation()
    rmse_val = None
    if val is not None:
        rmse_val = compute_rmse(simulate_nl_lfr(best, val.u).y, val.y, val.transient_skip)
    report = FitReport(float(np.sqrt(res.cost)), rmse_val, res.cost_history, res.iterations,
                       model_ref="nl_lfr", status=res.status)
    return best, report
