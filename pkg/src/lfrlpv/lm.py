"""Levenberg-Marquardt for nonlinear least squares."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import LfrLpvError, OptimizationStalled

log = logging.getLogger(__name__)


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    cost_history: list = field(default_factory=list)
    iterations: int = 0
    status: str = ""


def _safe_residual(fun, x):
    try:
        r = np.asarray(fun(x), dtype=float)
    except (LfrLpvError, FloatingPointError, np.linalg.LinAlgError):
        return None
    if not np.all(np.isfinite(r)):
        return None
    return r


def levenberg_marquardt(residual, jacobian, x0, max_iter=100, lambda_init=1e-2,
                        ftol=1e-10, gtol=1e-12, xtol=1e-15, lambda_max=1e16,
                        constraint=None, callback=None):
    """Minimize ``sum(residual(x)**2)``.

    Damping is applied to the column-norm-scaled normal equations (Marquardt
    scaling), so parameters with very different magnitudes share one
    ``lambda``. A step is accepted only if it strictly lowers the cost;
    rejected steps (including ones whose residual is non-finite or raises a
    package error) multiply ``lambda`` by 10.

    ``constraint(x) -> bool`` rejects infeasible trial points. Raises
    OptimizationStalled (with ``best`` holding the last accepted point) when
    every trial up to ``lambda_max`` diverged.
    """
    x = np.array(x0, dtype=float)
    r = _safe_residual(residual, x)
    if r is None:
        raise OptimizationStalled("residual is not finite at the initial point", best=x)
    cost = float(r @ r)
    history = [cost]
    lam = lambda_init
    status = "max_iter"
    iterations = 0
    J = np.asarray(jacobian(x), dtype=float)
    for _ in range(max_iter):
        g = J.T @ r
        if not np.all(np.isfinite(g)):
            raise OptimizationStalled("non-finite gradient", best=x)
        if np.max(np.abs(g), initial=0.0) < gtol or cost == 0.0:
            status = "gradient"
            break
        d = np.linalg.norm(J, axis=0)
        d[d == 0] = 1.0
        Js = J / d
        accepted = False
        all_diverged = True
        while lam <= lambda_max:
            aug = np.vstack([Js, np.sqrt(lam) * np.eye(Js.shape[1])])
            rhs = np.concatenate([-r, np.zeros(Js.shape[1])])
            step = np.linalg.lstsq(aug, rhs, rcond=None)[0] / d
            xt = x + step
            if constraint is not None and not constraint(xt):
                lam *= 10.0
                continue
            rt = _safe_residual(residual, xt)
            if rt is None:
                lam *= 10.0
                continue
            all_diverged = False
            ct = float(rt @ rt)
            if ct < cost:
                accepted = True
                break
            if np.linalg.norm(step) <= xtol * (1.0 + np.linalg.norm(x)):
                break
            lam *= 10.0
        if not accepted:
            if all_diverged and lam > lambda_max:
                raise OptimizationStalled(
                    "every trial step diverged up to the damping cap", best=x)
            status = "converged"
            break
        rel = (cost - ct) / cost
        x, r, cost = xt, rt, ct
        history.append(cost)
        iterations += 1
        lam = max(lam / 10.0, 1e-15)
        if callback is not None:
            callback(iterations, x, cost)
        log.debug("LM iter %d cost %.6e lambda %.1e", iterations, cost, lam)
        if rel < ftol:
            status = "ftol"
            break
        if np.linalg.norm(step) <= xtol * (1.0 + np.linalg.norm(x)):
            status = "xtol"
            break
        J = np.asarray(jacobian(x), dtype=float)
    return LMResult(x, cost, history, iterations, status)
