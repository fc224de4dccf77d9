"""Feedback-structure LFR initialization: y0 = G [u - f(y0)], y = y0 + c_y."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..errors import DegenerateFit, DivergedSimulation
from ..lfr import NonlinearLfrModel, assemble_from_blocks, simulate_nl_lfr
from ..lti import minimal_realization, ss_to_tf
from ..static_nl import StaticNonlinearity
from .data import FitReport
from .linear import estimate_linear_model
from .refine import optimize_nl_lfr


def feedback_lfr(G, f, y_offset=0.0):
    """LFR with all four blocks equal to G and the feedback sign on the w channel."""
    return assemble_from_blocks(G, G, G, G, f, w_gain=-1.0, y_offset=y_offset)


def init_feedback_lfr(lin, data, nl_degree=3, estimate_constant=False, max_rounds=30,
                      tol=1e-12):
    """Estimate the polynomial feedback nonlinearity around a linear model.

    ``lin`` must be strictly causal; when it has a direct term it is replaced
    by an output-error fit of a delayed structure of the same denominator
    order. The polynomial and the output offset c_y are obtained by linear
    least squares on

        y - G u = -G f(y0) + c_y

    The first rounds use the measured output minus the current offset
    estimate as the regressor y0; later rounds use the simulated internal
    output of the current estimate, which avoids errors-in-variables bias
    from measurement noise. The round with the lowest simulation error wins.

    The constant term of f and c_y are only separable through the transient,
    so by default the constant term is held at zero and c_y absorbs the DC
    level; ``estimate_constant=True`` estimates both.
    """
    if lin.D[0, 0] != 0.0:
        lin = estimate_linear_model(data, lin.n, delay=1, num_order=lin.n + 2)
    G = ss_to_tf(lin)
    est = data.estimation()
    u, y = est.u, est.y
    skip = 0 if estimate_constant else est.transient_skip
    target = y - lfilter(G.num, G.den, u)
    powers = list(range(0 if estimate_constant else 1, nl_degree + 1))
    region = (float(y.min()), float(y.max())) if y.max() > y.min() else (-1.0, 1.0)

    def solve(y0):
        cols = [-lfilter(G.num, G.den, y0 ** k) for k in powers] + [np.ones_like(y)]
        Phi = np.column_stack(cols)[skip:]
        colscale = np.linalg.norm(Phi, axis=0)
        colscale[colscale == 0] = 1.0
        sv = np.linalg.svd(Phi / colscale, compute_uv=False)
        if sv[-1] <= 1e-12 * sv[0]:
            raise DegenerateFit("feedback regression is rank deficient",
                                sv[0] / max(sv[-1], 1e-300))
        sol = np.linalg.lstsq(Phi / colscale, target[skip:], rcond=None)[0] / colscale
        coeffs = np.zeros(nl_degree + 1)
        coeffs[powers] = sol[:-1]
        return sol, feedback_lfr(G, StaticNonlinearity.polynomial(coeffs, region), float(sol[-1]))

    def sim_error(model):
        try:
            traj = simulate_nl_lfr(model, u)
        except DivergedSimulation:
            return np.inf, None
        return float(np.mean((traj.y - y)[skip:] ** 2)), traj.z

    best_model = feedback_lfr(G, StaticNonlinearity.polynomial(np.zeros(nl_degree + 1), region))
    best_err, _ = sim_error(best_model)
    y0 = y
    prev = None
    for mode in ("measured", "simulated"):
        prev = None
        for _ in range(max_rounds):
            sol, model = solve(y0)
            err, z = sim_error(model)
            if err < best_err:
                best_model, best_err = model, err
            if mode == "measured":
                y0 = y - model.y_offset
            elif z is None:
                break
            else:
                y0 = z
            if prev is not None and np.max(np.abs(sol - prev)) <= tol * max(1.0, np.max(np.abs(sol))):
                break
            prev = sol
        if mode == "measured":
            _, z = sim_error(best_model)
            if z is None:
                break
            y0 = z
    return best_model


def reduce_lfr(model, tol=1e-8):
    """Minimal realization of the LFR core; the nonlinearity and offset are kept."""
    core = minimal_realization(model.core, tol)
    return NonlinearLfrModel.from_core(core, model.f, model.y_offset)


@dataclass
class FeedbackResult:
    linear: object
    linear_report: FitReport
    initial: object
    reduced: object
    model: object
    report: FitReport


def identify_feedback_lfr(data, order=2, nl_degree=3, num_order=None, max_iter=100,
                          grad_mode="analytic", estimate_constant=False):
    """Delayed linear model, polynomial feedback, order reduction, joint refinement."""
    if num_order is None:
        num_order = order + 2
    lin, lin_report = estimate_linear_model(data, order, delay=1, num_order=num_order,
                                            return_report=True)
    init = init_feedback_lfr(lin, data, nl_degree, estimate_constant=estimate_constant)
    reduced = reduce_lfr(init)
    model, report = optimize_nl_lfr(reduced, data, max_iter=max_iter, grad_mode=grad_mode)
    return FeedbackResult(lin, lin_report, init, reduced, model, report)
