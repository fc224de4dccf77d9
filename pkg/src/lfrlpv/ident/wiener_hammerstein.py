"""Wiener-Hammerstein initialization by pole-zero allocation."""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..errors import (AllCandidatesFailed, DivergedSimulation, InternalError, InvalidInput,
                      OptimizationStalled)
from ..lfr import assemble_from_blocks, simulate_nl_lfr
from ..lti import TransferFunction, ss_to_tf
from ..static_nl import StaticNonlinearity, fit_nonlinearity
from .data import FitReport
from .linear import estimate_linear_model
from .refine import optimize_nl_lfr

#: samples dropped when scoring scan candidates
SCAN_SKIP = 200
#: relative (to output RMS) RMSE gap below which candidates count as tied
TIE_RTOL = 1e-9


def root_groups(roots, tol=1e-8):
    """Group roots into real singletons and complex-conjugate pairs.

    Groups are ordered by ascending real part, then imaginary magnitude,
    so enumeration order is reproducible.
    """
    roots = list(np.asarray(roots, dtype=complex))
    roots.sort(key=lambda r: (r.real, abs(r.imag)))
    groups = []
    used = [False] * len(roots)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        used[i] = True
        if abs(r.imag) <= tol * max(1.0, abs(r)):
            groups.append(np.array([r.real]))
            continue
        best, dist = None, np.inf
        for j in range(i + 1, len(roots)):
            if not used[j]:
                d = abs(roots[j] - np.conj(r))
                if d < dist:
                    best, dist = j, d
        if best is None:
            raise InvalidInput(f"complex root {r} has no conjugate partner")
        used[best] = True
        groups.append(np.array([r, np.conj(r)]))
    return groups


def linear_poles_zeros(lin, rel_tol=1e-9):
    """Poles, zeros and pure delay of a SISO state-space model."""
    tf = ss_to_tf(lin)
    num = np.array(tf.num)
    big = np.max(np.abs(num))
    if big == 0:
        raise InvalidInput("linear model has a zero transfer function")
    num[np.abs(num) <= rel_tol * big] = 0.0
    nz = np.flatnonzero(num)
    delay = int(nz[0])
    num = np.trim_zeros(num[delay:], "b")
    zeros = np.roots(num) if num.size > 1 else np.zeros(0)
    poles = np.roots(tf.den) if tf.den.size > 1 else np.zeros(0)
    poles = poles[np.abs(poles) > rel_tol]
    return poles, zeros, delay


@dataclass(frozen=True)
class Allocation:
    """Which pole and zero groups go to the front block G2."""

    index: int
    front_poles: tuple
    front_zeros: tuple


def enumerate_allocations(pole_groups, zero_groups):
    """Every assignment of groups to the front block; the rest go to the back block."""
    out = []
    for k, (pm, zm) in enumerate(itertools.product(
            itertools.product((False, True), repeat=len(pole_groups)),
            itertools.product((False, True), repeat=len(zero_groups)))):
        out.append(Allocation(k, pm, zm))
    return out


def _block(zero_groups, pole_groups, delay):
    zeros = np.concatenate(zero_groups) if zero_groups else np.zeros(0)
    poles = np.concatenate(pole_groups) if pole_groups else np.zeros(0)
    num = np.concatenate([np.zeros(delay), np.atleast_1d(np.poly(zeros).real)])
    den = np.atleast_1d(np.poly(poles).real)
    dc = num.sum() / den.sum()
    if np.isfinite(dc) and abs(dc) > 1e-8:
        num = num / dc
    return TransferFunction(num, den)


@dataclass(frozen=True)
class ScanCandidate:
    allocation: Allocation
    G2: TransferFunction
    G3: TransferFunction
    coeffs: np.ndarray
    rmse: float
    z_range: tuple


def _score(alloc, pole_groups, zero_groups, delay, u, y, nl_degree, skip):
    G2 = _block([g for g, s in zip(zero_groups, alloc.front_zeros) if s],
                [g for g, s in zip(pole_groups, alloc.front_poles) if s], delay)
    G3 = _block([g for g, s in zip(zero_groups, alloc.front_zeros) if not s],
                [g for g, s in zip(pole_groups, alloc.front_poles) if not s], 0)
    with np.errstate(all="ignore"):
        z = lfilter(G2.num, G2.den, u)
        Phi = np.column_stack([lfilter(G3.num, G3.den, z ** k) for k in range(nl_degree + 1)])
    if not np.all(np.isfinite(Phi)):
        return ScanCandidate(alloc, G2, G3, np.zeros(nl_degree + 1), np.inf, (0.0, 0.0))
    colscale = np.linalg.norm(Phi[skip:], axis=0)
    colscale[colscale == 0] = 1.0
    sol = np.linalg.lstsq(Phi[skip:] / colscale, y[skip:], rcond=None)[0] / colscale
    err = Phi[skip:] @ sol - y[skip:]
    rmse = float(np.sqrt(np.mean(err ** 2)))
    return ScanCandidate(alloc, G2, G3, sol, rmse, (float(z.min()), float(z.max())))


def pole_zero_allocation_scan(lin, data, nl_degree=3, scan_skip=SCAN_SKIP, workers=None,
                              return_candidates=False):
    """Split a linear model into front/back blocks and pick the best fit.

    For every allocation of the linear model's poles and zeros (conjugate
    pairs kept together) the front block G2 is simulated on the input and a
    polynomial nonlinearity is estimated by linear least squares on the
    G3-filtered monomials of its output. The pure delay stays in front. The
    candidate with the smallest estimation RMSE is returned as a
    Wiener-Hammerstein LFR (G1 = G4 = 0); ties go to the lowest index.
    """
    if not 0 <= nl_degree <= 3:
        raise InvalidInput("the scan polynomial degree must be between 0 and 3")
    est = data.estimation()
    u, y = est.u, est.y
    skip = min(scan_skip, u.size // 2)
    poles, zeros, delay = linear_poles_zeros(lin)
    pole_groups, zero_groups = root_groups(poles), root_groups(zeros)
    allocations = enumerate_allocations(pole_groups, zero_groups)
    if not allocations:
        raise InternalError("no allocation candidates")

    def run(alloc):
        return _score(alloc, pole_groups, zero_groups, delay, u, y, nl_degree, skip)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            candidates = list(pool.map(run, allocations))
    else:
        candidates = [run(a) for a in allocations]
    candidates.sort(key=lambda c: c.allocation.index)
    finite = [c for c in candidates if np.isfinite(c.rmse)]
    if not finite:
        raise AllCandidatesFailed("every allocation candidate diverged")
    # candidates within roundoff of the minimum are ties, resolved by index
    y_rms = float(np.sqrt(np.mean(y[skip:] ** 2)))
    model = candidate_model(ranked_candidates(finite, y_rms)[0])
    if return_candidates:
        return model, candidates
    return model


def ranked_candidates(candidates, y_rms):
    """Finite candidates by ascending RMSE.

    Candidates within roundoff of the smallest RMSE count as tied with it, and
    the lowest allocation index among them is ranked first.
    """
    ranked = sorted((c for c in candidates if np.isfinite(c.rmse)),
                    key=lambda c: (c.rmse, c.allocation.index))
    if not ranked:
        return ranked
    floor = ranked[0].rmse
    tied = [c for c in ranked if c.rmse <= floor + TIE_RTOL * (floor + y_rms)]
    head = min(tied, key=lambda c: c.allocation.index)
    return [head] + [c for c in ranked if c is not head]


def candidate_model(cand):
    """Wiener-Hammerstein LFR (G1 = G4 = 0) built from a scan candidate."""
    lo, hi = cand.z_range
    region = (lo, hi) if hi > lo else (-1.0, 1.0)
    f = StaticNonlinearity.polynomial(cand.coeffs, region)
    return assemble_from_blocks(TransferFunction.zero(), cand.G2, cand.G3,
                                TransferFunction.zero(), f)


@dataclass
class WienerHammersteinResult:
    linear: object
    linear_report: FitReport
    initial: object
    model: object
    report: FitReport


def identify_wiener_hammerstein(data, order, nl_degree=3, delay=1, num_order=None,
                                max_iter=100, grad_mode="analytic", workers=None,
                                tanh_neurons=None, seed=0, starts=3):
    """Linear approximation, allocation scan, then joint refinement.

    The ``starts`` best scan candidates are each refined and the one with the
    lowest estimation cost is kept (earlier rank wins ties), which guards
    against local minima when the linear model places poles or zeros poorly.

    With ``tanh_neurons`` set, the refined polynomial is replaced by a tanh
    network fitted to its graph over the observed z-range, and all parameters
    are optimized once more.
    """
    if starts < 1:
        raise InvalidInput("starts must be at least 1")
    lin, lin_report = estimate_linear_model(data, order, delay, num_order,
                                            return_report=True)
    _, candidates = pole_zero_allocation_scan(lin, data, nl_degree, workers=workers,
                                              return_candidates=True)
    est = data.estimation()
    y_rms = float(np.sqrt(np.mean(est.y[min(SCAN_SKIP, est.u.size // 2):] ** 2)))
    ranked = ranked_candidates(candidates, y_rms)[:starts]
    init, model, report = None, None, None
    for cand in ranked:
        start = candidate_model(cand)
        try:
            fitted, rep = optimize_nl_lfr(start, data, max_iter=max_iter, grad_mode=grad_mode)
        except (DivergedSimulation, OptimizationStalled):
            continue
        if report is None or rep.rmse_est < report.rmse_est:
            init, model, report = start, fitted, rep
    if model is None:
        raise AllCandidatesFailed("refinement failed from every scan candidate")
    u_est = data.estimation().u
    z = simulate_nl_lfr(model, u_est).z
    if z.max() > z.min():
        model = model.replace(f=model.f.with_region((float(z.min()), float(z.max()))))
    if tanh_neurons:
        grid = np.linspace(*model.f.region, 1000)
        net = fit_nonlinearity(grid, model.f(grid), "tanh_network", tanh_neurons,
                               region=model.f.region, seed=seed)
        model, report = optimize_nl_lfr(model.replace(f=net), data, max_iter=max_iter,
                                        grad_mode=grad_mode)
        z = simulate_nl_lfr(model, u_est).z
        model = model.replace(f=model.f.with_region((float(z.min()), float(z.max()))))
    return WienerHammersteinResult(lin, lin_report, init, model, report)
