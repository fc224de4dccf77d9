"""Embedding of nonlinear LFR models into affine LPV state-space form.

    x(t+1) = (A + p A_p) x + (B_u + p B_p) u~
    y~(t)  = (C_y + p C_p) x + (D_yu + p D_p) u~
    p(t)   = fbar(C_z x + D_zu u~)

with u~ = u - u_offset and y = y~ + y_offset_total.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import (DivergedSimulation, InvalidInput, OffsetUndefined, SingularDcGain)
from .lfr import _signal, _state, channel_dc_gains, offset_gains, simulate_nl_lfr
from .lti import StateSpaceModel, markov_parameters
from .static_nl import StaticNonlinearity, evaluate


def _ro(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class AffineLpvModel:
    """Affine LPV model with constant input/output offsets.

    ``x_offset`` is the constant state shift between the nonlinear model and
    this representation (x_lpv = x_nl - x_offset); it is zero when c = 0.
    ``y_offset_total`` includes the offset inherited from the nonlinear model.
    """

    A: np.ndarray
    A_p: np.ndarray
    B_u: np.ndarray
    B_p: np.ndarray
    C_y: np.ndarray
    C_p: np.ndarray
    D_yu: float
    D_p: float
    u_offset: float = 0.0
    y_offset_total: float = 0.0
    x_offset: np.ndarray = None
    inherited_y_offset: float = 0.0

    def __post_init__(self):
        n = np.shape(self.A)[0]
        for name in ("A", "A_p", "B_u", "B_p", "C_y", "C_p"):
            object.__setattr__(self, name, _ro(getattr(self, name)))
        xo = np.zeros(n) if self.x_offset is None else self.x_offset
        object.__setattr__(self, "x_offset", _ro(np.reshape(xo, n)))
        for name in ("D_yu", "D_p", "u_offset", "y_offset_total", "inherited_y_offset"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n(self):
        return self.A.shape[0]

    def frozen(self, p):
        """LTI model obtained by holding the scheduling variable at ``p``."""
        return StateSpaceModel(self.A + p * self.A_p, (self.B_u + p * self.B_p)[:, None],
                               (self.C_y + p * self.C_p)[None, :], [[self.D_yu + p * self.D_p]])

    def default_state(self):
        """LPV state matching a nonlinear model at rest (x_nl = 0)."""
        return -np.array(self.x_offset)


@dataclass(frozen=True, eq=False)
class SchedulingMap:
    """p(t) = fbar(C_z x(t) + D_zu u~(t))."""

    fbar: StaticNonlinearity
    C_z: np.ndarray
    D_zu: float
    observed_range: tuple

    def __post_init__(self):
        object.__setattr__(self, "C_z", _ro(np.reshape(self.C_z, -1)))
        object.__setattr__(self, "D_zu", float(self.D_zu))
        object.__setattr__(self, "observed_range", tuple(float(v) for v in self.observed_range))

    def __call__(self, x, u_tilde):
        return evaluate(self.fbar, float(self.C_z @ np.asarray(x)) + self.D_zu * u_tilde)


def embed(model, factorization, u=None):
    """Affine LPV representation of ``model`` given a factorization of its nonlinearity.

    The rank-one scheduling matrices are outer products of (B_w; D_yw) and
    (C_z, D_zu). For c != 0 the offset is relocated to the input and output
    through the channel DC gains; a Wiener-Hammerstein core (G4 = 0) gets no
    input offset and an output offset of G0_3 c.

    When an input sequence ``u`` is given, the nonlinear model is simulated on
    it and the observed z-range is stored in the scheduling map.
    """
    Bw, Cz = model.B_w, model.C_z
    A_p = np.outer(Bw, Cz)
    B_p = Bw * model.D_zu
    C_p = model.D_yw * Cz
    D_p = model.D_yw * model.D_zu
    c = float(factorization.c)
    n = model.n
    if c != 0.0:
        g0 = channel_dc_gains(model)
        if g0[1] is None:
            raise SingularDcGain("(I - A) is singular; offsets cannot be relocated")
        r, s = offset_gains(g0)
        if not (np.isfinite(r) and np.isfinite(s)):
            raise OffsetUndefined("G0_2 vanishes; the input offset is undefined for c != 0")
        u_offset = -r * c if r else 0.0
        y_shift = s * c
        # steady state of the nonlinear model's state driven by c through B_w and r c through B_u
        x_offset = np.linalg.solve(np.eye(n) - model.A, (Bw - model.B_u * r) * c) if n else np.zeros(0)
    else:
        u_offset = 0.0
        y_shift = 0.0
        x_offset = np.zeros(n)
    lpv = AffineLpvModel(model.A, A_p, model.B_u, B_p, model.C_y, C_p, model.D_yu, D_p,
                         u_offset, y_shift + model.y_offset, x_offset, model.y_offset)
    observed = factorization.region
    if u is not None:
        z = simulate_nl_lfr(model, u).z
        observed = (float(z.min()), float(z.max()))
        if not np.all(np.isfinite(evaluate(factorization.fbar, np.linspace(*observed, 1001)))):
            raise InvalidInput("scheduling map is not finite on the observed range")
    smap = SchedulingMap(factorization.fbar, Cz, model.D_zu, observed)
    return lpv, smap


class LpvTrajectory(NamedTuple):
    y: np.ndarray
    p: np.ndarray
    z: np.ndarray


def _run(lpv, smap, u, p_ext, x0):
    u = _signal(u)
    x = lpv.default_state() if x0 is None else _state(x0, lpv.n)
    if smap is None:
        kind, theta = _kernels.POLY, np.zeros(1)
        Cz, Dzu = np.zeros(lpv.n), 0.0
        self_sched = False
    else:
        kind, theta = smap.fbar.kind_code, smap.fbar.theta
        Cz, Dzu = smap.C_z, smap.D_zu
        self_sched = True
        p_ext = np.zeros(1)
    y, p, z, fail = _kernels.simulate_lpv(
        lpv.A, lpv.A_p, lpv.B_u, lpv.B_p, lpv.C_y, lpv.C_p, lpv.D_yu, lpv.D_p, Cz, Dzu,
        lpv.u_offset, lpv.y_offset_total, kind, theta, u, p_ext, self_sched,
        np.ascontiguousarray(x, dtype=float))
    if fail >= 0:
        raise DivergedSimulation(fail)
    return y, p, z


def simulate_lpv_selfscheduled(lpv, smap, u, x0=None):
    """Simulate with p(t) computed online from the model's own z(t).

    ``x0`` is in LPV coordinates; by default the state corresponding to the
    nonlinear model at rest is used. The returned z is in offset-corrected
    input coordinates.
    """
    return LpvTrajectory(*_run(lpv, smap, u, None, x0))


def simulate_lpv_external(lpv, u, p, x0=None):
    """Simulate with a supplied scheduling trajectory ``p``; returns y."""
    u = _signal(u)
    p = _signal(p, "p")
    if p.shape != u.shape:
        raise InvalidInput(f"u and p lengths differ ({u.size} vs {p.size})")
    return _run(lpv, None, u, p, x0)[0]


@dataclass(frozen=True)
class MeasurabilityReport:
    measurable: bool
    u_channel_mismatch: float
    w_channel_mismatch: float


def check_scheduling_measurability(model, tol=1e-8):
    """Whether z(t) equals the offset-free output y~(t) for every input.

    Compares the Markov parameters of u->z with u->y and of w->z with w->y
    over 4n samples; both pairs must agree to ``tol`` relative to the largest
    Markov parameter.
    """
    core = model.core
    count = max(4 * model.n, 1)
    M = markov_parameters(core, count)
    scale = max(np.max(np.abs(M)), 1e-300)
    du = float(np.max(np.abs(M[:, 1, 0] - M[:, 0, 0])) / scale)
    dw = float(np.max(np.abs(M[:, 1, 1] - M[:, 0, 1])) / scale)
    return MeasurabilityReport(du <= tol and dw <= tol, du, dw)
