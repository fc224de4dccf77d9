"""Nonlinear LFR models: an LTI core closed through one scalar static nonlinearity.

    x(t+1) = A x(t) + B_u u(t) + B_w w(t)
    y(t)   = C_y x(t) + D_yu u(t) + D_yw w(t) + y_offset
    z(t)   = C_z x(t) + D_zu u(t)            (D_zw = 0)
    w(t)   = f(z(t))
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import block_diag

from . import _kernels
from .errors import AlgebraicLoop, DimensionError, DivergedSimulation, InvalidInput, SingularDcGain
from .lti import StateSpaceModel, dc_gain, spectral_radius, tf_to_ss
from .static_nl import StaticNonlinearity, evaluate


def _ro(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class NonlinearLfrModel:
    A: np.ndarray
    B_u: np.ndarray
    B_w: np.ndarray
    C_y: np.ndarray
    C_z: np.ndarray
    D_yu: float
    D_yw: float
    D_zu: float
    f: StaticNonlinearity
    y_offset: float = 0.0
    D_zw: float = 0.0

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 and A.size <= 1:
            A = A.reshape((1, 1) if A.size else (0, 0))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError("A", f"must be square, got {A.shape}")
        vals = {"A": A}
        for name in ("B_u", "B_w", "C_y", "C_z"):
            v = np.array(getattr(self, name), dtype=float).reshape(-1)
            if v.shape != (n,):
                raise DimensionError(name, f"expected {n} entries, got {v.size}")
            vals[name] = v
        for name in ("D_yu", "D_yw", "D_zu", "D_zw", "y_offset"):
            vals[name] = float(np.asarray(getattr(self, name), dtype=float).reshape(()))
        for name, v in vals.items():
            if not np.all(np.isfinite(v)):
                raise DimensionError(name, "entries must be finite")
        if vals["D_zw"] != 0.0:
            raise AlgebraicLoop("D_zw must be zero: the w -> z path needs a one-sample delay")
        if not isinstance(self.f, StaticNonlinearity):
            raise InvalidInput("f must be a StaticNonlinearity")
        for name, v in vals.items():
            object.__setattr__(self, name, _ro(v) if isinstance(v, np.ndarray) else v)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def core(self):
        """LTI core with inputs (u, w) and outputs (y, z)."""
        B = np.column_stack([self.B_u, self.B_w]) if self.n else np.zeros((0, 2))
        C = np.vstack([self.C_y, self.C_z]) if self.n else np.zeros((2, 0))
        D = [[self.D_yu, self.D_yw], [self.D_zu, self.D_zw]]
        return StateSpaceModel(self.A, B, C, D, ("u", "w"), ("y", "z"))

    @classmethod
    def from_core(cls, core, f, y_offset=0.0):
        """Build from a 2-input 2-output core labeled (u, w) -> (y, z)."""
        iu, iw = core.input_labels.index("u"), core.input_labels.index("w")
        oy, oz = core.output_labels.index("y"), core.output_labels.index("z")
        if core.D[oz, iw] != 0.0:
            raise AlgebraicLoop("core has a direct w -> z term")
        return cls(core.A, core.B[:, iu], core.B[:, iw], core.C[oy], core.C[oz],
                   core.D[oy, iu], core.D[oy, iw], core.D[oz, iu], f, y_offset)

    def replace(self, **changes):
        fields = {k: getattr(self, k) for k in ("A", "B_u", "B_w", "C_y", "C_z", "D_yu",
                                                 "D_yw", "D_zu", "f", "y_offset")}
        fields.update(changes)
        return NonlinearLfrModel(**fields)

    def __repr__(self):
        return f"NonlinearLfrModel(n={self.n}, f={self.f!r}, y_offset={self.y_offset:g})"


def assemble_from_blocks(G1, G2, G3, G4, f, w_gain=1.0, y_offset=0.0):
    """Interconnect four SISO blocks into one LFR state-space core.

    y = G1 u + G3 w,  z = G2 u + G4 w,  w = f(z), with the w channel scaled by
    ``w_gain``. Feedback structures of the form x = u - g(y) use
    ``w_gain=-1`` so that ``f`` keeps the same coefficients as g. The state
    vector stacks the companion realizations of G1..G4 in order.
    """
    if G4.min_delay < 1:
        raise AlgebraicLoop("G4 has a direct term; the w -> z loop would be algebraic")
    blocks = [tf_to_ss(G) for G in (G1, G2, G3, G4)]
    sizes = [b.n for b in blocks]
    n = sum(sizes)
    A = block_diag(*[b.A for b in blocks]) if n else np.zeros((0, 0))
    off = np.cumsum([0] + sizes)

    def embed_col(k, vec):
        out = np.zeros(n)
        out[off[k]:off[k + 1]] = vec
        return out

    B_u = embed_col(0, blocks[0].B[:, 0]) + embed_col(1, blocks[1].B[:, 0])
    B_w = w_gain * (embed_col(2, blocks[2].B[:, 0]) + embed_col(3, blocks[3].B[:, 0]))
    C_y = embed_col(0, blocks[0].C[0]) + embed_col(2, blocks[2].C[0])
    C_z = embed_col(1, blocks[1].C[0]) + embed_col(3, blocks[3].C[0])
    return NonlinearLfrModel(A, B_u, B_w, C_y, C_z, blocks[0].D[0, 0],
                             w_gain * blocks[2].D[0, 0], blocks[1].D[0, 0], f, y_offset)


@dataclass(frozen=True)
class LfrDiagnostics:
    dzw_zero: bool
    spectral_radius: float
    g0: dict
    c: float
    input_offset_ratio: float
    output_offset_gain: float
    offsets_finite: bool
    offsets_required: bool

    @property
    def offsets_defined(self):
        """Offsets are usable: either finite or not needed (c == 0)."""
        return self.offsets_finite or not self.offsets_required


def channel_dc_gains(model):
    """DC gains keyed 1..4 for u->y, u->z, w->y, w->z (None when undefined)."""
    core = model.core
    try:
        G = dc_gain(core)
    except SingularDcGain:
        return {k: None for k in (1, 2, 3, 4)}
    return {1: float(G[0, 0]), 2: float(G[1, 0]), 3: float(G[0, 1]), 4: float(G[1, 1])}


def offset_gains(g0, rel_tol=1e-12):
    """(r, s) with u~ = u + r c and y~ = y - s c; (nan, nan) when undefined.

    r = G0_4 / G0_2 and s = G0_3 - G0_1 G0_4 / G0_2. A vanishing G0_4 gives
    r = 0 exactly regardless of G0_2.
    """
    if any(g0[k] is None for k in (1, 2, 3, 4)):
        return float("nan"), float("nan")
    g1, g2, g3, g4 = (g0[k] for k in (1, 2, 3, 4))
    if g4 == 0.0:
        return 0.0, g3
    scale = max(abs(g1), abs(g2), abs(g3), abs(g4))
    if abs(g2) <= rel_tol * scale:
        return float("nan"), float("nan")
    r = g4 / g2
    return r, g3 - g1 * r


def validate_structure(model):
    g0 = channel_dc_gains(model)
    r, s = offset_gains(g0)
    c = float(evaluate(model.f, 0.0))
    return LfrDiagnostics(
        dzw_zero=model.D_zw == 0.0,
        spectral_radius=spectral_radius(model.A),
        g0=g0,
        c=c,
        input_offset_ratio=r,
        output_offset_gain=s,
        offsets_finite=bool(np.isfinite(r) and np.isfinite(s)),
        offsets_required=c != 0.0,
    )


class LfrTrajectory(NamedTuple):
    y: np.ndarray
    z: np.ndarray
    w: np.ndarray


def _signal(u, name="u"):
    arr = np.ascontiguousarray(np.asarray(u, dtype=float).reshape(-1))
    if arr.size < 1:
        raise InvalidInput(f"{name} must contain at least one sample")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} must be finite")
    return arr


def _state(x0, n):
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (n,):
        raise DimensionError("x0", f"expected length {n}")
    return np.ascontiguousarray(x)


def simulate_nl_lfr(model, u, x0=None):
    """Simulate the LFR; returns (y, z, w) including ``y_offset`` in y."""
    u = _signal(u)
    x = _state(x0, model.n)
    y, z, w, fail = _kernels.simulate_lfr(
        model.A, model.B_u, model.B_w, model.C_y, model.C_z, model.D_yu, model.D_yw,
        model.D_zu, model.y_offset, model.f.kind_code, model.f.theta, u, x)
    if fail >= 0:
        raise DivergedSimulation(fail)
    return LfrTrajectory(y, z, w)
