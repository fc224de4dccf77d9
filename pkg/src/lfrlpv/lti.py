"""Discrete-time LTI state-space and transfer-function machinery."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (DimensionError, InvalidFrequency, InvalidInput,
                     InvalidTolerance, NonCausal, SingularDcGain)

#: reciprocal condition number of (I - A) below which the DC gain is undefined
DC_GAIN_RCOND = 1e-12
#: default relative rank tolerance for minimal_realization
MINREAL_TOL = 1e-8


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != ndim:
        if ndim == 2 and arr.ndim < 2 and arr.size <= 1:
            arr = arr.reshape(1, 1) if arr.size == 1 else arr.reshape(0, 0)
        else:
            raise DimensionError(name, f"expected {ndim}-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(name, "entries must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """x(t+1) = A x(t) + B u(t),  y(t) = C x(t) + D u(t).

    ``input_labels``/``output_labels`` name the columns of B, D and the rows
    of C, D (e.g. ``("u", "w")`` and ``("y", "z")`` for an LFR core).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    input_labels: tuple = None
    output_labels: tuple = None

    def __post_init__(self):
        A = _frozen(self.A, 2, "A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError("A", f"must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        D = np.asarray(self.D, dtype=float)
        if D.ndim < 2:
            D = D.reshape(1, 1) if D.size == 1 else D.reshape(-1, 1)
        p, m = D.shape
        B = B.reshape(n, m) if B.size == n * m else B
        C = C.reshape(p, n) if C.size == p * n else C
        B = _frozen(B, 2, "B")
        C = _frozen(C, 2, "C")
        D = _frozen(D, 2, "D")
        if B.shape != (n, m):
            raise DimensionError("B", f"expected shape {(n, m)}, got {B.shape}")
        if C.shape != (p, n):
            raise DimensionError("C", f"expected shape {(p, n)}, got {C.shape}")
        ins = tuple(self.input_labels) if self.input_labels is not None else tuple(
            f"u{i}" if m > 1 else "u" for i in range(m))
        outs = tuple(self.output_labels) if self.output_labels is not None else tuple(
            f"y{i}" if p > 1 else "y" for i in range(p))
        if len(ins) != m:
            raise DimensionError("input_labels", f"expected {m} labels")
        if len(outs) != p:
            raise DimensionError("output_labels", f"expected {p} labels")
        for k, v in (("A", A), ("B", B), ("C", C), ("D", D),
                     ("input_labels", ins), ("output_labels", outs)):
            object.__setattr__(self, k, v)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def shape(self):
        """(outputs, inputs)"""
        return self.D.shape

    def channel(self, input_label, output_label):
        """SISO sub-model from one labeled input to one labeled output."""
        try:
            j = self.input_labels.index(input_label)
            i = self.output_labels.index(output_label)
        except ValueError as exc:
            raise InvalidInput(f"unknown channel {input_label}->{output_label}") from exc
        return StateSpaceModel(self.A, self.B[:, [j]], self.C[[i], :], self.D[[i]][:, [j]],
                               (input_label,), (output_label,))

    def __repr__(self):
        return (f"StateSpaceModel(n={self.n}, inputs={self.input_labels}, "
                f"outputs={self.output_labels})")


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """SISO rational transfer function in the backward shift q^-1.

    ``num`` and ``den`` hold ascending-delay coefficients, so
    ``num=[0, 1], den=[1]`` is a one-sample delay.
    """

    num: np.ndarray
    den: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        num = np.atleast_1d(np.array(self.num, dtype=float))
        den = np.atleast_1d(np.array(self.den, dtype=float))
        if num.ndim != 1 or den.ndim != 1 or num.size < 1 or den.size < 1:
            raise InvalidInput("num and den must be non-empty 1-D coefficient sequences")
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise InvalidInput("transfer function coefficients must be finite")
        if den[0] == 0:
            raise NonCausal("den[0] must be nonzero")
        num.flags.writeable = False
        den.flags.writeable = False
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def min_delay(self):
        """Index of the first nonzero numerator coefficient (len(num) if all zero)."""
        nz = np.flatnonzero(self.num)
        return int(nz[0]) if nz.size else int(self.num.size)

    @classmethod
    def zero(cls):
        return cls([0.0], [1.0])

    def __neg__(self):
        return TransferFunction(-self.num, self.den)

    def impulse_response(self, length):
        """Long-division coefficients of num/den."""
        a = self.den / self.den[0]
        b = self.num / self.den[0]
        h = np.zeros(length)
        for k in range(length):
            acc = b[k] if k < b.size else 0.0
            for j in range(1, min(k, a.size - 1) + 1):
                acc -= a[j] * h[k - j]
            h[k] = acc
        return h


def _as_input_matrix(u, m):
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 1:
        if m != 1:
            raise DimensionError("u", f"model has {m} inputs; pass an (N, {m}) array")
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != m:
        raise DimensionError("u", f"expected shape (N, {m}), got {arr.shape}")
    if arr.shape[0] < 1:
        raise InvalidInput("input length must be at least 1")
    return np.ascontiguousarray(arr)


def simulate_lti(model, u, x0=None):
    """Simulate ``model`` from initial state ``x0`` (zero by default).

    Returns an (N, p) array; a 1-D input to a SISO model gives a 1-D output.
    """
    p, m = model.shape
    squeeze = np.ndim(u) == 1 and p == 1
    U = _as_input_matrix(u, m)
    x = np.zeros(model.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (model.n,):
        raise DimensionError("x0", f"expected length {model.n}, got {x.shape[0]}")
    if model.n == 0:
        y = U @ model.D.T
    else:
        y = _kernels.simulate_lti(np.ascontiguousarray(model.A), np.ascontiguousarray(model.B),
                                  np.ascontiguousarray(model.C), np.ascontiguousarray(model.D),
                                  U, x.copy())
    return y[:, 0] if squeeze else y


def dc_gain(model):
    """Steady-state gain D + C (I - A)^-1 B."""
    n = model.n
    if n == 0:
        return np.array(model.D)
    M = np.eye(n) - model.A
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= DC_GAIN_RCOND * s[0] or s[0] == 0:
        raise SingularDcGain(
            f"(I - A) is singular to working precision (rcond={s[-1] / s[0]:.2e})"
            if s[0] else "(I - A) is zero")
    return model.D + model.C @ np.linalg.solve(M, model.B)


def tf_to_ss(tf):
    """Controllable canonical (companion) realization of a transfer function.

    State k holds the filtered input delayed by k samples, so the first row
    of A carries the negated denominator coefficients.
    """
    if tf.den[0] == 0:
        raise NonCausal("den[0] must be nonzero")
    a = tf.den / tf.den[0]
    b = tf.num / tf.den[0]
    n = max(a.size, b.size) - 1
    a = np.pad(a, (0, n + 1 - a.size))
    b = np.pad(b, (0, n + 1 - b.size))
    d = b[0]
    A = np.zeros((n, n))
    if n:
        A[0, :] = -a[1:]
        A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    if n:
        B[0, 0] = 1.0
    C = (b[1:] - d * a[1:]).reshape(1, n)
    return StateSpaceModel(A, B, C, [[d]])


def ss_to_tf(model):
    """SISO state space -> TransferFunction in q^-1 (den[0] = 1)."""
    if model.shape != (1, 1):
        raise DimensionError("D", "ss_to_tf requires a SISO model")
    n = model.n
    if n == 0:
        return TransferFunction([model.D[0, 0]], [1.0])
    den = np.poly(model.A).real
    # numerator: det(zI - A + B C) - det(zI - A) + D det(zI - A)
    num = np.poly(model.A - model.B @ model.C).real - den + model.D[0, 0] * den
    return TransferFunction(num, den)


def markov_parameters(model, count):
    """First ``count`` impulse-response matrices D, CB, CAB, ... as (count, p, m)."""
    p, m = model.shape
    out = np.empty((count, p, m))
    if count == 0:
        return out
    out[0] = model.D
    X = model.B
    for k in range(1, count):
        out[k] = model.C @ X
        X = model.A @ X
    return out


def _krylov_basis(A, B, tol):
    """Orthonormal basis of the controllable subspace of (A, B).

    Block Krylov iteration with orthogonal deflation; at each stage new
    directions are kept only when their singular value exceeds ``tol``
    times the reference scale.
    """
    n = A.shape[0]
    normA = np.linalg.norm(A, 2) if n else 0.0
    V = np.zeros((n, 0))
    block = B
    scale = np.linalg.norm(B, 2)
    while V.shape[1] < n and scale > 0:
        if V.shape[1]:
            block = block - V @ (V.T @ block)
            block = block - V @ (V.T @ block)
        U, s, _ = np.linalg.svd(block, full_matrices=False)
        r = int(np.sum(s > tol * scale))
        if r == 0:
            break
        new = U[:, :r]
        V = np.hstack([V, new])
        block = A @ new
        scale = normA
    return V


def minimal_realization(model, tol=MINREAL_TOL):
    """Remove uncontrollable and unobservable states.

    Rank decisions use singular values relative to ``tol`` times the largest
    singular value at each stage. A model that is already minimal is returned
    unchanged, which makes the operation idempotent.
    """
    if not tol > 0:
        raise InvalidTolerance(f"tol must be positive, got {tol}")
    A, B, C = model.A, model.B, model.C
    n = model.n
    if n == 0:
        return model
    V = _krylov_basis(A, B, tol)
    if V.shape[1] < n:
        A, B, C = V.T @ A @ V, V.T @ B, C @ V
    W = _krylov_basis(A.T, C.T, tol)
    if W.shape[1] < A.shape[0]:
        A, B, C = W.T @ A @ W, W.T @ B, C @ W
    if A.shape[0] == n:
        return model
    return StateSpaceModel(A, B, C, model.D, model.input_labels, model.output_labels)


def frequency_response(model, normalized_freqs):
    """C (zI - A)^-1 B + D at z = exp(i 2 pi f), f in cycles per sample.

    Returns a complex array of shape (len(freqs), p, m).
    """
    f = np.atleast_1d(np.asarray(normalized_freqs, dtype=float))
    if np.any(~np.isfinite(f)) or np.any(f < 0) or np.any(f > 0.5):
        raise InvalidFrequency("normalized frequencies must lie in [0, 0.5]")
    p, m = model.shape
    out = np.empty((f.size, p, m), dtype=complex)
    eye = np.eye(model.n)
    for k, fk in enumerate(f):
        zk = np.exp(2j * np.pi * fk)
        if model.n:
            out[k] = model.C @ np.linalg.solve(zk * eye - model.A, model.B) + model.D
        else:
            out[k] = model.D
    return out


def spectral_radius(A):
    A = np.asarray(A)
    return float(np.max(np.abs(np.linalg.eigvals(A)))) if A.size else 0.0


def series(first, second):
    """SISO cascade: ``second`` driven by the output of ``first``."""
    n1, n2 = first.n, second.n
    A = np.block([[first.A, np.zeros((n1, n2))],
                  [second.B @ first.C, second.A]])
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpaceModel(A, B, C, D, first.input_labels, second.output_labels)
