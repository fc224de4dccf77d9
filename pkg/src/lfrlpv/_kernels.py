"""Compiled per-sample recursions.

Nonlinearities are passed as ``(kind, theta)`` with ``kind`` one of
``POLY``, ``TANH``, ``RBF`` and ``theta`` the flat parameter vector:

* polynomial: ascending coefficients ``a0, a1, ..., ad``
* tanh network: ``W[k], b[k], V[k], b0`` for ``sum V tanh(W z + b) + b0``
* rbf network: ``c[k], s[k], V[k], b0`` for ``sum V exp(-((z - c)/s)**2) + b0``
"""
import math

import numpy as np
from numba import njit

POLY = 0
TANH = 1
RBF = 2

# states beyond this magnitude abort the simulation
DIVERGENCE_LIMIT = 1e12


@njit(cache=True)
def nl_eval(kind, theta, z):
    """Return ``(f(z), df/dz)``."""
    if kind == POLY:
        nt = theta.shape[0]
        f = theta[nt - 1]
        d = 0.0
        for k in range(nt - 2, -1, -1):
            d = d * z + f
            f = f * z + theta[k]
        return f, d
    k = (theta.shape[0] - 1) // 3
    f = theta[3 * k]
    d = 0.0
    if kind == TANH:
        for i in range(k):
            t = math.tanh(theta[i] * z + theta[k + i])
            v = theta[2 * k + i]
            f += v * t
            d += v * (1.0 - t * t) * theta[i]
    else:
        for i in range(k):
            s = theta[k + i]
            e = (z - theta[i]) / s
            g = math.exp(-e * e)
            v = theta[2 * k + i]
            f += v * g
            d -= v * g * 2.0 * e / s
    return f, d


@njit(cache=True)
def nl_param_grad(kind, theta, z, out):
    """Write d f(z) / d theta into ``out``."""
    nt = theta.shape[0]
    if kind == POLY:
        zk = 1.0
        for i in range(nt):
            out[i] = zk
            zk *= z
        return
    k = (nt - 1) // 3
    out[3 * k] = 1.0
    if kind == TANH:
        for i in range(k):
            t = math.tanh(theta[i] * z + theta[k + i])
            v = theta[2 * k + i]
            dt = v * (1.0 - t * t)
            out[i] = dt * z
            out[k + i] = dt
            out[2 * k + i] = t
    else:
        for i in range(k):
            s = theta[k + i]
            e = (z - theta[i]) / s
            g = math.exp(-e * e)
            v = theta[2 * k + i]
            out[i] = v * g * 2.0 * e / s
            out[k + i] = v * g * 2.0 * e * e / s
            out[2 * k + i] = g


@njit(cache=True)
def _diverged(x):
    for i in range(x.shape[0]):
        if not (abs(x[i]) <= DIVERGENCE_LIMIT):
            return True
    return False


@njit(cache=True)
def simulate_lti(A, B, C, D, u, x0):
    """u: (N, m) -> y: (N, p)."""
    N = u.shape[0]
    y = np.empty((N, C.shape[0]))
    x = x0.copy()
    for t in range(N):
        y[t] = C @ x + D @ u[t]
        x = A @ x + B @ u[t]
    return y


@njit(cache=True)
def simulate_lfr(A, Bu, Bw, Cy, Cz, Dyu, Dyw, Dzu, y_offset, kind, theta, u, x0):
    """Nonlinear LFR recursion with D_zw = 0.

    Returns ``(y, z, w, fail)`` where ``fail`` is the first sample index at
    which the state became non-finite or exceeded the divergence limit, or -1.
    """
    N = u.shape[0]
    n = x0.shape[0]
    y = np.empty(N)
    z = np.empty(N)
    w = np.empty(N)
    x = x0.copy()
    xn = np.empty(n)
    for t in range(N):
        ut = u[t]
        zt = Dzu * ut
        yt = Dyu * ut + y_offset
        for i in range(n):
            zt += Cz[i] * x[i]
            yt += Cy[i] * x[i]
        wt, _ = nl_eval(kind, theta, zt)
        yt += Dyw * wt
        z[t] = zt
        w[t] = wt
        y[t] = yt
        for i in range(n):
            acc = Bu[i] * ut + Bw[i] * wt
            for j in range(n):
                acc += A[i, j] * x[j]
            xn[i] = acc
        x, xn = xn, x
        if _diverged(x) or not math.isfinite(yt):
            return y, z, w, t
    return y, z, w, -1


@njit(cache=True)
def simulate_lpv(A, Ap, Bu, Bp, Cy, Cp, Dyu, Dp, Cz, Dzu, u_offset, y_offset,
                 kind, theta, u, p_ext, self_scheduled, x0):
    """Affine LPV recursion.

    When ``self_scheduled`` the scheduling signal is p = fbar(C_z x + D_zu u~)
    with ``(kind, theta)`` describing fbar; otherwise ``p_ext`` is used.
    Returns ``(y, p, z, fail)``.
    """
    N = u.shape[0]
    n = x0.shape[0]
    y = np.empty(N)
    p = np.empty(N)
    z = np.empty(N)
    x = x0.copy()
    xn = np.empty(n)
    for t in range(N):
        ut = u[t] - u_offset
        zt = Dzu * ut
        for i in range(n):
            zt += Cz[i] * x[i]
        if self_scheduled:
            pt, _ = nl_eval(kind, theta, zt)
        else:
            pt = p_ext[t]
        yt = Dyu * ut + Dp * pt * ut
        for i in range(n):
            yt += (Cy[i] + pt * Cp[i]) * x[i]
        y[t] = yt + y_offset
        p[t] = pt
        z[t] = zt
        for i in range(n):
            acc = Bu[i] * ut + Bp[i] * pt * ut
            for j in range(n):
                acc += (A[i, j] + pt * Ap[i, j]) * x[j]
            xn[i] = acc
        x, xn = xn, x
        if _diverged(x) or not math.isfinite(y[t]):
            return y, p, z, t
    return y, p, z, -1


@njit(cache=True)
def lfr_sensitivity(A, Bu, Bw, Cy, Cz, Dyu, Dyw, Dzu, y_offset, kind, theta, u, x0):
    """Output and its Jacobian with respect to every model parameter.

    Parameter order: A (row-major), Bu, Bw, Cy, Cz, Dyu, Dyw, Dzu,
    nonlinearity theta, y_offset. Returns ``(y, J, fail)`` with J of shape
    (N, P).
    """
    N = u.shape[0]
    n = x0.shape[0]
    nt = theta.shape[0]
    iA = 0
    iBu = n * n
    iBw = iBu + n
    iCy = iBw + n
    iCz = iCy + n
    iDyu = iCz + n
    iDyw = iDyu + 1
    iDzu = iDyw + 1
    iTh = iDzu + 1
    iOff = iTh + nt
    P = iOff + 1

    y = np.empty(N)
    J = np.zeros((N, P))
    x = x0.copy()
    xn = np.empty(n)
    S = np.zeros((n, P))
    Sn = np.empty((n, P))
    dz = np.empty(P)
    dw = np.empty(P)
    gth = np.empty(nt)
    for t in range(N):
        ut = u[t]
        zt = Dzu * ut
        yt = Dyu * ut + y_offset
        for i in range(n):
            zt += Cz[i] * x[i]
            yt += Cy[i] * x[i]
        wt, fp = nl_eval(kind, theta, zt)
        yt += Dyw * wt
        y[t] = yt
        nl_param_grad(kind, theta, zt, gth)

        for q in range(P):
            acc = 0.0
            for i in range(n):
                acc += Cz[i] * S[i, q]
            dz[q] = acc
        for i in range(n):
            dz[iCz + i] += x[i]
        dz[iDzu] += ut
        for q in range(P):
            dw[q] = fp * dz[q]
        for k in range(nt):
            dw[iTh + k] += gth[k]

        for q in range(P):
            acc = Dyw * dw[q]
            for i in range(n):
                acc += Cy[i] * S[i, q]
            J[t, q] = acc
        for i in range(n):
            J[t, iCy + i] += x[i]
        J[t, iDyu] += ut
        J[t, iDyw] += wt
        J[t, iOff] += 1.0

        for i in range(n):
            for q in range(P):
                acc = Bw[i] * dw[q]
                for j in range(n):
                    acc += A[i, j] * S[j, q]
                Sn[i, q] = acc
            for j in range(n):
                Sn[i, iA + i * n + j] += x[j]
            Sn[i, iBu + i] += ut
            Sn[i, iBw + i] += wt

        for i in range(n):
            acc = Bu[i] * ut + Bw[i] * wt
            for j in range(n):
                acc += A[i, j] * x[j]
            xn[i] = acc
        x, xn = xn, x
        S, Sn = Sn, S
        if _diverged(x) or not math.isfinite(yt):
            return y, J, t
    return y, J, -1
