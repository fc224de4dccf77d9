"""
From a nonlinear LFR to an affine LPV model
===========================================

A feedback system y0 = G (u - g(y0)) with a cubic g is written as an LFR,
its nonlinearity is split into an offset and a scheduling map, and the
resulting LPV model is simulated next to the nonlinear one.
"""

# %%
import numpy as np

from lfrlpv import (StaticNonlinearity, TransferFunction, assemble_from_blocks,
                    check_scheduling_measurability, embed, factorize, minimal_realization,
                    simulate_lpv_selfscheduled, simulate_nl_lfr)
from lfrlpv.ident import reduce_lfr

G = TransferFunction([0.0, 0.488, -0.110, 0.131, -0.079, 0.026], [0.994, -1.518, 0.929])
g = StaticNonlinearity.polynomial([0.0079, 0.1166, -0.0060, 3.8885])
model = assemble_from_blocks(G, G, G, G, g, w_gain=-1.0, y_offset=0.0024)
print("assembled order:", model.n)

# %%
# All four blocks share G, so a minimal realization of the core keeps 5 states.
model = reduce_lfr(model)
print("reduced order:", model.n)

# %%
# Polynomials factorize exactly: the constant term becomes the offset c and
# the remaining coefficients shift down by one degree.
fac = factorize(g)
print("c =", fac.c, " fbar =", fac.fbar.coeffs)

# %%
# The offset c moves to the input and output of the LPV model.
rng = np.random.default_rng(0)
u = 0.05 * rng.standard_normal(5000)
lpv, smap = embed(model, fac, u)
print("input offset:", lpv.u_offset, " output offset:", lpv.y_offset_total)
print("observed scheduling range:", smap.observed_range)

# %%
# Both models produce the same output.
y_nl = simulate_nl_lfr(model, u).y
traj = simulate_lpv_selfscheduled(lpv, smap, u)
print("max |y_nl - y_lpv| =", np.max(np.abs(y_nl - traj.y)))
print("scheduling variable range:", traj.p.min(), traj.p.max())

# %%
# In this structure the scheduling signal is the offset-free output itself.
print(check_scheduling_measurability(model))
