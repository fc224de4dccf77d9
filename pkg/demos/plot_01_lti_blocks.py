"""
Linear building blocks
======================

Transfer functions in the backward shift, their companion realizations,
and the basic analysis helpers used by the rest of the package.
"""

# %%
# A second-order block with a one-sample delay. Coefficients are listed in
# ascending powers of q^-1.
import numpy as np

from lfrlpv import (StateSpaceModel, TransferFunction, dc_gain, frequency_response, markov_parameters,
                    minimal_realization, simulate_lti, tf_to_ss)

G = TransferFunction([0.0, 0.488, -0.110, 0.131, -0.079, 0.026], [0.994, -1.518, 0.929])
ss = tf_to_ss(G)
print("states:", ss.n)
print("DC gain:", dc_gain(ss)[0, 0])

# %%
# Simulation agrees with the long-division impulse response.
impulse = np.zeros(20)
impulse[0] = 1.0
print(np.allclose(simulate_lti(ss, impulse), G.impulse_response(20)))

# %%
# Frequency response on a normalized grid (cycles per sample).
freqs = np.linspace(0, 0.5, 6)
for f, h in zip(freqs, frequency_response(ss, freqs)[:, 0, 0]):
    print(f"f={f:.2f}  |G|={abs(h):.4f}")

# %%
# Two copies in parallel share their modes, so half of the states can go.
A = np.block([[ss.A, np.zeros((5, 5))], [np.zeros((5, 5)), ss.A]])
B = np.vstack([ss.B, ss.B])
C = np.hstack([ss.C, 0.5 * ss.C])
doubled = StateSpaceModel(A, B, C, ss.D)
reduced = minimal_realization(doubled)
print("order", doubled.n, "->", reduced.n)
print("max impulse difference:",
      np.max(np.abs(markov_parameters(reduced, 50) - markov_parameters(doubled, 50))))
