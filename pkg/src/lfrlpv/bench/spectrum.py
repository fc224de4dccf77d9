"""One-sided DFT magnitude spectra for frequency-domain error plots."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import InvalidInput


class Spectrum(NamedTuple):
    freqs: np.ndarray
    magnitude: np.ndarray
    parseval_rel_error: float


def export_spectrum(y, transient_skip=0):
    """DFT magnitude of ``y[transient_skip:]`` at normalized frequencies 0..0.5.

    ``parseval_rel_error`` compares sum(|Y_k|^2)/N over the full two-sided
    spectrum with the time-domain energy sum(y^2).
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if not np.all(np.isfinite(y)):
        raise InvalidInput("signal must be finite")
    x = y[transient_skip:]
    if x.size < 2:
        raise InvalidInput("need at least two retained samples")
    N = x.size
    Y = np.fft.fft(x)
    energy = float(x @ x)
    spec_energy = float(np.sum(np.abs(Y) ** 2)) / N
    rel = abs(spec_energy - energy) / energy if energy > 0 else abs(spec_energy)
    half = N // 2 + 1
    return Spectrum(np.arange(half) / N, np.abs(Y[:half]), rel)
