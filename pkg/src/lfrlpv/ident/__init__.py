"""Identification of nonlinear LFR models from input/output data."""
from .data import TRANSIENT_SKIP, Dataset, FitReport, compute_rmse
from .feedback import feedback_lfr, identify_feedback_lfr, init_feedback_lfr, reduce_lfr
from .linear import estimate_linear_model
from .refine import lfr_jacobian, optimize_nl_lfr
from .wiener_hammerstein import (enumerate_allocations, identify_wiener_hammerstein,
                                 pole_zero_allocation_scan)
