"""Nonlinear LFR simulation and identification, and exact embedding into affine LPV models."""
from .errors import *  # noqa: F401,F403
from .lfr import (LfrTrajectory, NonlinearLfrModel, assemble_from_blocks, simulate_nl_lfr,
                  validate_structure)
from .lpv import (AffineLpvModel, SchedulingMap, check_scheduling_measurability, embed,
                  simulate_lpv_external, simulate_lpv_selfscheduled)
from .lti import (StateSpaceModel, TransferFunction, dc_gain, frequency_response,
                  markov_parameters, minimal_realization, simulate_lti, tf_to_ss)
from .static_nl import (FactorizedNonlinearity, StaticNonlinearity, evaluate, factorize,
                        fit_nonlinearity)

__version__ = "0.1.0"
