"""LPV-ARX identification with recursive least squares, demonstrated on a
simulated miniature helicopter."""

from .errors import DivergenceError, NumericError, SingularityError, StructuralError, TrimError
from .ident import (FitReport, IdentConfig, RlsState, batch_ls, build_regressor, excitation_rank,
                    fit_metrics, identify, rls_init, rls_step)
from .lpv import (CoefficientFunction, LpvIoModel, PolyBasis, TimeSeries, eval_coeff, frozen_lti,
                  frozen_spectral_radius, predict_one_step, rebase_basis, simulate_free_run,
                  to_state_space)

__version__ = "0.1.0"
