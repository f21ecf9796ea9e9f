"""Data-driven L-delay inversion of discrete-time LTI systems.

Recover the input that produced an observed output using only Hankel
matrices of previously recorded input/output data, and close a disturbance
observer loop around that inverse.
"""

from ._kernels import BACKEND
from ._linalg import get_rank_tol, numerical_rank, rank_tol, set_rank_tol
from .constrained import SolverConfig, TrackingProblem, TrackingResult, track
from .dob import DobRun, run_dob, verify_transfer_relation
from .errors import (
    BehinvError,
    ConvergenceError,
    InconsistentTrajectoryError,
    InfeasibleHistoryError,
    NoInverseError,
    NotObservableError,
    NumericalError,
    PEGenerationError,
    PreconditionError,
    UnsupportedSystemError,
)
from .hankel import DataBank, build_data_bank, generate_pe_input, hankel, pe_check
from .inversion import (
    InversionProblem,
    InverterState,
    complete_input_tail,
    feedback_radius,
    nullspace_equality_check,
    recover_input,
    run_algorithm1,
    run_algorithm2,
    solve_g,
    step_algorithm2,
)
from .lti import (
    InverseRealization,
    StateSpaceSystem,
    build_model_inverse,
    has_delay_inverse,
    inherent_delay,
    observability_index,
    observability_matrix,
    simulate,
    simulate_inverse,
    toeplitz_matrix,
)
from .signals import Signal, read_signal_csv, write_signal_csv

__version__ = "0.1.0"
