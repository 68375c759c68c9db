"""Scale-space gradient flows at finite truncation.

Weighted sequence spaces with a whole ladder of norms, a few model action
functionals on them, an integrator for their negative gradient flow, and
numerical checks of the decay estimates such flows satisfy near a Morse
critical point.
"""

from .analysis import (
    CheckReport,
    DecayFit,
    KappaEstimate,
    estimate_kappa,
    fit_action_decay,
    fit_decay,
    interpolation_decay_bridge,
    measure_lemma_constants,
    tail_start,
    verify_action_energy,
    verify_distance_action,
    verify_pointwise_lemma,
)
from .errors import (
    BlowUpError,
    CapabilityError,
    DivergenceError,
    DomainError,
    EstimationError,
    FitError,
    IntegrationError,
    PreconditionError,
    ScflowError,
)
from .flow import SolverConfig, Trajectory, bernoulli_oracle, bernoulli_solution, integrate_flow
from .functionals import (
    CoupledQuartic,
    CriticalPoint,
    CubicExample,
    QuadraticArea,
    critical_point,
    cubic_critical_point,
    energy,
)
from .scspace import ScVector, WeightFamily, interpolation_gap, level_norm, shift_map

__version__ = "0.1.0"
