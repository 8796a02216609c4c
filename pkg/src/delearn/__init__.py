"""Parameter learning under deficient excitation.

A numpy/scipy library for online parameter estimation when the regressor
excites only part of the parameter space: identifiable-subspace tracking,
least-squares-optimal learning with a forgetting factor, cooperative
estimation over directed sensor networks, and two linear system
identification applications, with reproducible desk-scale experiments.
"""

from .regression import (
    EvaluationError,
    ExcitationAnalysisError,
    ExcitationCertificate,
    RegressionModel,
    RegressorSignal,
    SinusoidRegressor,
    excitation_analysis,
    gram_window,
)
from .subspace import (
    SubspaceEstimatorState,
    SubspaceHyperParams,
    identifiable_factor,
    kernel_basis,
    subspace_error,
    subspace_init,
    subspace_step,
)
from .learner import (
    LearnerHyperParams,
    LearnerNumericsError,
    LearnerState,
    LeastSquaresSolution,
    batch_lsq_oracle,
    constraint_extract,
    estimate,
    learner_init,
    learner_step,
    r_matrix,
)
from .distributed import (
    ComplementaryDEReport,
    DirectedGraph,
    NodeConfig,
    SensorNetwork,
    complementary_de_check,
    left_eigenvector,
    network_init,
    network_step,
    reference_trajectory,
)
from .sysid import (
    CanonicalPlant,
    FilterBank,
    PlantDesignError,
    SysIdApp,
    build_application,
    filter_step,
    make_plant,
    plant_step,
    regressor_row,
)
from .simkit import (
    DecayFit,
    HurwitzReport,
    IntegratorConfig,
    NoiseChannel,
    decay_rate_fit,
    hurwitz_check,
    integrate,
    ltv_convergence_harness,
    rk4_step,
)
from .experiments import EstimatorRun, NetworkRun, run_estimator, run_network

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
