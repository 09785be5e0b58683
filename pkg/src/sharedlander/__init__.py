"""Shared-control lander toolkit.

Learns linear joint pilot+craft dynamics from demonstration logs, wraps the
learned model in an LQR, and filters live pilot commands so they never
oppose the optimal action.  Ships a deterministic evaluation protocol with
synthetic pilots, a metrics/statistics pipeline, and a real-time cockpit
service for human flying.
"""

from .controller import (
    CostSpec,
    LqrSolution,
    dare_fixed_point,
    default_cost,
    finite_horizon_lqr,
    half_plane_filter,
    optimal_input,
    solve_dare,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateDataError,
    InsufficientDataError,
    LogFormatError,
    ModelError,
    NonStabilizableError,
    SharedLanderError,
    SingularDataError,
)
from .experiment import (
    ExperimentConfig,
    TrialSession,
    default_config,
    derive_seed,
    evaluate_directory,
    fit_model_from_logs,
    load_config,
    run_experiment,
    run_trial,
    save_config,
)
from .koopman import (
    AffineLinearModel,
    BasisSpec,
    JointSample,
    KoopmanModel,
    extract_linear,
    fit_koopman,
    lift,
    load_model,
    predict,
    save_model,
)
from .metrics import (
    PARADIGMS,
    ErgodicSpec,
    TrialLog,
    agreement,
    ergodicity,
    heatmap,
    load_log,
    model_similarity,
    save_log,
    trial_metrics,
)
from .pilots import Pilot, PilotSpec, nominal_gains
from .sim import (
    RUNNING,
    ControlInput,
    LanderState,
    TrialOutcome,
    WorldParams,
    clamp_input,
    judge,
    sample_initial,
    step,
    wrap_angle,
)
from .stats import (
    GroupData,
    anova_oneway,
    holm_bonferroni,
    regularized_incomplete_beta,
    t_test_two_sample,
)

__version__ = "0.1.0"
