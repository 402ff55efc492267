"""Energy efficiency of cell-free massive MIMO downlink with Poisson AP layouts."""

from .config import RunConfig, default_config, load_config, write_config
from .mc import (
    NetworkRealization,
    PilotAssignment,
    assign_pilots,
    conditional_sinr,
    mc_average_se,
    sample_realization,
)
from .model import (
    DomainError,
    EEBreakdown,
    ModelInconsistencyError,
    PowerModel,
    SystemParams,
    apc_first_principles,
    apc_polynomial,
    check_gamma,
    energy_efficiency,
    noise_power,
    se_per_user,
    reference_params,
)
from .optimize import (
    Constraint,
    InfeasibleError,
    OptimumReport,
    brute_force_optimum,
    joint_optimize,
    optimal_ap_density,
    optimal_n_antennas,
    optimal_n_users,
    optimal_zeta,
    zeta_star,
)

__version__ = "0.1.0"
