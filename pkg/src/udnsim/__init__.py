"""udnsim: mean-field power control and queue-aware scheduling for
ultra-dense small-cell networks."""

from .baseline import BaselineState, myopic_power, pf_schedule, update_interference_estimate
from .config import RunConfig, load_config
from .deployment import Deployment, generate_deployment, grid_side
from .errors import (CflError, ConfigError, ConvergenceError, InvariantError,
                     SchemeError, UdnsimError)
from .fields import (DensityField, GridSpec, MfgSolution, PowerPolicy, ValueField,
                     initial_density, terminal_value)
from .phy import LinkState, PathlossModel, PhyParams, QueueParams, QueueVector
from .power_opt import existence_check, maximize_rate_value, optimal_power_pointwise
from .scheduler import DppParams, SchedulerState, dpp_step
from .simulate import EpisodeMetrics, ReplicationSummary, run_episode, run_replications
from .solution_io import load_solution, save_solution
from .solver import drift_field, fpk_forward, hjb_backward, mf_interference, solve_mfg

__version__ = "0.1.0"

__all__ = [
    "BaselineState", "CflError", "ConfigError", "ConvergenceError",
    "Deployment", "DensityField", "DppParams", "EpisodeMetrics", "GridSpec",
    "InvariantError", "LinkState", "MfgSolution", "PathlossModel", "PhyParams",
    "PowerPolicy", "QueueParams", "QueueVector", "ReplicationSummary",
    "RunConfig", "SchedulerState", "SchemeError", "UdnsimError", "ValueField",
    "__version__", "dpp_step", "drift_field", "existence_check", "fpk_forward",
    "generate_deployment", "grid_side", "hjb_backward", "initial_density",
    "load_config", "load_solution", "maximize_rate_value", "mf_interference",
    "myopic_power", "optimal_power_pointwise", "pf_schedule", "run_episode",
    "run_replications", "save_solution", "solve_mfg", "terminal_value",
    "update_interference_estimate",
]
