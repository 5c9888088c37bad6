"""Stein variational gradient descent for targets with (L0, L1)-smooth potentials."""

from .baselines import LmcState, lmc_step, run_lmc
from .config import ConfigError, RunConfig, load_config, parse_config
from .estimators import LangevinSampler, SteinDiscrepancy, SVGDSampler
from .kernels import KernelSpec, kernel_bound
from .svgd import (
    Ensemble,
    RunResult,
    StepRejected,
    direction,
    direction_norm_squared,
    ksd_squared,
    run,
    stein_kernel,
    svgd_step,
)
from .targets import ConfigurationError, Target, TpProfile, bayesian_lasso, gaussian, generalized_gaussian
from .theory import StepPolicy, TheoryReport, theory_report

__version__ = "0.1.0"
