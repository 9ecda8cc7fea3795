"""Supermeasured hidden-variable models.

Simulates state spaces whose measure, rather than the distribution over
them, carries the dependence between hidden variables and measurement
settings, and checks the resulting statistics against quantum mechanics.
"""
from . import chsh, ist, lorenz, measure, quantum, sampling, stats
from .chsh import (
    OPTIMAL_ANGLES,
    Ensemble,
    HiddenVariableDraw,
    SubspaceLabel,
    SupermeasuredModel,
    bell_si_violation,
    build_model,
    chsh_statistic,
    estimate_expectation,
    outcome,
    physical_si_test,
    run_chsh,
    sample_ensemble,
)
from .errors import *  # noqa: F401,F403
from .ist import (
    CpState,
    RationalAmplitude,
    RationalAngle,
    admissible_setting_pair,
    closure_failure_rate,
    exclusivity_check,
    is_in_Cp,
    niven_rational_cos,
    superposition_in_Cp,
)
from .lorenz import LorenzParams, integrate, occupancy_measure, off_attractor_witness
from .measure import (
    BellDensity,
    Distribution,
    HiddenVariable,
    Measure,
    SettingPair,
    StateSpacePoint,
    bell_density,
    conditional,
    normalize,
    probability,
)
from .quantum import TwoQubitState, chsh_value, correlation, outcome_probabilities
from .sampling import SampledSpace, empirical_probability, sample_space, si_audit
from .stats import TestReport, binomial_ci, chi_square_gof, ks_two_sample, total_variation

__version__ = "0.1.0"
