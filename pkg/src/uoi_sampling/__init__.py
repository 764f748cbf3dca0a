"""Sampling policies that minimise the uncertainty of information (UoI) of a
remote binary Markov source observed over a random-delay channel."""

from .baselines import AoiSolveResult, aoi_optimal_solve, zero_wait_policy
from .errors import CapBindingWarning, ConfigError, ModelError, NonConvergence
from .evaluation import PolicyEvaluation, evaluate_policy
from .index import IndexConfig, IndexResult, bisec_index, dinkelbach_f, index_eta, waiting_rule
from .markov import (
    Belief,
    DelayPmf,
    SourceModel,
    binary_entropy,
    equilibrium_belief,
    n_step_probs,
    propagate_belief,
    stationary_distribution,
    uoi_of_belief,
)
from .policy import DecisionState, PolicyTable
from .simulator import SimConfig, SimReport, replicate, run_episode, step_source
from .smdp import SolveResult, SolverConfig, bisec_rvi, cycle_cost, rvi_solve, transition_kernel

__version__ = "0.1.0"
