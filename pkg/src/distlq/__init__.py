"""Learning globally optimal distributed LQ controllers without a model.

Finite-horizon output-feedback policies constrained to a causal subspace
are learned by one-point zeroth-order descent on the policy coordinates;
a model-based convex reformulation (valid under quadratic invariance)
provides exact ground truth, and sampling probes estimate the constants
appearing in the convergence theory.
"""

from .cost import CostContext, exact_cost, exact_cost_q, f_of_z, fd_gradient
from .fixtures import FIXTURES, Fixture, get_fixture
from .learner import (LearnerConfig, RunLog, Schedule, ScheduleConstants,
                      compute_D, compute_schedule, learn)
from .oracle import (GdEstimate, OracleSolution, QuadraticForm,
                     SmoothnessConstants, assemble_quadratic,
                     estimate_gd_constants, estimate_smoothness, h_jacobian,
                     newton_minimize_f, solve_qi_oracle)
from .policy_space import (SparsityPattern, SubspaceBasis, basis_from_pattern,
                           causal_mask, h_forward, h_inverse, H_inv, H_op,
                           qi_check, unvec_policy, vec_policy)
from .system import (BlockOperators, NoiseModel, SystemSpec, Trajectory,
                     assemble_block_operators, empirical_cost, rollout,
                     sample_noise)

__version__ = "0.1.0"

__all__ = [
    "BlockOperators", "CostContext", "FIXTURES", "Fixture", "GdEstimate",
    "H_inv", "H_op", "LearnerConfig", "NoiseModel", "OracleSolution",
    "QuadraticForm", "RunLog", "Schedule", "ScheduleConstants",
    "SmoothnessConstants", "SparsityPattern", "SubspaceBasis", "SystemSpec",
    "Trajectory", "assemble_block_operators", "assemble_quadratic",
    "basis_from_pattern", "causal_mask", "compute_D", "compute_schedule",
    "empirical_cost", "estimate_gd_constants", "estimate_smoothness", "h_jacobian",
    "exact_cost", "exact_cost_q", "f_of_z", "fd_gradient", "get_fixture",
    "h_forward", "h_inverse", "learn", "newton_minimize_f", "qi_check",
    "rollout", "sample_noise", "solve_qi_oracle", "unvec_policy",
    "vec_policy",
]
