"""Minimum-entropy-production driving protocols for two-level open systems.

Three layers: exact dynamics (classical master equation and its quantum
GKLS parent), an exact variational solver for the classical optimum, and
a from-scratch policy-gradient learner that handles both cases.
"""

from .dynamics import (BlochState, ClassicalState, ControlParams,
                       ThermalContext, Trajectory, IntegrationError,
                       build_hamiltonian, gibbs_state, gibbs_classical,
                       jump_operators, lindblad_rhs, lindblad_rhs_matrix,
                       classical_rhs, trace_distance, l1_distance,
                       entropy_rate_classical, entropy_rate_classical_wform,
                       entropy_rate_quantum, entropy_rate_quantum_info,
                       step_quantum, evolve_protocol, equilibrium_population,
                       write_trajectory_csv, read_trajectory_csv)
from .oracle import (OracleSolution, ReachabilityBound,
                     UnreachableTargetError, pdot_from_k, time_quadrature,
                     solve_k, dpf_dk, reachability, optimal_protocol,
                     optimal_protocol_for_target)
from .policy import (PolicyConfig, PolicyParameters, EpisodeTrace,
                     TwoLevelEnv, AdamState, TrainResult, TrainingDiverged,
                     init_policy, policy_mean, sample_action,
                     log_policy_gradient, step_reward, compute_returns,
                     rollout, train, save_checkpoint, load_checkpoint)
from .harness import RunConfig, SweepRow, child_seed, run_target, run_sweep

__version__ = "0.1.0"
