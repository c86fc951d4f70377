"""Attack-resilient distributed estimation over clustered networks.

A simulation library and CLI for low-communication diffusion estimation
with per-node anomaly gating of exchanged estimates, event-triggered
detector retraining, and reputation-ranked partner polling, plus the
mean-error theory needed to sanity-check it.
"""

from .analysis import (asymptotic_deviation, combine_matrix, coupling_matrix,
                       mean_recursion, reg_matrix, spectral_radius, step_bound,
                       transition_matrix)
from .attacks import (A1Report, AttackSchedule, EMPTY_SCHEDULE, corrupt_measurement,
                      corrupt_message, links_from_nodes, resolve_attack_nodes,
                      validate_a1)
from .config import ConfigError, ExperimentConfig, load_config
from .detector import NeighborDetector, build_training_set
from .diffusion import (ALGORITHMS, AlgoParams, DivergenceError, RunTrace,
                        combine_pool, run_single)
from .harness import (MCResult, Scenario, build_schedule, count_events,
                      message_stats, msd_curve, resolve_scenario,
                      run_monte_carlo, steady_state_msd_db, write_summary_csv,
                      write_trace_csv)
from .reputation import ReputationWindow, poll_count, select_partners
from .scenario import (GroundTruth, SignalParams, Topology, TopologyError,
                       build_topology, make_ground_truth, measurement_block,
                       resolve_signal_params, sample_measurement)
from .wsvdd import (BallModel, InfeasibleTrainingError, WeightedSVDD, radius_sq,
                    rbf_cross, rbf_gram, solve_dual, train_model)

__version__ = "0.1.0"
