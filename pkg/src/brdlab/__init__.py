"""Best-response dynamics on random normal-form games."""

from .analytics import (convergence_bounds, distinct_env_bounds, distinct_env_exact, eta,
                        hit_after_t_bound, hit_by_t_bounds, no_cycle_survival_asymptotic,
                        pne_convergence_asymptotic, prob_2k_cycle, prob_2k_cycle_at_t, q_value)
from .coupling import CoupledRun, run_clockwork_random_walk, run_coupled, run_coupled_with_sink
from .dynamics import (Outcome, OutcomeKind, PlayingSequence, SequenceKind, TrajectoryRecord,
                       mean_duration, run_clockwork, run_random_sequence)
from .errors import (BrdError, BudgetExceeded, ConfigError, DomainError, EmptySample,
                     InvariantViolation, TieDetected)
from .game import (BestResponseTable, Game, GameShape, PneSet, ReachFlags,
                   derive_best_response_table, enumerate_pne, reach_classification)
from .montecarlo import BatchStats, ExperimentConfig, figure2_grid, figure3_grid, run_experiment
from .oracle import OracleResult, oracle
from .sampling import (SeedSpec, sample_best_response_table, sample_game_payoffs,
                       sample_initial_profile)

__version__ = "0.1.0"
