"""Nonnegative matrix factorization under the Kullback-Leibler divergence.

Five solver families behind one interface (multiplicative updates, block
mirror descent, safeguarded scalar Newton, a Newton/multiplicative hybrid,
and plain cyclic Newton), plus seeded synthetic data generation, matrix file
I/O, and a benchmark harness with rankings, excess-error curves, and
performance profiles.
"""

from .benchmark import BenchOutcome, BenchPlan, FileMatrix, build_report, execute
from .benchstats import (RunResult, excess_error_curves, group_min_error,
                         median_curve, performance_profile, ranking_vectors,
                         summary_stats)
from .errors import (DegenerateInputError, MatrixFileError,
                     NonDifferentiableError, ShapeError, SolverInitError)
from .matrices import Factorization, NonnegMatrix, ProblemInstance
from .matrixio import load_matrix, save_matrix
from .mirror import bmd_step, bmd_update_column
from .multiplicative import mu_majorizer, mu_step, mu_update_H, mu_update_W
from .objective import (ExtendedObjective, KLObjective, RelativeError,
                        grad_H, grad_W, kkt_residual, kl_divergence,
                        kl_normalizer, optimal_scale, perturbation_bound,
                        relative_error)
from .scalar_newton import (FULL_STEP_LAMBDA, ccd_sweep,
                            self_concordant_constants, sn_sweep,
                            sn_update_scalar)
from .solver import (MACHINE_EPS, MONOTONE_KINDS, SOLVER_KINDS, SolverConfig,
                     SolverState, run, snmu_step)
from .synthetic import (SyntheticSpec, gen_full_rank, gen_low_rank, generate,
                        init_random_scaled, poissonize)
from .traces import RunTrace, TraceSample, read_traces, write_traces

__version__ = "0.1.0"

__all__ = [
    "BenchOutcome", "BenchPlan", "DegenerateInputError", "ExtendedObjective",
    "Factorization", "FileMatrix", "FULL_STEP_LAMBDA", "KLObjective",
    "MACHINE_EPS", "MatrixFileError", "MONOTONE_KINDS",
    "NonDifferentiableError", "NonnegMatrix", "ProblemInstance",
    "RelativeError", "RunResult", "RunTrace", "ShapeError", "SolverConfig",
    "SolverInitError", "SolverState", "SOLVER_KINDS", "SyntheticSpec",
    "TraceSample", "bmd_step", "bmd_update_column", "build_report",
    "ccd_sweep", "excess_error_curves", "execute", "gen_full_rank",
    "gen_low_rank", "generate", "grad_H", "grad_W", "group_min_error",
    "init_random_scaled", "kkt_residual", "kl_divergence", "kl_normalizer",
    "load_matrix", "median_curve", "mu_majorizer", "mu_step", "mu_update_H",
    "mu_update_W", "optimal_scale", "performance_profile",
    "perturbation_bound", "poissonize", "ranking_vectors", "read_traces",
    "relative_error", "run", "save_matrix", "self_concordant_constants",
    "sn_sweep", "sn_update_scalar", "snmu_step", "summary_stats",
    "write_traces",
]
