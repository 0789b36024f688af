"""Solver configuration, cached iteration state, and the outer driver loop.

Five solver kinds sit behind one interface: "mu" (multiplicative updates),
"bmd" (block mirror descent), "sn" (safeguarded scalar Newton), "snmu"
(Newton sweeps interleaved with multiplicative scaling steps) and "ccd"
(plain cyclic Newton). All but "ccd" never increase the objective.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SolverInitError
from .matrices import Factorization, NonnegMatrix, ProblemInstance
from .mirror import bmd_step
from .multiplicative import mu_step
from .objective import KLObjective, kkt_residual
from .scalar_newton import ccd_sweep, self_concordant_constants, sn_sweep
from .traces import RunTrace, TraceSample

SOLVER_KINDS = ("mu", "bmd", "sn", "snmu", "ccd")

#: Kinds whose recorded objective sequence is guaranteed non-increasing.
MONOTONE_KINDS = ("mu", "bmd", "sn", "snmu")

MACHINE_EPS = float(np.finfo(np.float64).eps)

# Factor clamps used when the caller does not pin epsilon: machine precision
# for the multiplicative/mirror solvers, 0 for the Newton-based ones (their
# step rule clamps at the bound itself).
_DEFAULT_EPSILON = {
    "mu": MACHINE_EPS,
    "bmd": MACHINE_EPS,
    "sn": 0.0,
    "snmu": 0.0,
    "ccd": 0.0,
}


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for one solver run.

    ``epsilon=None`` defers to the per-kind default above (or the problem
    instance's bound if that is larger). The run stops at whichever of the
    four criteria triggers first: outer-iteration cap, wall-clock budget,
    relative objective decrease below ``objective_tol``, or KKT residual
    below ``kkt_tol``; the tolerances are off when None.
    """

    kind: str
    epsilon: float | None = None
    max_outer_iters: int = 1000
    time_budget: float = math.inf
    objective_tol: float | None = None
    kkt_tol: float | None = None
    inner_repeats: int = 3
    snmu_cycle: tuple[int, int] = (10, 1)
    record_every: int = 1
    h_first: bool = True
    snmu_exact_scaling: bool = False

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise ValueError(
                f"unknown solver kind {self.kind!r}; valid kinds: "
                f"{', '.join(SOLVER_KINDS)}"
            )
        object.__setattr__(self, "snmu_cycle", tuple(self.snmu_cycle))
        if self.epsilon is not None and not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if self.max_outer_iters < 0:
            raise ValueError("max_outer_iters must be >= 0")
        if not self.time_budget >= 0:
            raise ValueError("time_budget must be >= 0")
        if self.inner_repeats < 1:
            raise ValueError("inner_repeats must be >= 1")
        if len(self.snmu_cycle) != 2 or any(c < 1 for c in self.snmu_cycle):
            raise ValueError("snmu_cycle components must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        for name in ("objective_tol", "kkt_tol"):
            tol = getattr(self, name)
            if tol is not None and not tol > 0:
                raise ValueError(f"{name} must be positive or None")

    def resolved_epsilon(self, instance_epsilon: float = 0.0) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return max(float(instance_epsilon), _DEFAULT_EPSILON[self.kind])


@dataclass
class SolverState:
    """Factors plus the caches every sweep maintains.

    The product cache is resynchronized from scratch once per outer sweep
    (the Newton sweeps adjust it incrementally in between), which keeps
    accumulated drift bounded.
    """

    W: np.ndarray
    H: np.ndarray
    WH: np.ndarray
    col_sums_W: np.ndarray
    row_sums_H: np.ndarray
    outer_iter: int = 0
    elapsed: float = 0.0

    @classmethod
    def from_factors(cls, W, H) -> "SolverState":
        W = np.array(W, dtype=np.float64)
        H = np.array(H, dtype=np.float64)
        return cls(W=W, H=H, WH=W @ H,
                   col_sums_W=W.sum(axis=0), row_sums_H=H.sum(axis=1))

    def resync(self) -> None:
        np.matmul(self.W, self.H, out=self.WH)
        self.col_sums_W = self.W.sum(axis=0)
        self.row_sums_H = self.H.sum(axis=1)


def snmu_step(V, state, epsilon, cycle=(10, 1), inner_repeats: int = 3,
              constants=None, h_first: bool = True, exact_scaling: bool = False):
    """Several safeguarded Newton sweeps followed by multiplicative steps.

    The multiplicative tail restores the scaled property: when its clamp is
    zero, the product leaves the tail matching the data's column and row
    sums. Both components are monotone, so the composite step is too.
    ``exact_scaling`` forces the tail's clamp to zero even when the Newton
    sweeps run with a positive bound.
    """
    for _ in range(cycle[0]):
        sn_sweep(V, state, epsilon, inner_repeats=inner_repeats,
                 constants=constants, h_first=h_first)
    mu_epsilon = 0.0 if exact_scaling else epsilon
    for _ in range(cycle[1]):
        state.resync()
        mu_step(V, state, mu_epsilon, h_first=h_first)
    return state


def _make_stepper(config: SolverConfig, V: np.ndarray, epsilon: float):
    kind = config.kind
    if kind == "mu":
        def stepper(state):
            mu_step(V, state, epsilon, h_first=config.h_first)
    elif kind == "bmd":
        def stepper(state):
            bmd_step(V, state, epsilon, h_first=config.h_first)
    elif kind == "sn":
        constants = self_concordant_constants(V)

        def stepper(state):
            state.resync()
            sn_sweep(V, state, epsilon, inner_repeats=config.inner_repeats,
                     constants=constants, h_first=config.h_first)
    elif kind == "ccd":
        def stepper(state):
            state.resync()
            ccd_sweep(V, state, epsilon, inner_repeats=config.inner_repeats,
                      h_first=config.h_first)
    else:
        constants = self_concordant_constants(V)

        def stepper(state):
            state.resync()
            snmu_step(V, state, epsilon, cycle=config.snmu_cycle,
                      inner_repeats=config.inner_repeats, constants=constants,
                      h_first=config.h_first,
                      exact_scaling=config.snmu_exact_scaling)
    return stepper


def run(instance: ProblemInstance, init: Factorization, config: SolverConfig,
        run_id: str = "run", matrix_id: str = "", init_id: str = "",
        ) -> tuple[Factorization, RunTrace]:
    """Iterate the configured solver and record a timestamped trace.

    The initialization is clamped up to the resolved epsilon (with a warning
    if that changes anything) and never mutated. Samples are recorded at the
    initial point, after every ``record_every`` outer sweeps, and at the
    final point. Returns the best-objective iterate seen, which for the
    monotone kinds is the last one.
    """
    if init.W.shape != (instance.V.rows, instance.rank) or \
            init.H.shape != (instance.rank, instance.V.cols):
        raise SolverInitError(
            f"init shapes {init.W.shape} x {init.H.shape} do not match the "
            f"instance ({instance.V.rows}x{instance.V.cols}, rank {instance.rank})"
        )
    V = instance.V.values
    epsilon = config.resolved_epsilon(instance.epsilon)
    W0 = np.array(init.W.values)
    H0 = np.array(init.H.values)
    if epsilon > 0 and (W0.min() < epsilon or H0.min() < epsilon):
        warnings.warn(
            f"initialization clamped up to epsilon={epsilon!r}", stacklevel=2)
        np.maximum(W0, epsilon, out=W0)
        np.maximum(H0, epsilon, out=H0)
    if config.kind == "bmd" and epsilon == 0:
        warnings.warn(
            "bmd with epsilon=0 decreases the objective but loses its "
            "convergence guarantee; use a positive epsilon", stacklevel=2)

    state = SolverState.from_factors(W0, H0)
    objective = KLObjective(V)
    obj = objective.of_product(state.WH)
    if not obj.is_finite:
        raise SolverInitError(
            "objective is infinite at the initial point; use a strictly "
            "positive initialization"
        )

    samples = [TraceSample(0.0, obj, objective.relative(obj))]
    best_obj = obj
    best_W = state.W.copy()
    best_H = state.H.copy()

    def finish():
        trace = RunTrace(run_id=run_id, solver=config.kind,
                         matrix_id=matrix_id, init_id=init_id,
                         samples=tuple(samples))
        pair = Factorization(NonnegMatrix(best_W), NonnegMatrix(best_H))
        return pair, trace

    if config.time_budget == 0 or config.max_outer_iters == 0:
        return finish()

    stepper = _make_stepper(config, V, epsilon)
    start = time.perf_counter()
    last_recorded = 0
    prev_value = obj.value
    for it in range(1, config.max_outer_iters + 1):
        stepper(state)
        elapsed = time.perf_counter() - start
        state.outer_iter = it
        state.elapsed = elapsed
        obj = objective.of_product(state.WH)
        if obj < best_obj:
            best_obj = obj
            best_W[...] = state.W
            best_H[...] = state.H
        if it % config.record_every == 0:
            stamp = max(elapsed, samples[-1].elapsed_s + 1e-9)
            samples.append(TraceSample(stamp, obj, objective.relative(obj)))
            last_recorded = it
        if elapsed >= config.time_budget:
            break
        if config.objective_tol is not None and obj.is_finite:
            decrease = (prev_value - obj.value) / max(abs(prev_value), 1e-30)
            if decrease < config.objective_tol:
                break
        if config.kkt_tol is not None:
            residual = kkt_residual(V, state.W, state.H, epsilon)
            if residual <= config.kkt_tol:
                break
        prev_value = obj.as_float()
    if last_recorded != state.outer_iter:
        elapsed = time.perf_counter() - start
        stamp = max(elapsed, samples[-1].elapsed_s + 1e-9)
        samples.append(TraceSample(stamp, obj, objective.relative(obj)))
    return finish()
