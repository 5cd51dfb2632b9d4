"""First- and second-order drivers for dual chemical-potential maximization.

All variants share one loop shape: estimate the charge expectations at the
current point, stop once the gradient-estimate norm falls below delta,
otherwise update mu.  First order ascends along the gradient (optionally with
Nesterov acceleration); second order solves the Newton system against the
(estimated) Hessian, with gradient-norm backtracking on the step size and,
for the sampled variant, a shift that forces the Hessian estimate negative
semi-definite.  The returned value is mu.q + H_est - sum_i mu_i Q_est_i,
evaluated with fresh estimates at the final point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .gibbs import ThermalState, hessian_exact, objective_f, smoothness_L, thermal_state
from .models import ThermoSystem
from .operators import expectation
from .shots import HAMILTONIAN_OBS_ID

VARIANTS = ("first_classical", "second_classical", "first_hqc", "second_hqc")


@dataclass(frozen=True)
class OptimizerConfig:
    """Solver settings; unset eta/delta/nesterov resolve to variant defaults."""

    variant: str = "first_classical"
    epsilon: float = 0.1
    eta: float | None = None
    delta: float | None = None
    max_iter: int = 1000
    nesterov: bool | None = None
    backtrack_factor: float = 0.5
    hessian_regularization_floor: float = 0.0
    seed: int = 0
    temperature: float | None = None
    max_backtracks: int = 30
    step_cap: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.epsilon <= 0 and self.temperature is None:
            raise ValueError("epsilon must be positive")
        if self.eta is not None and self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.hessian_regularization_floor < 0:
            raise ValueError("hessian_regularization_floor must be >= 0")
        if self.step_cap <= 0:
            raise ValueError("step_cap must be positive")

    @property
    def is_second_order(self) -> bool:
        return self.variant in ("second_classical", "second_hqc")

    @property
    def is_sampled(self) -> bool:
        return self.variant in ("first_hqc", "second_hqc")

    def resolved_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        return 1e-2 if self.is_sampled else 1e-4

    def resolved_nesterov(self) -> bool:
        if self.nesterov is not None:
            return self.nesterov
        return self.variant == "first_classical"

    def resolved_temperature(self, system: ThermoSystem) -> float:
        if self.temperature is not None:
            return self.temperature
        return self.epsilon / (system.n_qubits * math.log(2.0))


class Estimator(Protocol):
    """Expectation source: exact traces or simulated measurement."""

    def expectation(self, state: ThermalState, obs_id: int, eval_index: int) -> float: ...

    def hessian(self, state: ThermalState, eval_index: int) -> np.ndarray: ...

    @property
    def shots_per_gradient_eval(self) -> int: ...

    @property
    def shots_per_hessian_eval(self) -> int: ...


class ExactEstimator:
    """Noiseless estimator computing exact traces on the dense thermal state."""

    def __init__(self, system: ThermoSystem):
        self.system = system

    def expectation(self, state: ThermalState, obs_id: int, eval_index: int) -> float:
        obs = (
            self.system.hamiltonian
            if obs_id == HAMILTONIAN_OBS_ID
            else self.system.charges[obs_id]
        )
        return expectation(obs, state.rho)

    def hessian(self, state: ThermalState, eval_index: int) -> np.ndarray:
        return hessian_exact(self.system, state.mu, state.temperature, state=state)

    @property
    def shots_per_gradient_eval(self) -> int:
        return 0

    @property
    def shots_per_hessian_eval(self) -> int:
        return 0


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    mu: np.ndarray
    f_estimate: float
    grad_norm: float
    error_metric: float | None
    step_size: float
    shots_used: int
    fallback: bool = False


@dataclass
class Trace:
    """Per-iteration optimizer records plus the final output value."""

    variant: str
    temperature: float
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    final_mu: np.ndarray | None = None
    final_value: float | None = None
    reference_energy: float | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_grad_norm(self) -> float:
        return self.records[-1].grad_norm

    @property
    def final_error_metric(self) -> float | None:
        return self.records[-1].error_metric


def error_metric(E_ref: float, f_estimate: float, grad_estimate) -> float:
    """|E_ref - f_estimate| + ||grad_estimate||_2."""
    return abs(E_ref - f_estimate) + float(np.linalg.norm(grad_estimate))


class _Evaluator:
    """Counts estimator calls so derived shot streams never collide."""

    def __init__(self, system, q, estimator, T, reference_energy):
        self.system = system
        self.q = np.asarray(q, dtype=float)
        self.estimator = estimator
        self.T = T
        self.reference_energy = reference_energy
        self.eval_index = 0

    def state(self, mu) -> ThermalState:
        return thermal_state(self.system, mu, self.T)

    def gradient_only(self, state) -> np.ndarray:
        idx = self.eval_index
        self.eval_index += 1
        charges = np.array(
            [
                self.estimator.expectation(state, i, idx)
                for i in range(self.system.n_charges)
            ]
        )
        return self.q - charges

    def full(self, state):
        """Charge and energy estimates plus the derived gradient and output value."""
        idx = self.eval_index
        self.eval_index += 1
        charges = np.array(
            [
                self.estimator.expectation(state, i, idx)
                for i in range(self.system.n_charges)
            ]
        )
        h_val = self.estimator.expectation(state, HAMILTONIAN_OBS_ID, idx)
        grad = self.q - charges
        mu = state.mu
        f_est = float(mu @ self.q + h_val - mu @ charges)
        err = (
            error_metric(self.reference_energy, f_est, grad)
            if self.reference_energy is not None
            else None
        )
        return charges, grad, f_est, err

    def hessian(self, state) -> np.ndarray:
        idx = self.eval_index
        self.eval_index += 1
        return self.estimator.hessian(state, idx)


def _finalize(trace: Trace, ev: _Evaluator, mu):
    state = ev.state(mu)
    _, _, f_est, _ = ev.full(state)
    trace.final_mu = np.asarray(mu, dtype=float).copy()
    trace.final_value = f_est
    return trace


def run_first_order(
    system: ThermoSystem,
    q,
    config: OptimizerConfig,
    estimator: Estimator,
    mu0=None,
    reference_energy: float | None = None,
) -> Trace:
    """Gradient ascent on the dual objective, plain or Nesterov-accelerated.

    Stops once the gradient-estimate norm is at most delta, or after
    max_iter updates; infeasible targets are not detected up front and simply
    show up as a gradient norm that never crosses the threshold.
    """
    if config.is_second_order:
        raise ValueError(f"{config.variant} is not a first-order variant")
    T = config.resolved_temperature(system)
    L = smoothness_L(system, T)
    eta = config.eta if config.eta is not None else 0.9 / L
    if config.variant == "first_classical" and eta >= 1.0 / L:
        raise ValueError(f"step size {eta} is not below 1/L = {1.0 / L}")
    delta = config.resolved_delta()
    use_nesterov = config.resolved_nesterov()

    ev = _Evaluator(system, q, estimator, T, reference_energy)
    trace = Trace(config.variant, T, reference_energy=reference_energy)

    c = system.n_charges
    mu = np.zeros(c) if mu0 is None else np.asarray(mu0, dtype=float).copy()
    lookahead = mu.copy()
    momentum = 1.0

    for m in range(config.max_iter + 1):
        point = lookahead if use_nesterov else mu
        state = ev.state(point)
        _, grad, f_est, err = ev.full(state)
        grad_norm = float(np.linalg.norm(grad))
        trace.records.append(
            TraceRecord(
                m, point.copy(), f_est, grad_norm, err, eta,
                estimator.shots_per_gradient_eval,
            )
        )
        if grad_norm <= delta:
            trace.converged = True
            return _finalize(trace, ev, point)
        if m == config.max_iter:
            break
        if use_nesterov:
            new_mu = lookahead + eta * grad
            momentum_next = (1.0 + math.sqrt(1.0 + 4.0 * momentum**2)) / 2.0
            lookahead = new_mu + ((momentum - 1.0) / momentum_next) * (new_mu - mu)
            mu = new_mu
            momentum = momentum_next
        else:
            mu = mu + eta * grad

    return _finalize(trace, ev, lookahead if use_nesterov else mu)


def _regularize(hess: np.ndarray, floor: float) -> np.ndarray:
    """Shift by a scaled identity so the estimate is negative semi-definite."""
    lam_max = float(np.linalg.eigvalsh(hess)[-1])
    zeta = max(0.0, lam_max + floor)
    if zeta > 0.0:
        hess = hess - zeta * np.eye(hess.shape[0])
    return hess


def run_second_order(
    system: ThermoSystem,
    q,
    config: OptimizerConfig,
    estimator: Estimator,
    mu0=None,
    reference_energy: float | None = None,
) -> Trace:
    """Newton-style ascent: solve Hessian . step = gradient, update mu -= eta step.

    If the gradient norm at the candidate exceeds the one at the current
    iterate, eta is shrunk by backtrack_factor and the candidate recomputed;
    after two consecutive clean steps eta grows back toward its initial
    value.  The sampled variant first shifts the Hessian estimate negative
    semi-definite.

    Two safeguards handle the near-linear regions the dual develops at low
    temperature, where the curvature collapses and raw Newton steps blow up:
    the move per iteration is capped at `step_cap` in mu-space, and when the
    solve fails or backtracking runs out the iteration takes an adaptive
    safeguarded gradient step instead (recorded with the fallback flag).  The
    exact variant additionally refuses candidates that lower the objective
    itself, which is free to evaluate classically.
    """
    if not config.is_second_order:
        raise ValueError(f"{config.variant} is not a second-order variant")
    T = config.resolved_temperature(system)
    delta = config.resolved_delta()
    eta_init = config.eta if config.eta is not None else 1.0
    eta = eta_init
    exact_objective = config.variant == "second_classical"
    base_step = 0.9 / smoothness_L(system, T)
    rescue_step = base_step

    ev = _Evaluator(system, q, estimator, T, reference_energy)
    trace = Trace(config.variant, T, reference_energy=reference_energy)

    c = system.n_charges
    mu = np.zeros(c) if mu0 is None else np.asarray(mu0, dtype=float).copy()
    clean_steps = 0

    def f_exact(state) -> float:
        return objective_f(system, ev.q, state.mu, T, state=state)

    for m in range(config.max_iter + 1):
        state = ev.state(mu)
        _, grad, f_est, err = ev.full(state)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= delta or m == config.max_iter:
            trace.records.append(
                TraceRecord(
                    m, mu.copy(), f_est, grad_norm, err, eta,
                    estimator.shots_per_gradient_eval,
                )
            )
            if grad_norm <= delta:
                trace.converged = True
                return _finalize(trace, ev, mu)
            break

        hess = ev.hessian(state)
        shots_used = estimator.shots_per_gradient_eval + estimator.shots_per_hessian_eval
        if config.variant == "second_hqc":
            hess = _regularize(hess, config.hessian_regularization_floor)

        f_here = f_exact(state) if exact_objective else None
        accepted = None
        fallback = False
        try:
            step = np.linalg.solve(hess, grad)
            if not np.all(np.isfinite(step)) or float(step @ grad) >= 0.0:
                # singular/garbage solve, or -step is not an ascent direction
                step = None
        except np.linalg.LinAlgError:
            step = None

        if step is not None:
            step_norm = float(np.linalg.norm(step))
            trial = min(eta, config.step_cap / step_norm) if step_norm > 0 else eta
            backtracks = 0
            while backtracks < config.max_backtracks:
                candidate = mu - trial * step
                cand_state = ev.state(candidate)
                cand_grad = ev.gradient_only(cand_state)
                shots_used += estimator.shots_per_gradient_eval
                ok = float(np.linalg.norm(cand_grad)) < grad_norm
                if ok and exact_objective:
                    ok = f_exact(cand_state) >= f_here - 1e-12 * max(1.0, abs(f_here))
                if ok:
                    accepted = candidate
                    break
                trial *= config.backtrack_factor
                backtracks += 1
            if accepted is not None:
                if backtracks == 0:
                    clean_steps += 1
                    if clean_steps >= 2:
                        eta = min(eta / config.backtrack_factor, eta_init)
                else:
                    clean_steps = 0
                    # remember the scale that worked, but keep it recoverable
                    eta = max(trial, config.backtrack_factor**6 * eta_init)

        if accepted is None:
            # safeguarded gradient ascent with a persistent adaptive step
            fallback = True
            clean_steps = 0
            for _ in range(config.max_backtracks):
                candidate = mu + rescue_step * grad
                cand_state = ev.state(candidate)
                cand_grad = ev.gradient_only(cand_state)
                shots_used += estimator.shots_per_gradient_eval
                if exact_objective:
                    ok = f_exact(cand_state) > f_here
                else:
                    ok = float(np.linalg.norm(cand_grad)) < grad_norm
                if ok:
                    accepted = candidate
                    rescue_step *= 2.0
                    break
                rescue_step = max(rescue_step / 2.0, 1e-6 * base_step)
            if accepted is None:
                # no vetted move found; take the conservative smooth-ascent step
                accepted = mu + base_step * grad

        trace.records.append(
            TraceRecord(m, mu.copy(), f_est, grad_norm, err, eta, shots_used, fallback)
        )
        mu = accepted

    return _finalize(trace, ev, mu)


def run(
    system: ThermoSystem,
    q,
    config: OptimizerConfig,
    estimator: Estimator,
    mu0=None,
    reference_energy: float | None = None,
) -> Trace:
    """Dispatch to the first- or second-order driver based on the variant."""
    driver = run_second_order if config.is_second_order else run_first_order
    return driver(system, q, config, estimator, mu0=mu0, reference_energy=reference_energy)
