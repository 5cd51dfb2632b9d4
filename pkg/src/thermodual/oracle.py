"""Independent reference solutions: nonsmooth dual solve and closeness metrics.

The dual solve maximizes mu.q + lambda_min(H - mu.Q) by supergradient ascent
with Polyak averaging; by strong duality its value equals the constrained
minimum energy, so it serves as the reference E in the solver error metric.
The closeness report compares a Gibbs state against the maximally mixed state
on the ground space, both by direct computation and by the closed forms that
hold because the two states commute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gibbs import effective_hamiltonian
from .models import ThermoSystem


@dataclass(frozen=True)
class DualSolution:
    mu_star: np.ndarray
    value: float
    ground_multiplicity: int
    ground_projector: np.ndarray
    low_confidence: bool
    iterations: int


def _ground_space(matrix: np.ndarray, tol: float | None = None):
    vals, vecs = np.linalg.eigh(matrix)
    if tol is None:
        spread = float(vals[-1] - vals[0])
        tol = max(1e-8, 1e-10 * spread)
    mask = vals <= vals[0] + tol
    basis = vecs[:, mask]
    return float(vals[0]), basis @ basis.conj().T, int(mask.sum())


def dual_eigenvalue_solve(
    system: ThermoSystem,
    q,
    iterations: int = 2000,
    tolerance: float = 1e-6,
    eta0: float = 1.0,
    polish_iterations: int = 400,
) -> DualSolution:
    """Maximize the nonsmooth dual mu.q + lambda_min(H - mu.Q).

    Supergradient at mu: q - <psi|Q|psi> for a minimum-eigenvalue eigenvector
    psi (the eigensolver's first column when degenerate).  The first phase
    takes eta0/sqrt(m) steps and tracks the dual value along the running
    average of the iterates; the second phase polishes the best averaged
    iterate with monotone adaptive-step ascent, which converges quickly
    wherever the minimum eigenvalue is simple.  If the best value is still
    improving by more than `tolerance` near the end of the budget, the
    solution is flagged low-confidence.
    """
    q = np.asarray(q, dtype=float)
    c = system.n_charges
    if q.shape != (c,):
        raise ValueError(f"targets have shape {q.shape}, expected ({c},)")
    charge_dense = [qi.to_dense() for qi in system.charges]

    def dual_value(mu):
        vals = np.linalg.eigvalsh(effective_hamiltonian(system, mu))
        return float(mu @ q + vals[0])

    def supergradient(mu):
        _, vecs = np.linalg.eigh(effective_hamiltonian(system, mu))
        psi = vecs[:, 0]
        return q - np.array([np.real(psi.conj() @ (qd @ psi)) for qd in charge_dense])

    mu = np.zeros(c)
    running_sum = np.zeros(c)
    best_value = -np.inf
    best_mu = mu.copy()
    best_history = []

    for m in range(1, iterations + 1):
        running_sum += mu
        averaged = running_sum / m
        value = dual_value(averaged)
        if value > best_value:
            best_value = value
            best_mu = averaged.copy()
        best_history.append(best_value)
        mu = mu + (eta0 / np.sqrt(m)) * supergradient(mu)

    step = 0.25
    mu = best_mu.copy()
    settled = False
    for _ in range(polish_iterations):
        candidate = mu + step * supergradient(mu)
        value = dual_value(candidate)
        if value > best_value:
            best_value = value
            best_mu = candidate.copy()
            mu = candidate
            step = min(step * 1.5, 10.0)
        else:
            step *= 0.5
            if step < 1e-14:
                # monotone ascent stalled at machine scale: converged
                settled = True
                break
        best_history.append(best_value)

    if settled:
        low_confidence = False
    else:
        tail = max(25, len(best_history) // 20)
        low_confidence = bool(best_history[-1] - best_history[-tail] > tolerance)

    lam_min, projector, multiplicity = _ground_space(
        effective_hamiltonian(system, best_mu)
    )
    return DualSolution(
        mu_star=best_mu,
        value=best_value,
        ground_multiplicity=multiplicity,
        ground_projector=projector,
        low_confidence=low_confidence,
        iterations=iterations,
    )


def complementary_slackness_residual(
    system: ThermoSystem, dual: DualSolution, rho: np.ndarray
) -> float:
    """|Tr[(H - mu*.Q) rho] - lambda_min|; near zero certifies ground-space support."""
    A = effective_hamiltonian(system, dual.mu_star)
    lam_min = float(np.linalg.eigvalsh(A)[0])
    energy = float(np.real(np.einsum("ij,ji->", A, rho)))
    return abs(energy - lam_min)


# ---------------------------------------------------------------------------
# state distinguishability helpers
# ---------------------------------------------------------------------------


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(1/2) ||rho - sigma||_1."""
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def _psd_power(matrix: np.ndarray, power: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.clip(vals, 0.0, None)
    if power < 0:
        out = np.where(vals > 0, vals, np.inf) ** power
        out[~np.isfinite(out)] = 0.0
    else:
        out = vals**power
    return (vecs * out) @ vecs.conj().T


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ||sqrt(rho) sqrt(sigma)||_1^2."""
    product = _psd_power(rho, 0.5) @ _psd_power(sigma, 0.5)
    return float(np.sum(np.linalg.svd(product, compute_uv=False)) ** 2)


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """D(rho || sigma) = Tr[rho (ln rho - ln sigma)], requiring supp(rho) <= supp(sigma)."""

    def _log(m):
        vals, vecs = np.linalg.eigh(m)
        vals = np.clip(vals, 1e-300, None)
        return (vecs * np.log(vals)) @ vecs.conj().T

    value = np.einsum("ij,ji->", rho, _log(rho) - _log(sigma))
    return float(np.real(value))


def petz_renyi(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    trace = np.einsum("ij,ji->", _psd_power(rho, alpha), _psd_power(sigma, 1 - alpha))
    return float(np.log(np.real(trace)) / (alpha - 1))


def sandwiched_renyi(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    half = _psd_power(sigma, (1 - alpha) / (2 * alpha))
    inner = half @ rho @ half
    return float(np.log(np.real(np.trace(_psd_power(inner, alpha)))) / (alpha - 1))


def geometric_renyi(rho: np.ndarray, sigma: np.ndarray, alpha: float) -> float:
    inv_half = _psd_power(sigma, -0.5)
    inner = inv_half @ rho @ inv_half
    trace = np.einsum("ij,ji->", sigma, _psd_power(inner, alpha))
    return float(np.log(np.real(trace)) / (alpha - 1))


# ---------------------------------------------------------------------------
# thermal state vs ground space closeness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosenessReport:
    """Distances between exp(-beta H)/Z and the ground-space maximally mixed state."""

    beta: float
    dim: int
    ground_dim: int
    gap: float
    trace_distance: float
    fidelity: float
    relative_entropy: float
    renyi_petz: dict[float, float]
    renyi_sandwiched: dict[float, float]
    renyi_geometric: dict[float, float]
    trace_distance_closed: float
    fidelity_closed: float
    relative_entropy_closed: float
    renyi_closed: float


def _grouped_levels(eigenvalues: np.ndarray):
    spread = float(eigenvalues[-1] - eigenvalues[0])
    tol = max(1e-10, 1e-12 * max(1.0, spread))
    levels = [[eigenvalues[0], 1]]
    for lam in eigenvalues[1:]:
        if lam - levels[-1][0] <= tol:
            levels[-1][1] += 1
        else:
            levels.append([lam, 1])
    return [(float(lam), int(deg)) for lam, deg in levels]


def closeness_metrics(H: np.ndarray, beta: float, alphas=(0.5, 2.0, 3.0)) -> ClosenessReport:
    """Direct and closed-form closeness of the Gibbs state to the ground space."""
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    vals = np.linalg.eigvalsh(H)
    levels = _grouped_levels(vals)
    d = H.shape[0]
    d_g = levels[0][1]
    gap = levels[1][0] - levels[0][0] if len(levels) > 1 else 0.0

    # The two states commute, so the direct evaluation happens in the shared
    # eigenbasis of H; large beta would otherwise amplify basis round-off
    # through the negative matrix powers in the Renyi formulas.
    weights = np.exp(-beta * (vals - vals[0]))
    rho = np.diag(weights / weights.sum()).astype(complex)
    ground = np.zeros(d)
    ground[:d_g] = 1.0 / d_g
    sigma = np.diag(ground).astype(complex)

    if len(levels) == 1:
        zero = {float(a): 0.0 for a in alphas}
        return ClosenessReport(
            beta, d, d_g, 0.0, 0.0, 1.0, 0.0, zero, dict(zero), dict(zero),
            0.0, 1.0, 0.0, 0.0,
        )

    excited = sum(
        np.exp(-beta * (lam - levels[0][0])) * deg for lam, deg in levels[1:]
    )
    report = ClosenessReport(
        beta=beta,
        dim=d,
        ground_dim=d_g,
        gap=gap,
        trace_distance=trace_distance(rho, sigma),
        fidelity=state_fidelity(rho, sigma),
        relative_entropy=relative_entropy(sigma, rho),
        renyi_petz={float(a): petz_renyi(sigma, rho, a) for a in alphas},
        renyi_sandwiched={float(a): sandwiched_renyi(sigma, rho, a) for a in alphas},
        renyi_geometric={float(a): geometric_renyi(sigma, rho, a) for a in alphas},
        trace_distance_closed=1.0 / (1.0 + d_g / excited),
        fidelity_closed=1.0 / (1.0 + excited / d_g),
        relative_entropy_closed=float(np.log1p(excited / d_g)),
        renyi_closed=float(np.log1p(excited / d_g)),
    )
    return report


def beta_for_trace_distance(eps: float, gap: float, dim: int, ground_dim: int) -> float:
    """Inverse temperature so the trace-distance bound evaluates to eps."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return np.log(((1 - eps) / eps) * ((dim - ground_dim) / ground_dim)) / gap


def beta_for_relative_entropy(eps: float, gap: float, dim: int, ground_dim: int) -> float:
    """Inverse temperature so the relative-entropy bound evaluates to eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.log((1.0 / np.expm1(eps)) * ((dim - ground_dim) / ground_dim)) / gap
