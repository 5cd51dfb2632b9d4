"""Constrained energy / free-energy minimization for quantum thermodynamic systems.

The library solves min Tr[H rho] subject to Tr[Q_i rho] = q_i (and its
free-energy relaxation at temperature T) by maximizing the concave dual over
the chemical potentials mu, with exact or shot-noise-simulated expectation
estimates, and verifies results against an independent dual-eigenvalue
reference solver.
"""

from .encoding import (
    LogicalTarget,
    WarmStart,
    encoded_state,
    exponential_to_mixture,
    logical_expectations,
    mixture_to_exponential,
    mixture_to_exponential_normalized,
    optimal_encoding_state,
    warm_start_state,
)
from .errors import ConfigError, NumericalIntegrityError, ResourceError
from .gibbs import (
    SpectralDecomposition,
    ThermalState,
    density_of,
    gradient,
    hessian_exact,
    log_partition,
    objective_f,
    primal_free_energy,
    smoothness_L,
    thermal_state,
)
from .models import (
    CouplingGraph,
    StabilizerCode,
    ThermoSystem,
    build_heisenberg,
    build_stabilizer_system,
    builtin_code,
    codespace_projector,
    logical_pauli_product,
)
from .operators import Observable, PauliString, commutes, expectation, parse_pauli, pauli_product
from .optimize import (
    ExactEstimator,
    OptimizerConfig,
    Trace,
    TraceRecord,
    error_metric,
    run,
    run_first_order,
    run_second_order,
)
from .oracle import (
    ClosenessReport,
    DualSolution,
    closeness_metrics,
    complementary_slackness_residual,
    dual_eigenvalue_solve,
    state_fidelity,
    trace_distance,
)
from .shots import (
    RngStream,
    ShotEstimator,
    TentSampler,
    estimate_hessian,
    estimate_observable,
    hessian_fourier_quadrature,
    sample_tent,
    tent_cdf,
    tent_density,
)

__version__ = "0.1.0"
