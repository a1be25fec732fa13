"""Quantum potential, Fermi phase-space sets and symplectic capacities on grids."""

from .dynamics import (
    PropagationConfig,
    Timeseries,
    integrate_bohm_trajectories,
    interior_nodes,
    madelung_residuals,
    node_diagnostics,
    propagate_classical_nonlinear,
    propagate_schrodinger,
    residual_scan,
    sample_seeds,
    time_reversal_error,
    wasserstein_to_density,
)
from .fermi import (
    apply_fermi_operator,
    build_fermi_hamiltonian,
    energy_decomposition,
    eval_fermi,
    fermi_operator_residual,
    fermi_volume_mc,
    fermi_set_quadratic,
    force_balance_field,
    sample_fermi_surface,
    stationary_identity_check,
)
from .fields import CovarianceMatrix, PolarField, ScalarField, VectorField, WaveField
from .grid import Grid, PhysicsParams
from .states import Potential, StateSpec, default_grid, exact_energy, exact_potential, realize
from .symplectic import (
    QuadraticForm,
    capacity_quadratic,
    conjugate_section_area,
    quantum_blob_contained,
    rs_check,
    symplectic_eigenvalues,
    wigner_ellipsoid,
    williamson_spectrum,
)
from .wavefield import (
    bohm_momentum_field,
    core_mask,
    covariance_matrix,
    density,
    node_mask,
    polar_decompose,
    probability_current,
    quantum_force,
    quantum_potential,
)

__version__ = "0.1.0"
