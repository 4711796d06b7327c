"""Pseudo-spectral experiments on decay rates of damped, fractionally dissipated Navier-Stokes flows."""

from .decay import (
    BootstrapStep,
    DecayFit,
    bootstrap_exponents,
    exponent_catalog,
    exponent_thm_gnse,
    exponent_thm_nse,
    fit_power_law,
)
from .heat import (
    QuadratureError,
    RadialInitialData,
    SemigroupDecayRecord,
    evolve_box,
    l2_sq_r3,
    lq_bound_exponent,
    semigroup_rate_fit,
)
from .ledger import LedgerReport, difference_field, u_energy_residual, w_inequality_check
from .solver import (
    BlowUpError,
    NormSeries,
    SolverConfig,
    TrajectoryRecord,
    make_initial_data,
    nonlinear_rhs,
    simulate,
    step,
)
from .spectral import (
    GridSpec,
    Norms,
    PhysicalParams,
    SpectralVectorField,
    dealias,
    fractional_laplacian,
    leray_project,
    norms,
    wavenumbers,
)

__version__ = "0.1.0"
