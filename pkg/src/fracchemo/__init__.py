"""fracchemo: pseudo-spectral simulator and verification harness for a
hyperbolic-parabolic chemotaxis system with fractional diffusion on the
1-D and 2-D torus.

The library exposes the spectral calculus, the model right-hand sides, the
integrating-factor integrator, the exact-balance diagnostics and the
independent verification oracles; the ``fracchemo`` CLI wraps them for
batch runs.
"""

from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    curl2d,
    dealias,
    divergence,
    forward_transform,
    fractional_laplacian,
    gradient,
    integrate_product,
    l2_inner,
    lp_norm,
    mean,
    sobolev_norm,
)
from .dynamics import (
    Forcing,
    Kinetics,
    ModelParams,
    State,
    rhs_q,
    rhs_q_gradient_form,
    rhs_u,
)
from .integrator import (
    BlowUpError,
    IntegratorSettings,
    Trajectory,
    cfl_dt,
    simulate,
    step_ifrk2,
    step_rk4,
)
from .diagnostics import (
    DiagnosticsRow,
    MonitorReport,
    dissipation,
    energy,
    irrotational_checks,
    monitor_monotone,
    residual_energy_balance,
    residual_h1_1d,
    residual_h1_2d,
    residual_h2_1d,
)
from .verification import (
    ConvergenceReport,
    SobolevEstimate,
    criticality_sweep,
    estimate_sobolev_constant,
    exact_linear_terminal,
    manufactured_convergence,
    rk4_reference,
    scaling_symmetry_check,
)
from .scenario import (
    ConfigError,
    Scenario,
    parse_config,
    read_snapshot,
    write_snapshot,
)

__version__ = "0.1.0"
