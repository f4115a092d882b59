"""Simulation and numerical verification toolkit for subdiffusion
processes X(t) = B(S(t)) driven by inverse subordinators."""

from .bernstein import (
    BernsteinSpec,
    DistributedOrder,
    Stable,
    TabulatedLevy,
    TemperedStable,
    eta_of,
    eval_exponent,
    levy_tail,
    mean_T1,
    rho_of,
)
from .laplace import (
    TransformHandle,
    apply_phi,
    inverse_density,
    invert_laplace,
    memory_kernel,
    renewal_function,
)
from .subordinator_sim import (
    PathGrid,
    sample_increment,
    sample_increments,
    sample_path_general,
    simulate_path,
)
from .inverse_process import (
    InitialDelay,
    invert_path,
    sample_T0,
    stationary_inverse_path,
)
from .subdiffusion import (
    DiffusionSpec,
    IncrementSeries,
    girsanov_weight,
    increments_sequence,
    sample_fk_functional,
    sample_X_path,
)
from .analytics import (
    RenewalMeasureTable,
    build_renewal_table,
    fk_quadrature,
    joint_laplace,
    laplace_S_at,
    lil_envelope,
    moment_increment,
    stationary_laplace_S_at,
    subordinated_density,
)
from .diagnostics import (
    EstimateWithCI,
    TestReport,
    run_lil_test,
    run_lln_test,
    run_martingale_suite,
    run_measure_change_test,
    run_mixing_test,
    run_msd_test,
)
from .config import SimConfig, load_config

__version__ = "0.1.0"
