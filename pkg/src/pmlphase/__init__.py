"""Pattern maximum likelihood, Bethe permanents and their phase transitions."""

__version__ = "0.1.0"

from ._numeric import BudgetExceededError, LogNumber, backend_name
from .patterns import Pattern, extract_pattern, parse_pattern, upsilon, upsilon_exact
from .permanent import (
    Pmf,
    pattern_probability,
    pattern_probability_via_perm,
    permanent,
    theta_matrix,
)
from .bethe import (
    BetheResult,
    assignment_min,
    bethe_free_energy,
    bethe_pattern_probability,
    bethe_permanent,
    minimize_bethe,
)
from .lifted import (
    ContingencyTable,
    beta_kM,
    count_tables,
    estimate_tables,
    enumerate_tables,
    lifted_permanent_exact,
    lifted_permanent_mc,
    lifted_permanent_power,
    weight_w,
)
from .qkm import (
    GaussianApprox,
    MaximizerU,
    QkmStats,
    build_B,
    gauss_error,
    gaussian_weight,
    majorizes,
    maximizer_u,
    normalized_Z,
    phi,
    qkm_stats,
)
from .phase import (
    ProbeResult,
    ThresholdReport,
    phase_scan,
    probe_extremum,
    second_deriv_formula,
    second_deriv_limit,
    threshold_report,
)
from .dgauss import (
    LatticeGaussian,
    dg_expected_quadratic,
    dg_partition_direct,
    dg_partition_poisson,
    dg_tail_bound,
)
