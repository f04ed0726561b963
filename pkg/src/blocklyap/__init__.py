"""Block-diagonal Lyapunov certificates: H+ scalings, DD+ linear programs,
basis pursuit and small-gain Riccati constructions."""

__version__ = "0.1.0"

from .benchmarks import (
    CyclicSystem,
    HeatSystem,
    cyclic_system,
    grid_diagonal_stability,
    heat_eigenvalues,
    heat_system,
    hplus_threshold,
    random_hplus_hurwitz,
    secant_bound,
)
from .certificate import Certificate, Method, ValidityReport, make_certificate, verify_certificate
from .classes import (
    ComparisonMatrix,
    SddScalings,
    comparison_matrix,
    ddp_margin,
    gershgorin_cover_check,
    is_ddp,
    is_h_plus,
    is_metzler,
    sdd_scalings,
)
from .cones import (
    ConeSpec,
    FactorWidth2Decomposition,
    dual_gramian_lp,
    factor_width2,
    tracemin_ddp,
    tracemin_ddp_scaled,
    tracemin_kofl,
)
from .core import Partition, spectral_abscissa
from .exceptions import *  # noqa: F401,F403
from .lp import LpProblem, LpSolution, LpStatus, solve_lp
from .mmio import load_matrix, load_partition, parse_matrix, save_matrix
from .pursuit import BasisPursuitTrace, basis_pursuit_tracemin
from .scaling import ScalingPair, diag_lyapunov, perron_scalings, scaled_dd_certificate
from .smallgain import (
    RiccatiSolution,
    StateSpace,
    alpha_h_stability_check,
    blockdiag_smallgain,
    construct_theorem8,
    hinf_norm,
    riccati_stabilizing,
)
