"""Gibbs-tilted Galton-Watson trees with a parent-child interaction."""

from .criticality import (
    CriticalPoint,
    Phase,
    bisect_critical_b,
    classify_phase,
    find_critical_point,
    find_fixed_points,
    lagrange_fixed_point_series,
    lagrange_vc_series,
)
from .dynamics import Orbit, StatePair, SystemParams, apply_F, iterate_orbit, tangent_DF
from .errors import (
    DivergenceError,
    DomainError,
    EnumerationTooLarge,
    FKGPreconditionError,
    GibbsTreeError,
    InvalidDistributionError,
    NoCriticalPointError,
    SeriesOrderError,
    SpinDecodeError,
)
from .manifold import gap_asymptotics, spectral_decomposition, theta_rho_diagnostics
from .moments import MomentRecord, expected_counts, moment_trajectory, scaled_counts_scan
from .offspring import OffspringDistribution, evaluate_R, validate
from .sampler import SampleStats, TreeSampler, monte_carlo_stats, sample_tree
from .series import PowerSeries
from .trees import (
    InteractionPhi,
    SpinConfig,
    Tree,
    TreeTable,
    active_node_count,
    check_phi_lattice,
    enumerate_trees,
    fkg_covariance,
    gibbs_distribution,
    spin_decode,
    spin_encode,
)

__version__ = "0.1.0"
