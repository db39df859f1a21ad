"""Exact and certified densities of type-C integers under generalized
b-happy digit maps."""

from .bounds import (
    BoundBReport,
    BoundCertificate,
    certify_lower,
    certify_upper,
    check_bound_B,
    delta,
    find_n2,
    lemma_shift_bound,
    loss_exponent,
    smallest_bound_B,
    theorem31_construction,
)
from .cycles import Cycle, CycleSet, TypeTable, build_type_table, find_cycles, is_type, trajectory
from .digits import HappyFunction, apply, d_star_of, new_happy_function, parse_digit_spec, power_function
from .distribution import (
    DensityValue,
    SumDistribution,
    band_density,
    local_limit_diagnostic,
    moments,
    prefix_density,
    sum_distribution,
)
from .search import SweepResult, TableRow, build_table, density_sweep, emit_density_csv, emit_series

__version__ = "0.1.0"
