"""Student-optimal school assignment.

Students rank schools (ties allowed); schools only have capacities.  The
student-optimal matching is weakly stable under the symmetric reading of the
students' ranks and maximizes the rank histogram lexicographically.  It is
computed as a maximum-weight assignment of students to vacant seats.
"""
from .errors import OptAssignError
from .lapsolve import Assignment, max_weight_assignment, seeded_permutation
from .mechanisms import (
    Lottery,
    baseline_boston_rounds,
    baseline_serial_dictatorship,
    draw_lottery,
    expand_vacant_seats,
    run_mechanism,
    student_optimal_matching,
    tiebreak_preferences,
)
from .model import (
    Instance,
    Matching,
    Ordering,
    School,
    UtilityProfile,
    compare_profiles,
    rank,
    utility_profile,
    utility_scalar_digits,
    z_max,
)
from .verify import is_weakly_stable, oracle_max_weight, oracle_student_optimal
from .weights import WeightFn, build_rank_matrix, build_weight_matrix, validate_weight_fn

__version__ = "0.1.0"
