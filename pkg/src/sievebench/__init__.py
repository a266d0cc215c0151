"""Exact sieve counts, subset-sum witnesses and small-dimensional lattice geometry."""

from .errors import (CounterexampleError, DimensionError, DomainError, ResourceError,
                     ValidationError, WorkbenchError)
from .friable import PsiReport, dickman_rho, psi_count, psi_table, theorem_ratio_report
from .primeset import (ConditionWitness, PrimeSet, generate_primes, mertens_product,
                       reciprocal_prime_sum, scan_theorem_condition)
from .primereduce import (LocalizedSet, RhoGrid, build_rho_grid, hyp_p_check,
                          hyp_p_tuple_count, localize)
from .sumsolve import (BleichenbacherWitness, DoublingDecomposition, RepCountTable,
                       WeightedIntegerSet, check_bleichenbacher_precondition,
                       dyadic_localization, hypothesis_a_check, hypothesis_a_star_check,
                       popular_doubling, rep_count_table, solve_bleichenbacher, windowed_count)

__version__ = "0.1.0"
