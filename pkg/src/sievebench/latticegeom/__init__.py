"""Exact lattice convex geometry in dimensions 1 to 3."""

from .hull import LatticeHull, convex_hull
from .lemmas import (InscribedBox, LatticeBox, PopularSF, RegularizedSet, SFDecomposition,
                     VolumeBound, boundary_shell_count, check_volume_bound, epsilon_regularize,
                     inscribe_box, is_epsilon_regular, neighbourhood_counts, popular_sf_density,
                     shapley_folkman_decompose)
from .simplex import LPResult, basic_feasible_solution, linprog_max
