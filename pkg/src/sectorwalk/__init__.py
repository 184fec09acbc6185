"""Down-up walk sampling and counting for monomer-dimer systems, k-matchings,
nonsymmetric DPPs and partition-constrained densities, with exhaustive
spectral diagnostics."""

__version__ = "0.1.0"

from .graph import EmbeddedGraph, GraphError, faces, find_matching_of_size, generate, induce, parse_graph
from .fkt import NumericError, brute_force_pm, monomer_weight, pfaffian_orient, pm_partition_function
from .densities import (Density, DensityError, NdppKernel, PartitionConstraint, apply_external_field, condition,
                        explicit_density, k_matching_density, monomer_dimer_density, ndpp_density,
                        partition_constrained)
from .walk import (WalkConfig, down_up_step, exact_transition_matrix, run_chain, run_chains, spectral_gap,
                   tv_to_stationary)
from .diagnostics import (correlation_matrices, entropy_bound_check, enumerate_density, flc_hessian_check,
                          homogenization_spectrum_check, newton_polytope_max_edge, row_norm_and_spectrum,
                          support_log_estimate)
from .counting import (CountEstimate, MultiaffinePolynomial, count_k_matchings, estimate_mixed_derivative,
                       estimate_partition_function, sample_monomer_dimer)
