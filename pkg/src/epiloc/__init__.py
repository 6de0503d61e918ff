"""epiloc: budgeted observer placement and epidemic source localization.

Workflow: build or load a weighted network, place a budget of observer nodes
(greedy class-count placement for low transmission variance, greedy path
covering for high variance, or one of the benchmark heuristics), simulate
outbreaks with random per-edge delays, and estimate the source from the
observers' infection-time differences.
"""

from .graphs import (CanonicalPath, DistanceMatrix, Graph, GraphError,
                     ShortestPathTree, all_pairs_shortest_paths,
                     barabasi_albert_graph, canonical_shortest_path,
                     cycle_graph, cycle_with_leaf, generate, load_edge_list,
                     load_edge_list_file, path_graph, random_geometric_graph,
                     shortest_path_tree, star_graph)
from .resolution import (EquivalencePartition, ObserverSet, Prior,
                         distance_vector, entropy, expected_distance, is_drs,
                         load_prior, partition, resolution_gap,
                         success_probability, worst_case_metrics)
from .placement import (LengthConstraint, PlacementMetrics, PlacementResult,
                        betweenness_placement, coverage_rate_placement,
                        entropy_greedy_placement, evaluate_observers,
                        exhaustive_optimal_placement,
                        expected_distance_greedy_placement, hv_obs,
                        k_median_placement, lv_obs, min_drs_budget, p_l_nodes,
                        select_L)
from .epidemic import (EpidemicTrace, Observation, TransmissionModel, observe,
                       sample_delay, sample_edge_delays, simulate)
from .estimation import (EstimateResult, covariance_matrix,
                         gaussian_ml_estimate, zero_variance_estimate)
from .experiments import (ExperimentConfig, MetricsRow, PlacementSpec,
                          compare_objectives, derive_seed, emit_csv,
                          parse_config, run_experiment)

__version__ = "0.1.0"
