"""Cognitive monitor-node selection for observability of stochastic complex networks."""
from .cognition import (MonitorAction, PlanSpec, ValueTable, build_action_library, entropic_reward,
                        hypothesized_entropies, learn_update, plan, select_action)
from .dynamics import (ChemParams, ContinuousModel, LinearModel, NoiseSpec, chem_derivatives, chem_jacobian,
                       chem_model, measure, rk4_step, selection_matrix, simulate_continuous, step_linear)
from .errors import AggregationError, DivergenceError, NetObsError, NumericalError, ParameterError
from .graph import (Digraph, SccPartition, format_edge_list, incident_matrix, inference_diagram,
                    lsb_monitor_sets, matrix_to_digraph, parse_edge_list, read_edge_list, scc, write_edge_list)
from .harness import (ExperimentConfig, RunRecord, aggregate_curves, aggregate_histogram, lsb_density_study,
                      run_monte_carlo, run_realization)
from .netgen import GenSpec, assign_weights, gen_er, gen_scalefree, generate, spectral_radius, stabilize
from .perception import (GaussianBelief, divergence_check, entropic_state, hekf_predict, kf_predict, kf_update,
                         mutual_information)

__version__ = "0.1.0"
