"""Random threshold graphs: degree simulation, limit laws and joint degree moments."""

from .errors import (ConfigError, InvalidInput, NumericalFailure, ResourceRefused,
                     RTGraphError, UnsupportedOperation)
from .experiments import (FactorialMomentCheck, Histogram, NondegeneracyReport,
                          ReplicationMatrix, column_stats, empirical_histogram,
                          factorial_moment_check, ks_distance, nondegeneracy_report,
                          run_averaged_pmf, run_replications,
                          spread_diagnostics)
from .fitness import (AssumptionReport, CustomFitness, ExponentialFitness, FitnessModel,
                      ParetoFitness, check_assumption_A, constant_intensity_model, eval_cdf,
                      intensity, model_from_config, sample_fitness, scaling_threshold)
from .graph import (DegreeCensus, GraphRun, degree_census, degree_sequence_fast,
                    degree_sequence_naive, degree_sequences_batch, edge_stream, generate_graph)
from .joint import (CharFnEval, JointLimitSample, MomentEstimate, char_fn, f_r_factor,
                    finite_n_isolation_probability, finite_n_joint_pgf, g_r_direct,
                    joint_moment, moment_sequence, pi_mean_var, sample_joint_limit,
                    sampler_pgf_grid, truncation_order)
from .limits import (finite_n_nodal_pgf, finite_n_nodal_pmf, fujihara_approx, fujihara_pmf,
                     limit_nodal_pmf, nodal_pmf_table)

__version__ = "0.1.0"
