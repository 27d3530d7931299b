"""AirComp-based feature aggregation for integrated sensing and edge inference.

Simulation library and CLI covering the system statistics, sensing synthesis,
over-the-air aggregation metrics, four transceiver power-allocation
optimizers (computation/decision-optimal under TDM/FDM), two baselines, a MAP
classifier, brute-force validation oracles, and a Monte-Carlo sweep harness.
"""

from .aircomp import (Allocation, ProxyReport, aggregate, markov_accuracy_bound,
                      md_per_dim, md_total, min_pairwise_md, mse_per_dim,
                      mse_total, pairwise_md, proxy_report)
from .baselines import channel_inversion, equal_allocation
from .classify import (Decision, classify_batch, estimate_accuracy, map_classify,
                       noise_free_ceiling)
from .fdm import (DualState, FdmSolution, SolverOptions, UnboundedReceiveGain,
                  comp_optimal_fdm, decision_optimal_fdm, inner_b_comp,
                  inner_b_decision, solve_rn, solve_zn)
from .harness import (SweepConfig, SweepResult, SweepRow, assign_subcarriers,
                      default_class_model, emit, run_sweep)
from .model import (FDM, TDM, ChannelRealization, ClassModel, Scenario,
                    SecondMoments, delta_min_sq, sample_channels, second_moments,
                    spawn_streams)
from .sensing import (FeatureSample, PcaBasis, RankDeficiencyError, fit_pca,
                      fit_pca_csv, synthesize_batch, synthesize_sample)
from .tdm import TdmSolution, comp_optimal_tdm, decision_optimal_tdm

__version__ = "0.1.0"
