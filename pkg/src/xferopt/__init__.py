"""Surrogate-assisted optimization of expensive black-box functions with
competitive reuse of solutions archived from previously solved tasks."""

__version__ = "0.1.0"

from .acquisition import EvoConfig, InfillCriterion, acquire_candidate
from .adaptation import AdaptationMap, adapt_solution, fit_translation_map
from .decay import DecayModel, fit_decay
from .engine import BackboneConfig, EvalRecord, RunTrace, run_search
from .exceptions import KnowledgeBaseFormatError, RunAbortError, TrainingError
from .experiment import (ExperimentConfig, ExperimentResult, bo_lcb_backbone,
                         build_kb, checkpoint_fes, rbf_pov_backbone,
                         run_experiment)
from .kb_io import load_kb, save_kb
from .rng import RngStream
from .sampling import lhs_sample
from .scenarios import (Scenario, ScenarioSpec, gen_scenario,
                        translated_copy_pair)
from .stats import holm_correction, rank_vector, spearman, wilcoxon_rank_sum
from .surrogates import GprRegressor, RbfInterpolator
from .task import Database, Task
from .theory import (DensitySpec, TheoryParams, convergence_gain, expected_gain,
                     gain_threshold, net_gain, threshold_sweep)
from .transfer import (KnowledgeBase, SourceRecord, TransferConfig,
                       compete, external_improvement, make_source_record,
                       run_search_with_transfer, source_improvement,
                       surrogate_rank_similarity)

__all__ = [
    "AdaptationMap",
    "BackboneConfig",
    "Database",
    "DecayModel",
    "DensitySpec",
    "EvalRecord",
    "EvoConfig",
    "ExperimentConfig",
    "ExperimentResult",
    "GprRegressor",
    "InfillCriterion",
    "KnowledgeBase",
    "KnowledgeBaseFormatError",
    "RbfInterpolator",
    "RngStream",
    "RunAbortError",
    "RunTrace",
    "Scenario",
    "ScenarioSpec",
    "SourceRecord",
    "Task",
    "TheoryParams",
    "TrainingError",
    "TransferConfig",
    "acquire_candidate",
    "adapt_solution",
    "bo_lcb_backbone",
    "build_kb",
    "checkpoint_fes",
    "compete",
    "convergence_gain",
    "expected_gain",
    "external_improvement",
    "fit_decay",
    "fit_translation_map",
    "gain_threshold",
    "gen_scenario",
    "holm_correction",
    "lhs_sample",
    "load_kb",
    "make_source_record",
    "net_gain",
    "rank_vector",
    "rbf_pov_backbone",
    "run_experiment",
    "run_search",
    "run_search_with_transfer",
    "save_kb",
    "source_improvement",
    "spearman",
    "surrogate_rank_similarity",
    "threshold_sweep",
    "translated_copy_pair",
    "wilcoxon_rank_sum",
    "__version__",
]
