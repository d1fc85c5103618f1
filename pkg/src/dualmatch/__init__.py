"""Interactive ontology matching with a committee of weak labeling functions.

A fast query loop exploits high-confidence candidates selected by a curated
committee, while a concurrent slow loop explores new matches by creating and
tuning threshold-based labeling functions. Includes a simulated-oracle
benchmark harness and an HTTP session service for human verification.
"""

from .blocking import CandidatePair, CandidateSet, choose_k, generate_candidates
from .committee import CommitteeModel, fit_committee, select_committee, uniform_committee
from .embeddings import HashingEmbedder, ProviderPair
from .evaluation import EvaluationReport, SimulatedOracle, report_from_trace
from .fastloop import FastLoopConfig, MatchEngine, QueryBatch, run_fast_loop
from .labeling import AnnotationStore, InitialLF, TunableLF, initial_labeling_functions
from .metrics import FeatureComputer, FeatureVector
from .ontology import (
    ClassRecord,
    GroundTruth,
    MatchTask,
    OntologySchema,
    candidate_universe,
    load_alignment,
    parse_ontology,
)
from .slowloop import MetricRegistry, SlowLoop, ThresholdState, tune_threshold
from .synthetic import generate_synthetic_task
from .trace import RunTrace

__version__ = "0.1.0"

__all__ = [
    "AnnotationStore",
    "CandidatePair",
    "CandidateSet",
    "ClassRecord",
    "CommitteeModel",
    "EvaluationReport",
    "FastLoopConfig",
    "FeatureComputer",
    "FeatureVector",
    "GroundTruth",
    "HashingEmbedder",
    "InitialLF",
    "MatchEngine",
    "MatchTask",
    "MetricRegistry",
    "OntologySchema",
    "ProviderPair",
    "QueryBatch",
    "RunTrace",
    "SimulatedOracle",
    "SlowLoop",
    "ThresholdState",
    "TunableLF",
    "candidate_universe",
    "choose_k",
    "fit_committee",
    "generate_candidates",
    "generate_synthetic_task",
    "initial_labeling_functions",
    "load_alignment",
    "parse_ontology",
    "report_from_trace",
    "run_fast_loop",
    "select_committee",
    "tune_threshold",
    "uniform_committee",
]
