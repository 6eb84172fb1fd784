"""Mine advisor-advisee relationships from publication records.

The stages are plain functions over numpy arrays and small dataclasses:
name disambiguation, the coauthorship graph with its node and edge
features, the joint autoencoder classifier, evaluation helpers and the
genealogy export.  ``python -m genealogy_miner`` chains them from the
command line.
"""

from .corpus import AuthorMention, GroundTruthPair, PublicationRecord, load_ground_truth, load_publications
from .disambiguation import Scholar, disambiguate
from .evaluation import MetricsReport, SplitSpec, SyntheticSpec, generate_synthetic, metrics, split
from .genealogy import EligibilityRule, GenealogyRecord, export_genealogy, filter_scholars, generate_genealogy
from .graph import CollabGraph, Corrections, build_graph, edge_features, node_features
from .model import Shifu2Config, Shifu2Model, identify_advisor, train
from .pipeline import benchmark_config, prepare_dataset, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AuthorMention", "CollabGraph", "Corrections", "EligibilityRule", "GenealogyRecord", "GroundTruthPair",
    "MetricsReport", "PublicationRecord", "Scholar", "Shifu2Config", "Shifu2Model", "SplitSpec",
    "SyntheticSpec", "benchmark_config", "build_graph", "disambiguate", "edge_features", "export_genealogy",
    "filter_scholars", "generate_genealogy", "generate_synthetic", "identify_advisor", "load_ground_truth",
    "load_publications", "metrics", "node_features", "prepare_dataset", "run_experiment", "split", "train",
]
