"""Glue from raw records to trained models and metrics reports."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .disambiguation import disambiguate
from .evaluation import SplitSpec, metrics, split
from .graph import Corrections, build_graph
from .model import Shifu2Config, Shifu2Model, train
from .samples import build_samples, labeled_pairs, match_ground_truth

log = logging.getLogger(__name__)

# hidden units per depth for each autoencoder
NODE_LAYER_GROUPS = {
    1: (2000,),
    2: (2000, 1000),
    3: (2000, 1000, 500),
    4: (2000, 1500, 1000, 500),
    5: (2000, 1500, 1000, 500, 300),
}
EDGE_LAYER_GROUPS = {
    1: (18,),
    2: (18, 50),
    3: (18, 50, 70),
    4: (18, 30, 50, 70),
    5: (18, 30, 50, 70, 90),
}

SWEEP_PARAMETERS = ("learning_rate", "node_depth", "edge_depth", "train_fraction", "embed_dim", "feature_window")


def benchmark_config(seed: int = 0, **overrides) -> Shifu2Config:
    """Narrow configuration that trains on the synthetic benchmark in about a minute.

    Same depths as the defaults at a tenth of the width and pooled dimension,
    with a smaller step size and longer pre-training so the narrow node
    autoencoder keeps the node attributes.
    """
    settings = dict(
        pool_dim=100,
        node_layers=(200, 100, 50),
        edge_layers=(18, 50),
        learning_rate=1e-3,
        pretrain_rate=1e-3,
        pretrain_epochs=800,
        batch_size=32,
        max_epochs=300,
        seed=seed,
    )
    settings.update(overrides)
    return Shifu2Config(**settings)


@dataclass
class Dataset:
    """A disambiguated corpus with its graph and labeled candidate pairs."""

    records: list
    scholars: list
    graph: object
    corrections: Corrections
    pairs: list  # (advisee_node, candidate_node, label)


def prepare_dataset(records, ground_truth, seed: int = 0, temporal: bool = True,
                    disciplinary: bool = False, scholars=None) -> Dataset:
    if scholars is None:
        scholars = disambiguate(records)
    graph = build_graph(scholars, records)
    corrections = Corrections.from_records(records, temporal=temporal, disciplinary=disciplinary)
    matches = match_ground_truth(ground_truth, graph)
    pairs = labeled_pairs(matches, graph, np.random.default_rng(seed))
    return Dataset(records, scholars, graph, corrections, pairs)


def dataset_samples(dataset: Dataset, config: Shifu2Config) -> list:
    return build_samples(dataset.graph, dataset.pairs, config.pool_dim, dataset.corrections,
                         config.org_buckets, config.feature_window)


def subsample(samples, fraction: float, seed: int) -> list:
    """Seeded class-stratified subset holding ``fraction`` of ``samples`` (at least one per class)."""
    if fraction >= 1.0:
        return list(samples)
    rng = np.random.default_rng(seed)
    keep = []
    for label in (0, 1):
        idx = [k for k, s in enumerate(samples) if s.label == label]
        n = max(1, int(round(fraction * len(idx))))
        keep.extend(rng.choice(idx, size=n, replace=False).tolist())
    return [samples[k] for k in sorted(keep)]


@dataclass
class ExperimentResult:
    model: Shifu2Model
    history: list
    report: object
    test_probs: np.ndarray
    test_samples: list


def run_experiment(samples, config: Shifu2Config, split_spec: SplitSpec = SplitSpec(),
                   train_fraction: float = 1.0) -> ExperimentResult:
    train_set, test_set = split(samples, split_spec)
    train_set = subsample(train_set, train_fraction, config.seed)
    model = Shifu2Model(config)
    model, history = train(model, train_set)
    probs = model.predict_proba(test_set)
    report = metrics(probs, [s.label for s in test_set])
    return ExperimentResult(model, history, report, probs, test_set)


def sweep_config(parameter: str, value, base: Shifu2Config) -> Shifu2Config:
    if parameter == "learning_rate":
        return dataclasses.replace(base, learning_rate=float(value))
    if parameter == "node_depth":
        return dataclasses.replace(base, node_layers=NODE_LAYER_GROUPS[int(value)])
    if parameter == "edge_depth":
        return dataclasses.replace(base, edge_layers=EDGE_LAYER_GROUPS[int(value)])
    if parameter == "embed_dim":
        return dataclasses.replace(
            base,
            node_layers=base.node_layers[:-1] + (int(value),),
            edge_layers=base.edge_layers[:-1] + (int(value),),
        )
    if parameter == "feature_window":
        return dataclasses.replace(base, feature_window=int(value))
    if parameter == "train_fraction":
        return base
    raise ValueError(f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}")


def sweep(parameter: str, values, base_config: Shifu2Config, dataset: Dataset,
          split_spec: SplitSpec = SplitSpec()) -> list:
    """One full train/evaluate run per value; returns ``[(value, MetricsReport), ...]``.

    Every row starts from ``base_config.seed`` so a row equals a standalone run.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}")
    rows = []
    cached = {}
    for value in values:
        cfg = sweep_config(parameter, value, base_config)
        key = (cfg.pool_dim, cfg.org_buckets, cfg.feature_window)
        if key not in cached:
            cached[key] = dataset_samples(dataset, cfg)
        fraction = float(value) if parameter == "train_fraction" else 1.0
        result = run_experiment(cached[key], cfg, split_spec, train_fraction=fraction)
        log.info("sweep %s=%s: %s", parameter, value, result.report)
        rows.append((value, result.report))
    return rows
