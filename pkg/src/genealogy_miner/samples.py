"""Directed (advisee, candidate) pair samples and feature normalization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import name_key
from .graph import (
    EDGE_DIM,
    CollabGraph,
    Corrections,
    edge_features,
    node_feature_names,
    node_features,
    pooled_structure,
)


@dataclass
class PairSample:
    """One candidate pair with raw features; ``label`` is 1 for advisor, 0 otherwise."""

    advisee: int
    candidate: int
    node_attr: np.ndarray
    pooled: np.ndarray
    edge_attr: np.ndarray
    label: Optional[int] = None
    field: str = ""
    first_year: int = 0


def make_sample(graph: CollabGraph, advisee: int, candidate: int, pool_dim: int,
                corrections: Optional[Corrections] = None, label: Optional[int] = None,
                org_buckets: int = 0, window: Optional[int] = None) -> PairSample:
    """Assemble the sample for nodes ``advisee`` and ``candidate`` of ``graph``."""
    na = node_features(graph, advisee, candidate, corrections, org_buckets=org_buckets)
    ea = edge_features(graph, advisee, candidate, window=window)
    return PairSample(
        advisee=graph.scholar_id(advisee),
        candidate=graph.scholar_id(candidate),
        node_attr=na.vector(),
        pooled=pooled_structure(graph, advisee, candidate, pool_dim),
        edge_attr=ea.vector(),
        label=label,
        field=graph.field_of[advisee],
        first_year=graph.first_coauthor_year(advisee, candidate),
    )


@dataclass
class AdvisorMatch:
    advisee: int
    advisor: int
    field: str


def match_ground_truth(ground_truth, graph: CollabGraph) -> list:
    """Locate ground-truth pairs in the graph.

    The advisee is looked up by name within its field and the advisor by
    name among that advisee's collaborators.  Pairs that resolve to zero or
    several node pairs are skipped.
    """
    by_name = {}
    for node, s in enumerate(graph.scholars):
        by_name.setdefault((s.key, s.field), []).append(node)
    matches = []
    for gt in ground_truth:
        found = []
        for node in by_name.get((name_key(gt.advisee_name), gt.field), []):
            for nb in graph.neighbors[node]:
                if graph.scholars[nb].key == name_key(gt.advisor_name):
                    found.append((node, int(nb)))
        if len(found) == 1:
            matches.append(AdvisorMatch(found[0][0], found[0][1], gt.field))
    return matches


def labeled_pairs(matches, graph: CollabGraph, rng: np.random.Generator) -> list:
    """Each match as a positive plus one uniformly drawn non-advisor collaborator as a negative.

    Returns ``(advisee_node, candidate_node, label)`` triples.  Advisees with
    no other collaborator contribute only their positive.
    """
    advisors = {}
    for m in matches:
        advisors.setdefault(m.advisee, set()).add(m.advisor)
    out = []
    for m in matches:
        out.append((m.advisee, m.advisor, 1))
        others = [int(nb) for nb in graph.neighbors[m.advisee] if int(nb) not in advisors[m.advisee]]
        if others:
            out.append((m.advisee, others[int(rng.integers(len(others)))], 0))
    return out


def build_samples(graph: CollabGraph, pairs, pool_dim: int, corrections: Optional[Corrections] = None,
                  org_buckets: int = 0, window: Optional[int] = None) -> list:
    return [
        make_sample(graph, i, j, pool_dim, corrections, label, org_buckets, window)
        for i, j, label in pairs
    ]


def stack(samples):
    """Arrays ``(node_attr, pooled, edge_attr, labels, fields)`` for a sample list."""
    node_attr = np.array([s.node_attr for s in samples], dtype=float)
    pooled = np.array([s.pooled for s in samples], dtype=float)
    edge_attr = np.array([s.edge_attr for s in samples], dtype=float)
    labels = np.array([-1 if s.label is None else s.label for s in samples], dtype=float)
    fields = [s.field for s in samples]
    return node_attr, pooled, edge_attr, labels, fields


class FeatureScaler:
    """Per-field min-max scaling to [0, 1], falling back to global ranges for unseen fields.

    Constant columns map to 0 and values outside the fitted range are clipped.
    """

    def __init__(self, node_dim: int, edge_dim: int = EDGE_DIM):
        self.node_dim = node_dim
        self.edge_dim = edge_dim
        self.ranges = {}

    def fit(self, node_attr, edge_attr, fields):
        X = np.hstack([node_attr, edge_attr])
        fields = np.asarray(fields, dtype=object)
        self.ranges = {"": (X.min(axis=0), X.max(axis=0))}
        for f in sorted(set(fields)):
            rows = X[fields == f]
            self.ranges[f] = (rows.min(axis=0), rows.max(axis=0))
        return self

    def transform(self, node_attr, edge_attr, fields):
        X = np.hstack([node_attr, edge_attr]).astype(float)
        out = np.empty_like(X)
        for k, f in enumerate(fields):
            lo, hi = self.ranges.get(f, self.ranges[""])
            span = hi - lo
            safe = np.where(span > 0, span, 1.0)
            out[k] = np.where(span > 0, (X[k] - lo) / safe, 0.0)
        np.clip(out, 0.0, 1.0, out=out)
        return out[:, :self.node_dim], out[:, self.node_dim:]

    def to_tensors(self) -> dict:
        names = sorted(self.ranges)
        return {f"scaler.lo.{k}": self.ranges[n][0] for k, n in enumerate(names)} | {
            f"scaler.hi.{k}": self.ranges[n][1] for k, n in enumerate(names)
        }

    def field_names(self) -> list:
        return sorted(self.ranges)

    @classmethod
    def from_tensors(cls, node_dim, edge_dim, names, tensors):
        scaler = cls(node_dim, edge_dim)
        scaler.ranges = {n: (tensors[f"scaler.lo.{k}"], tensors[f"scaler.hi.{k}"]) for k, n in enumerate(names)}
        return scaler


def node_attr_dim(org_buckets: int = 0) -> int:
    return len(node_feature_names(org_buckets))
