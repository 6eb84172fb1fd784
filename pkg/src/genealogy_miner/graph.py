"""Collaboration graph and the node/edge attribute features of a scholar pair.

Edge attribute layout (18 values)::

    [ad, ct, cd, ft, lf, kulc_1 .. kulc_7, yearly_1 .. yearly_6]

``kulc_t`` is the Kulczynski similarity using cumulative paper counts up to
``t`` years after the first joint paper (year ``y_c + t - 1`` inclusive);
``yearly_k`` is the number of joint papers in year ``y_c + k - 1``.

Node attribute layout::

    [aa_i, aa_j, same_org, np_i, np_j, org_bucket_0 .. org_bucket_{B-1}]
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from bisect import bisect_left
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .disambiguation import mention_owner
from .errors import DomainError, NoCollaboration, ShapeMismatch

KULC_YEARS = 7
YEARLY_YEARS = 6
EDGE_DIM = 5 + KULC_YEARS + YEARLY_YEARS
N_FIELDS = 19

# fitted exponential used as the publication-growth deflator
TAU_SCALE = 4.15e-46
TAU_RATE = 0.05
# fitted yearly publication totals: GROWTH_SCALE * exp(TAU_RATE * y) + GROWTH_OFFSET
GROWTH_SCALE = 8.3e-45
GROWTH_OFFSET = 22.7e3

EDGE_FEATURE_NAMES = (
    ["ad", "ct", "cd", "ft", "lf"]
    + [f"kulc_{t}" for t in range(1, KULC_YEARS + 1)]
    + [f"yearly_{k}" for k in range(1, YEARLY_YEARS + 1)]
)


def node_feature_names(org_buckets: int = 0) -> list:
    return ["aa_i", "aa_j", "same_org", "np_i", "np_j"] + [f"org_{b}" for b in range(org_buckets)]


@dataclass
class JointPaper:
    paper_id: str
    year: int
    pos_i: int
    pos_j: int
    n_authors: int


@dataclass
class CollabGraph:
    """Weighted undirected coauthorship graph.

    Nodes are scholars indexed ``0..n_nodes-1`` in ascending scholar id.
    ``joint[(i, j)]`` (with ``i < j``) lists the shared papers, sorted by
    year, with each endpoint's author position.
    """

    scholars: list
    node_of: dict
    adjacency: sp.csr_matrix
    joint: dict
    paper_years: list
    affiliations: list
    field_of: list
    neighbors: list = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.scholars)

    @property
    def edges(self) -> list:
        """``(i, j, first_coauthor_year, per_year_counts)`` for every edge."""
        out = []
        for (i, j), papers in sorted(self.joint.items()):
            out.append((i, j, papers[0].year, dict(Counter(p.year for p in papers))))
        return out

    def scholar_id(self, node: int) -> int:
        return self.scholars[node].scholar_id

    def papers_between(self, i: int, j: int) -> list:
        if i == j:
            raise NoCollaboration("a scholar does not collaborate with itself")
        if i < j:
            papers = self.joint.get((i, j))
            return papers or _raise_no_collab(i, j)
        papers = self.joint.get((j, i))
        if not papers:
            _raise_no_collab(i, j)
        return [JointPaper(p.paper_id, p.year, p.pos_j, p.pos_i, p.n_authors) for p in papers]

    def first_coauthor_year(self, i: int, j: int) -> int:
        return self.papers_between(i, j)[0].year

    def n_papers_before(self, i: int, year: int) -> int:
        """Papers of ``i`` published strictly before ``year``."""
        return bisect_left(self.paper_years[i], year)

    def n_papers_through(self, i: int, year: int) -> int:
        """Papers of ``i`` published up to and including ``year``."""
        return bisect_left(self.paper_years[i], year + 1)

    def binary_row(self, i: int) -> np.ndarray:
        row = np.zeros(self.n_nodes)
        row[self.neighbors[i]] = 1.0
        return row


def _raise_no_collab(i, j):
    raise NoCollaboration(f"nodes {i} and {j} never co-authored")


def build_graph(scholars, records) -> CollabGraph:
    """Coauthorship graph whose edge weight is the number of joint papers."""
    scholars = sorted(scholars, key=lambda s: s.scholar_id)
    node_of = {s.scholar_id: k for k, s in enumerate(scholars)}
    owner = mention_owner(scholars)
    joint = defaultdict(list)
    for rec in records:
        nodes = []
        for pos in range(len(rec.authors)):
            sid = owner.get((rec.paper_id, pos))
            if sid is not None:
                nodes.append((node_of[sid], pos))
        # a merged scholar listed twice on one paper counts once, at its first position
        first_pos = {}
        for node, pos in nodes:
            first_pos.setdefault(node, pos)
        items = sorted(first_pos.items())
        n = len(rec.authors)
        for a in range(len(items)):
            for b in range(a + 1, len(items)):
                (i, pi), (j, pj) = items[a], items[b]
                joint[(i, j)].append(JointPaper(rec.paper_id, rec.year, pi, pj, n))
    for papers in joint.values():
        papers.sort(key=lambda p: (p.year, p.paper_id))
    n_nodes = len(scholars)
    if joint:
        keys = sorted(joint)
        rows = np.array([k[0] for k in keys] + [k[1] for k in keys])
        cols = np.array([k[1] for k in keys] + [k[0] for k in keys])
        vals = np.array([len(joint[k]) for k in keys] * 2, dtype=float)
        adjacency = sp.csr_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes))
    else:
        adjacency = sp.csr_matrix((n_nodes, n_nodes))
    neighbors = [np.sort(adjacency.indices[adjacency.indptr[k]:adjacency.indptr[k + 1]]) for k in range(n_nodes)]
    return CollabGraph(
        scholars=scholars,
        node_of=node_of,
        adjacency=adjacency,
        joint=dict(joint),
        paper_years=[list(s.paper_years) for s in scholars],
        affiliations=[s.affiliations for s in scholars],
        field_of=[s.field for s in scholars],
        neighbors=neighbors,
    )


def academic_age(first_pub_year: int, first_coauthor_year: int) -> int:
    """Years between a scholar's first paper and the first paper with a partner."""
    age = first_coauthor_year - first_pub_year
    if age < 0:
        raise DomainError("first coauthored paper predates the first publication")
    return age


def pair_academic_age(graph: CollabGraph, i: int, j: int) -> int:
    return academic_age(graph.paper_years[i][0], graph.first_coauthor_year(i, j))


def kulc(np_ij, np_i, np_j) -> float:
    """Kulczynski collaboration similarity ``(np_ij / 2) (1/np_i + 1/np_j)``."""
    if np_i <= 0 or np_j <= 0:
        raise DomainError("publication counts must be positive")
    return 0.5 * np_ij * (1.0 / np_i + 1.0 / np_j)


def temporal_factor(year):
    """Publication-growth deflator ``4.15e-46 * exp(0.05 * year)``."""
    return TAU_SCALE * np.exp(TAU_RATE * np.asarray(year, dtype=float))


def rescale_publications(p, year):
    return np.asarray(p, dtype=float) / temporal_factor(year)


def yearly_publication_curve(year, with_offset: bool = True):
    """Fitted total publications per year (exponential plus constant offset)."""
    p = GROWTH_SCALE * np.exp(TAU_RATE * np.asarray(year, dtype=float))
    return p + GROWTH_OFFSET if with_offset else p


def disciplinary_factor(field_name: str, year: int, pub_counts_by_field_year: dict,
                        n_fields: int = N_FIELDS) -> float:
    """Field output in ``year`` relative to the mean over fields, times ``n_fields``.

    ``pub_counts_by_field_year`` maps ``(field, year)`` to a publication count;
    the mean runs over the fields present in that year.
    """
    counts = [c for (f, y), c in pub_counts_by_field_year.items() if y == year]
    if not counts:
        raise DomainError(f"no publications recorded for year {year}")
    mean = sum(counts) / len(counts)
    if mean <= 0:
        raise DomainError(f"mean publication count in {year} is zero")
    value = pub_counts_by_field_year.get((field_name, year), 0)
    if value <= 0:
        raise DomainError(f"field {field_name!r} has no publications in {year}")
    return n_fields * value / mean


@dataclass
class Corrections:
    """Temporal and disciplinary corrections applied to publication counts."""

    pub_counts: dict = field(default_factory=dict)
    n_fields: int = N_FIELDS
    temporal: bool = True
    disciplinary: bool = False

    @classmethod
    def from_records(cls, records, n_fields: int = N_FIELDS, temporal: bool = True,
                     disciplinary: bool = False) -> "Corrections":
        counts = Counter((r.field, r.year) for r in records)
        return cls(dict(counts), n_fields, temporal, disciplinary)

    def tau(self, year):
        return temporal_factor(year)

    def delta(self, field_name, year):
        return disciplinary_factor(field_name, year, self.pub_counts, self.n_fields)

    def apply(self, count, field_name, year) -> float:
        value = float(count)
        if self.temporal:
            value = float(rescale_publications(value, year))
        if self.disciplinary and value:
            value /= self.delta(field_name, year)
        return value


@dataclass(frozen=True)
class NodeAttr:
    aa_i: int
    aa_j: int
    same_org: int
    np_i: float
    np_j: float
    org_buckets: tuple = ()

    def vector(self) -> np.ndarray:
        return np.array([self.aa_i, self.aa_j, self.same_org, self.np_i, self.np_j, *self.org_buckets], dtype=float)


@dataclass(frozen=True)
class EdgeAttr:
    ad: int
    ct: int
    cd: int
    ft: int
    lf: int
    kulc: tuple
    yearly: tuple

    def vector(self) -> np.ndarray:
        return np.array([self.ad, self.ct, self.cd, self.ft, self.lf, *self.kulc, *self.yearly], dtype=float)


def _org_bucket(name: str, buckets: int) -> int:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % buckets


def node_features(graph: CollabGraph, i: int, j: int, corrections: Optional[Corrections] = None,
                  org_buckets: int = 0) -> NodeAttr:
    """Pairwise node attributes of scholar ``i`` and collaborator ``j``.

    Publication counts cover papers strictly before the first joint paper and
    are deflated to the year of that paper when ``corrections`` is given.
    """
    y_c = graph.first_coauthor_year(i, j)
    np_i = graph.n_papers_before(i, y_c)
    np_j = graph.n_papers_before(j, y_c)
    if corrections is not None:
        np_i = corrections.apply(np_i, graph.field_of[i], y_c)
        np_j = corrections.apply(np_j, graph.field_of[j], y_c)
    same = int(bool(graph.affiliations[i] & graph.affiliations[j]))
    buckets = ()
    if org_buckets:
        vec = [0] * org_buckets
        for aff in graph.affiliations[i] | graph.affiliations[j]:
            vec[_org_bucket(aff, org_buckets)] = 1
        buckets = tuple(vec)
    return NodeAttr(
        aa_i=academic_age(graph.paper_years[i][0], y_c),
        aa_j=academic_age(graph.paper_years[j][0], y_c),
        same_org=same,
        np_i=float(np_i),
        np_j=float(np_j),
        org_buckets=buckets,
    )


def edge_features(graph: CollabGraph, i: int, j: int, window: Optional[int] = None) -> EdgeAttr:
    """Collaboration-intensity attributes of the pair ``(i, j)``.

    ``window`` limits every collaboration count to the first ``window`` years
    of the collaboration; kulc values past the window stay frozen at the
    last value inside it and yearly counts past it are zero.
    """
    papers = graph.papers_between(i, j)
    y_c = papers[0].year
    if window is not None:
        if window < 1:
            raise DomainError("window must be at least one year")
        papers = [p for p in papers if p.year < y_c + window]
    aa_i = academic_age(graph.paper_years[i][0], y_c)
    aa_j = academic_age(graph.paper_years[j][0], y_c)
    ft = sum(1 for p in papers if {p.pos_i, p.pos_j} == {0, 1})
    lf = sum(1 for p in papers if p.n_authors >= 2 and {p.pos_i, p.pos_j} == {0, p.n_authors - 1})
    joint_years = [p.year for p in papers]
    kulcs = []
    for t in range(1, KULC_YEARS + 1):
        horizon = y_c + min(t, window or t) - 1
        np_ij = bisect_left(joint_years, horizon + 1)
        kulcs.append(kulc(np_ij, graph.n_papers_through(i, horizon), graph.n_papers_through(j, horizon)))
    per_year = Counter(joint_years)
    yearly = tuple(per_year.get(y_c + k - 1, 0) for k in range(1, YEARLY_YEARS + 1))
    return EdgeAttr(
        ad=aa_i - aa_j,
        ct=len(papers),
        cd=joint_years[-1] - y_c,
        ft=ft,
        lf=lf,
        kulc=tuple(kulcs),
        yearly=yearly,
    )


def pool_rows(row_i, row_j, pool_dim: int) -> np.ndarray:
    """Chunk-average both adjacency rows to ``pool_dim`` entries, then average the pair.

    Chunks are contiguous with size ``ceil(n / pool_dim)``; the last chunk
    may be short and unused slots stay zero.
    """
    row_i = np.asarray(row_i, dtype=float)
    row_j = np.asarray(row_j, dtype=float)
    if row_i.shape != row_j.shape or row_i.ndim != 1:
        raise ShapeMismatch(f"rows must be equal-length vectors, got {row_i.shape} and {row_j.shape}")
    return 0.5 * (_pool_row(row_i, pool_dim) + _pool_row(row_j, pool_dim))


def _pool_row(row, pool_dim):
    n = row.shape[0]
    out = np.zeros(pool_dim)
    if n == 0:
        return out
    size = math.ceil(n / pool_dim)
    n_chunks = math.ceil(n / size)
    sums = np.add.reduceat(row, np.arange(0, n, size))
    lengths = np.diff(np.append(np.arange(0, n, size), n))
    out[:n_chunks] = sums / lengths
    return out


def pooled_structure(graph: CollabGraph, i: int, j: int, pool_dim: int) -> np.ndarray:
    """Pooled binary adjacency rows of the pair."""
    return pool_rows(graph.binary_row(i), graph.binary_row(j), pool_dim)


def feature_dump_csv(rows, node_names, raw_node, raw_edge, norm_node=None, norm_edge=None) -> str:
    """One CSV row per candidate pair: ids, raw features and (optionally) normalized ones."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    header = ["advisee", "candidate", "label"] + list(node_names) + list(EDGE_FEATURE_NAMES)
    if norm_node is not None:
        header += [f"norm_{n}" for n in node_names] + [f"norm_{n}" for n in EDGE_FEATURE_NAMES]
    writer.writerow(header)
    for k, (advisee, candidate, label) in enumerate(rows):
        line = [advisee, candidate, "" if label is None else label]
        line += [repr(float(v)) for v in raw_node[k]] + [repr(float(v)) for v in raw_edge[k]]
        if norm_node is not None:
            line += [repr(float(v)) for v in norm_node[k]] + [repr(float(v)) for v in norm_edge[k]]
        writer.writerow(line)
    return buf.getvalue()
