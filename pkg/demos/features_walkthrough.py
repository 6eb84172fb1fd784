"""
From publication records to pair features
=========================================

A hand-built corpus small enough to check by eye: one student, their
advisor, and a visiting collaborator.  We disambiguate the authors, build
the collaboration graph and print the node and edge attributes of each
collaborator of the student.
"""

import numpy as np

from genealogy_miner.corpus import AuthorMention, PublicationRecord
from genealogy_miner.disambiguation import disambiguate
from genealogy_miner.graph import (
    EDGE_FEATURE_NAMES,
    Corrections,
    build_graph,
    edge_features,
    node_feature_names,
    node_features,
    temporal_factor,
)


def paper(pid, year, *authors):
    return PublicationRecord(pid, pid, year, "computer science",
                             tuple(AuthorMention(name, org) for name, org in authors))


ADV = ("R. Okafor", "Northfield University")
STU = ("L. Brandt", "Northfield University")
VIS = ("M. Ueda", "Kestrel Institute")

records = [paper(f"a{k}", 1990 + k, ADV) for k in range(12)]             # advisor's early career
records += [paper(f"s{k}", 2002 + k // 2, STU, ADV) for k in range(8)]  # student first, advisor last
records += [paper("v1", 2005, VIS, STU), paper("v2", 2009, STU, VIS)]
records += [paper(f"u{k}", 1998 + 2 * k, VIS) for k in range(5)]

# %% Disambiguation: every mention of a name ends up with one scholar
scholars = disambiguate(records)
for s in scholars:
    print(f"{s.scholar_id:>3}  {s.canonical_name:<10} first paper {s.first_pub_year}, {s.n_papers} papers")

# %% Collaboration graph: edge weights count joint papers
g = build_graph(scholars, records)
node = {s.canonical_name: k for k, s in enumerate(g.scholars)}
print("\njoint papers\n", g.adjacency.toarray())

# %% Features of the student paired with each collaborator
corr = Corrections.from_records(records)
student = node["L. Brandt"]
for other in ("R. Okafor", "M. Ueda"):
    j = node[other]
    na = node_features(g, student, j, corr)
    ea = edge_features(g, student, j)
    print(f"\nL. Brandt with {other} (first joint paper {g.first_coauthor_year(student, j)})")
    print("  node:", dict(zip(node_feature_names(), np.round(na.vector(), 3).tolist())))
    print("  edge:", dict(zip(EDGE_FEATURE_NAMES, np.round(ea.vector(), 3).tolist())))

# %% Why publication counts are deflated
# The same raw count weighs less in a later year because the literature grew.
for year in (1990, 2000, 2010):
    print(f"10 papers before {year} -> {10 / temporal_factor(year):.3g} deflated")
