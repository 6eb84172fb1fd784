"""Author name disambiguation by separation and iterative merging.

Every author mention starts as its own scholar.  Scholars printed under the
same (normalized) name are then merged when any of three rules fires:

* they cited each other (mutual by default, any direction if
  ``mutual_citation=False``),
* they share at least one coauthor name,
* they share at least one affiliation.

All qualifying pairs of a pass are merged at once with union-find, and
passes repeat until nothing changes.
"""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Optional

from .corpus import atomic_write_text, name_key
from .errors import IterationLimitExceeded

MAX_PASSES = 50

MUTUAL_CITATION = "mutual_citation"
SHARED_COAUTHOR = "shared_coauthor"
SHARED_AFFILIATION = "shared_affiliation"


@dataclass(frozen=True)
class Scholar:
    scholar_id: int
    canonical_name: str
    mention_ids: frozenset
    affiliations: frozenset
    papers: tuple
    paper_years: tuple
    field: str

    @property
    def first_pub_year(self) -> int:
        return self.paper_years[0]

    @property
    def key(self) -> str:
        return name_key(self.canonical_name)

    @property
    def n_papers(self) -> int:
        return len(self.papers)


@dataclass(frozen=True)
class MergeDecision:
    a: int
    b: int
    criterion: str


class RecordIndex:
    """Lookup tables over a record list, built once per corpus."""

    def __init__(self, records):
        self.records = list(records)
        self.by_id = {r.paper_id: r for r in self.records}

    def year(self, paper_id):
        return self.by_id[paper_id].year

    def mention(self, mention_id):
        paper_id, pos = mention_id
        return self.by_id[paper_id].authors[pos]


def _build_scholar(sid, mentions, index: RecordIndex) -> Scholar:
    mentions = frozenset(mentions)
    ordered = sorted(mentions, key=lambda m: (index.year(m[0]), m[0], m[1]))
    papers = []
    for paper_id, _ in ordered:
        if not papers or papers[-1] != paper_id:
            papers.append(paper_id)
    # the lowest mention decides the display name so ids and names stay stable
    first = min(mentions, key=lambda m: (index.year(m[0]), m[0], m[1]))
    affs = frozenset(
        index.mention(m).affiliation.casefold() for m in mentions if index.mention(m).affiliation
    )
    fields = Counter(index.by_id[p].field for p in papers)
    field = sorted(fields.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return Scholar(
        scholar_id=sid,
        canonical_name=index.mention(first).name,
        mention_ids=mentions,
        affiliations=affs,
        papers=tuple(papers),
        paper_years=tuple(index.year(p) for p in papers),
        field=field,
    )


def initial_split(records) -> list:
    """One scholar per author mention, numbered in record order."""
    index = records if isinstance(records, RecordIndex) else RecordIndex(records)
    scholars = []
    for rec in index.records:
        for pos in range(len(rec.authors)):
            scholars.append(_build_scholar(len(scholars), [(rec.paper_id, pos)], index))
    return scholars


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def find_merges(scholars, records, mutual_citation: bool = True) -> list:
    """Every qualifying same-name pair, with the first rule that fires.

    Pairs come back sorted by (a, b) so the downstream reduction is
    order-independent.
    """
    index = records if isinstance(records, RecordIndex) else RecordIndex(records)
    groups = defaultdict(list)
    for s in scholars:
        groups[s.key].append(s)

    decisions = {}
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda s: s.scholar_id)
        if len(members) < 2:
            continue
        ids = {s.scholar_id for s in members}

        # citation: member a cites member b when a reference of a's papers is one of b's papers
        owner = {}
        for s in members:
            for p in s.papers:
                owner.setdefault(p, set()).add(s.scholar_id)
        cites = defaultdict(set)
        for s in members:
            for p in s.papers:
                for ref in index.by_id[p].references:
                    for other in owner.get(ref, ()):
                        if other != s.scholar_id:
                            cites[s.scholar_id].add(other)
        for a in cites:
            for b in cites[a]:
                lo, hi = min(a, b), max(a, b)
                if mutual_citation and a not in cites.get(b, ()):
                    continue
                decisions.setdefault((lo, hi), MUTUAL_CITATION)

        # shared coauthor names and shared affiliations via inverted indexes
        by_coauthor = defaultdict(set)
        by_aff = defaultdict(set)
        for s in members:
            for paper_id, pos in s.mention_ids:
                for k, a in enumerate(index.by_id[paper_id].authors):
                    if k != pos and a.key != key:
                        by_coauthor[a.key].add(s.scholar_id)
            for aff in s.affiliations:
                by_aff[aff].add(s.scholar_id)
        for bucket, criterion in ((by_coauthor, SHARED_COAUTHOR), (by_aff, SHARED_AFFILIATION)):
            for holders in bucket.values():
                if len(holders) < 2:
                    continue
                hs = sorted(holders & ids)
                # a star over the holders is enough for union-find connectivity
                for other in hs[1:]:
                    decisions.setdefault((hs[0], other), criterion)
    return [MergeDecision(a, b, c) for (a, b), c in sorted(decisions.items())]


def merge_pass(scholars, records, mutual_citation: bool = True):
    """Apply one round of merges.  Returns ``(scholars, merges_applied)``.

    ``merges_applied`` counts how many scholars disappeared.  The merged
    scholar keeps the smallest id of its component.
    """
    index = records if isinstance(records, RecordIndex) else RecordIndex(records)
    decisions = find_merges(scholars, index, mutual_citation=mutual_citation)
    if not decisions:
        return list(scholars), 0
    by_id = {s.scholar_id: s for s in scholars}
    uf = _UnionFind(sorted(by_id))
    for d in decisions:
        uf.union(d.a, d.b)
    components = defaultdict(list)
    for sid in sorted(by_id):
        components[uf.find(sid)].append(sid)
    merged = []
    for root in sorted(components):
        members = components[root]
        if len(members) == 1:
            merged.append(by_id[root])
            continue
        mentions = set()
        for sid in members:
            mentions |= by_id[sid].mention_ids
        merged.append(_build_scholar(root, mentions, index))
    return merged, len(scholars) - len(merged)


def disambiguate(records, mutual_citation: bool = True, max_passes: int = MAX_PASSES,
                 trace: Optional[list] = None) -> list:
    """Split then merge to a fixpoint.

    If ``trace`` is given, the number of merges of every pass is appended to
    it, ending with the confirming zero.
    """
    index = RecordIndex(records)
    scholars = initial_split(index)
    for _ in range(max_passes):
        scholars, n = merge_pass(scholars, index, mutual_citation=mutual_citation)
        if trace is not None:
            trace.append(n)
        if n == 0:
            return scholars
    raise IterationLimitExceeded(f"no fixpoint after {max_passes} passes")


def mention_owner(scholars) -> dict:
    """Map every ``(paper_id, position)`` mention to its scholar id."""
    owner = {}
    for s in scholars:
        for m in s.mention_ids:
            owner[m] = s.scholar_id
    return owner


def scholars_to_csv(scholars) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scholar_id", "canonical_name", "first_pub_year", "n_papers"])
    for s in sorted(scholars, key=lambda s: s.scholar_id):
        writer.writerow([s.scholar_id, s.canonical_name, s.first_pub_year, s.n_papers])
    return buf.getvalue()


def export_scholars(scholars, path) -> None:
    atomic_write_text(path, scholars_to_csv(scholars))


def scholars_to_json(scholars) -> list:
    return [
        {"scholar_id": s.scholar_id, "mentions": sorted([list(m) for m in s.mention_ids])}
        for s in sorted(scholars, key=lambda s: s.scholar_id)
    ]


def scholars_from_json(data, records) -> list:
    """Rebuild scholars from their mention assignment (inverse of ``scholars_to_json``)."""
    index = records if isinstance(records, RecordIndex) else RecordIndex(records)
    return [
        _build_scholar(int(item["scholar_id"]), [(p, int(k)) for p, k in item["mentions"]], index)
        for item in data
    ]
