import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genealogy_miner.corpus import AuthorMention, PublicationRecord
from genealogy_miner.disambiguation import (
    disambiguate,
    export_scholars,
    initial_split,
    merge_pass,
    scholars_from_json,
    scholars_to_json,
)
from genealogy_miner.errors import IterationLimitExceeded


def paper(pid, year, *authors, refs=()):
    mentions = tuple(AuthorMention(a, None) if isinstance(a, str) else AuthorMention(*a) for a in authors)
    return PublicationRecord(pid, pid, year, "cs", mentions, tuple(refs))


def names(scholars):
    return sorted(s.canonical_name for s in scholars)


def test_initial_split_counts():
    assert len(initial_split([paper("p", 2000, "A", "B", "C")])) == 3
    assert len(initial_split([paper("p", 2000, "A", "B"), paper("q", 2001, "C", "D")])) == 4
    assert initial_split([]) == []


def test_shared_coauthor_merges():
    recs = [paper("p1", 2000, "J. Smith", "K. Lee"), paper("p2", 2003, "J. Smith", "K. Lee")]
    scholars = disambiguate(recs)
    smiths = [s for s in scholars if s.canonical_name == "J. Smith"]
    assert len(smiths) == 1
    assert smiths[0].first_pub_year == 2000
    assert smiths[0].papers == ("p1", "p2")


def test_unrelated_homonyms_stay_apart():
    recs = [paper("p1", 2000, ("J. Smith", "U1"), "A"), paper("p2", 2003, ("J. Smith", "U2"), "B")]
    scholars, merges = merge_pass(initial_split(recs), recs)
    assert merges == 0
    assert names(scholars).count("J. Smith") == 2


def test_mutual_citation_merges():
    recs = [
        paper("p1", 2000, "J. Smith", "A", refs=["p2"]),
        paper("p2", 2001, "J. Smith", "B", refs=["p1"]),
    ]
    assert names(disambiguate(recs)).count("J. Smith") == 1


def test_one_way_citation_needs_directed_flag():
    recs = [
        paper("p1", 2000, "J. Smith", "A", refs=["p2"]),
        paper("p2", 2001, "J. Smith", "B"),
    ]
    assert names(disambiguate(recs)).count("J. Smith") == 2
    assert names(disambiguate(recs, mutual_citation=False)).count("J. Smith") == 1


def test_shared_affiliation_merges_case_insensitive():
    recs = [paper("p1", 2000, ("Li Wei", "Tsinghua"), "A"), paper("p2", 2005, ("li  wei", "tsinghua"), "B")]
    assert len([s for s in disambiguate(recs) if s.key == "li wei"]) == 1


def _closure_components(recs, name):
    """Brute-force oracle: transitive closure of the three rules over single mentions."""
    ments = [(r, k) for r in recs for k, a in enumerate(r.authors) if a.key == name]

    def linked(m1, m2):
        (r1, k1), (r2, k2) = m1, m2
        co1 = {a.key for j, a in enumerate(r1.authors) if j != k1 and a.key != name}
        co2 = {a.key for j, a in enumerate(r2.authors) if j != k2 and a.key != name}
        a1, a2 = r1.authors[k1].affiliation, r2.authors[k2].affiliation
        return bool(co1 & co2) or (a1 is not None and a1.casefold() == (a2 or "").casefold())

    comp = {m: {m} for m in ments}
    changed = True
    while changed:
        changed = False
        for m1, m2 in itertools.combinations(ments, 2):
            if comp[m1] is not comp[m2] and (linked(m1, m2) or any(linked(x, y) for x in comp[m1] for y in comp[m2])):
                merged = comp[m1] | comp[m2]
                for m in merged:
                    comp[m] = merged
                changed = True
    return len({id(c) for c in comp.values()})


def test_chain_merges_within_two_passes():
    recs = [
        paper("a", 2000, ("Sam Ng", "Uni X"), "K. Lee"),
        paper("b", 2002, ("Sam Ng", "Uni Y"), "K. Lee"),
        paper("c", 2004, ("Sam Ng", "Uni Y"), "Other"),
    ]
    trace = []
    scholars = disambiguate(recs, trace=trace)
    assert len(trace) <= 2 + 1
    assert sum(1 for s in scholars if s.key == "sam ng") == _closure_components(recs, "sam ng") == 1


def test_no_duplicate_names_is_identity():
    recs = [paper("p1", 2000, "A", "B"), paper("p2", 2001, "C", "D")]
    assert disambiguate(recs) == initial_split(recs)


def test_fixpoint_idempotence():
    recs = [paper(f"p{k}", 2000 + k, "J. Smith", "K. Lee" if k % 2 else "M. Roe") for k in range(6)]
    scholars = disambiguate(recs)
    again, merges = merge_pass(scholars, recs)
    assert merges == 0
    assert again == scholars


def test_iteration_cap():
    recs = [paper("p1", 2000, "J. Smith", "K. Lee"), paper("p2", 2003, "J. Smith", "K. Lee")]
    with pytest.raises(IterationLimitExceeded):
        disambiguate(recs, max_passes=1)


def test_json_round_trip_and_export(tmp_path):
    recs = [paper("p1", 2000, "J. Smith", "K. Lee"), paper("p2", 2003, "J. Smith", "K. Lee")]
    scholars = disambiguate(recs)
    assert scholars_from_json(scholars_to_json(scholars), recs) == scholars
    export_scholars(scholars, tmp_path / "scholars.csv")
    lines = (tmp_path / "scholars.csv").read_text().splitlines()
    assert lines[0] == "scholar_id,canonical_name,first_pub_year,n_papers"
    assert len(lines) == 1 + len(scholars)


_names = st.sampled_from(["A", "B", "C", "D"])
_affs = st.sampled_from([None, "U1", "U2", "U3"])


@st.composite
def corpora(draw):
    n = draw(st.integers(0, 12))
    recs = []
    for k in range(n):
        authors = draw(st.lists(st.tuples(_names, _affs), min_size=1, max_size=3))
        refs = draw(st.lists(st.sampled_from([f"p{j}" for j in range(n)]), max_size=2)) if n else []
        recs.append(paper(f"p{k}", 2000 + draw(st.integers(0, 10)), *authors, refs=refs))
    return recs


@settings(max_examples=60, deadline=None)
@given(corpora())
def test_partition_monotone_deterministic(recs):
    all_mentions = {(r.paper_id, k) for r in recs for k in range(len(r.authors))}
    scholars = initial_split(recs)
    counts = [len(scholars)]
    while True:
        covered = [m for s in scholars for m in s.mention_ids]
        assert len(covered) == len(set(covered)) and set(covered) == all_mentions
        for s in scholars:
            assert list(s.paper_years) == sorted(s.paper_years)
        scholars, merges = merge_pass(scholars, recs)
        counts.append(len(scholars))
        if merges == 0:
            break
    assert counts == sorted(counts, reverse=True)
    assert disambiguate(recs) == disambiguate(list(recs))
