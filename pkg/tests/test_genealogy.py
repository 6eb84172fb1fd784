import re
from types import SimpleNamespace

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genealogy_miner.errors import ConfigError, DataError, ParseError
from genealogy_miner.genealogy import (
    EligibilityRule,
    GenealogyRecord,
    export_genealogy,
    filter_scholars,
    generate_genealogy,
    load_genealogy,
)
from genealogy_miner.model import Shifu2Config, Shifu2Model, train


def scholar(sid, years):
    return SimpleNamespace(scholar_id=sid, paper_years=tuple(sorted(years)))


def test_eligibility_examples():
    rule = EligibilityRule()
    assert not rule.accepts([2000, 2001, 2002, 2004, 2005, 2007, 2009, 2010, 2011])  # 9 papers, 12 years
    silent = list(range(2000, 2008)) + [2014] + list(range(2015, 2021))  # 2007 -> 2014
    assert len(silent) == 15
    assert not rule.accepts(silent)
    assert rule.accepts(range(2000, 2012))
    assert not rule.accepts(list(range(2000, 2009)) + [2008])  # 10 papers, 9-year span
    assert rule.accepts(list(range(2000, 2010)))
    assert not rule.accepts([2000] * 20)  # one-year career


def test_eligibility_thresholds_positive():
    with pytest.raises(ConfigError):
        EligibilityRule(min_papers=0)


careers = st.lists(st.integers(1990, 2020), min_size=0, max_size=25)


@given(st.lists(careers, max_size=8), st.integers(1, 12), st.integers(1, 6), st.integers(1, 12),
       st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_filter_is_monotone(career_list, papers, gap, span, d_papers, d_gap, d_span):
    people = [scholar(k, c) for k, c in enumerate(career_list)]
    strict = EligibilityRule(papers + d_papers, gap, span + d_span)
    loose = EligibilityRule(papers, gap + d_gap, span)
    kept_strict = {s.scholar_id for s in filter_scholars(people, strict)}
    kept_loose = {s.scholar_id for s in filter_scholars(people, loose)}
    assert kept_strict <= kept_loose


@pytest.fixture(scope="module")
def tiny_model(small_samples):
    cfg = Shifu2Config(pool_dim=20, node_layers=(10, 5), edge_layers=(18, 10), pretrain_epochs=5, max_epochs=5)
    model, _ = train(Shifu2Model(cfg), small_samples)
    return model


def test_threshold_one_is_empty(tiny_model, small_dataset):
    g = small_dataset.graph
    assert generate_genealogy(tiny_model, g, g.scholars, threshold=1.0, corrections=small_dataset.corrections) == []


def test_threshold_zero_covers_everyone_with_collaborators(tiny_model, small_dataset):
    g = small_dataset.graph
    eligible = g.scholars[:80]
    out = generate_genealogy(tiny_model, g, eligible, threshold=0.0, corrections=small_dataset.corrections)
    with_collab = [s for s in eligible if len(g.neighbors[g.node_of[s.scholar_id]]) > 0]
    assert [r.advisee_id for r in out] == [s.scholar_id for s in with_collab]
    keys = [(r.advisee_id, r.field) for r in out]
    assert len(keys) == len(set(keys))
    for r in out:
        node = g.node_of[r.advisee_id]
        assert g.node_of[r.advisor_id] in set(g.neighbors[node].tolist())
        assert 0.0 < r.probability < 1.0
        assert r.first_coauthor_year == g.first_coauthor_year(node, g.node_of[r.advisor_id])


def test_top_k(tiny_model, small_dataset):
    g = small_dataset.graph
    out = generate_genealogy(tiny_model, g, g.scholars[:30], threshold=0.0, top_k=3,
                             corrections=small_dataset.corrections)
    for sid in {r.advisee_id for r in out}:
        probs = [r.probability for r in out if r.advisee_id == sid]
        assert 1 <= len(probs) <= 3
        assert probs == sorted(probs, reverse=True)
    with pytest.raises(ConfigError):
        generate_genealogy(tiny_model, g, [], top_k=0)


RECORDS = [GenealogyRecord(5, 2, 0.875, 2003, "physics"), GenealogyRecord(9, 2, 0.61, 2007, "physics")]


def test_csv_round_trip(tmp_path):
    path = tmp_path / "genealogy.csv"
    export_genealogy(RECORDS, path, "csv")
    assert path.read_text().splitlines()[0] == "advisee_id,advisor_id,probability,first_coauthor_year,field"
    assert load_genealogy(path) == RECORDS
    export_genealogy([], path, "csv")
    assert load_genealogy(path) == []


def test_dot_single_record(tmp_path):
    path = tmp_path / "g.dot"
    export_genealogy(RECORDS[:1], path, "dot", names={2: "Ada", 5: "Bo"})
    text = path.read_text()
    assert text.startswith("digraph")
    assert len(re.findall(r"^\s+\"\d+\"( \[label=[^\]]+\])?;$", text, re.M)) == 2
    assert re.findall(r'"(\d+)" -> "(\d+)"', text) == [("2", "5")]
    assert "probability=0.875" in text


def test_graphml_validates(tmp_path):
    path = tmp_path / "g.graphml"
    export_genealogy(RECORDS, path, "graphml", names={2: "Ada"})
    g = nx.read_graphml(path)
    assert g.is_directed()
    assert sorted(g.edges()) == [("2", "5"), ("2", "9")]
    assert g.edges["2", "5"]["probability"] == 0.875
    assert g.edges["2", "9"]["first_coauthor_year"] == 2007
    assert g.nodes["2"]["name"] == "Ada"


def test_export_errors(tmp_path):
    with pytest.raises(DataError):
        export_genealogy([], tmp_path / "g.dot", "dot")
    with pytest.raises(ConfigError):
        export_genealogy(RECORDS, tmp_path / "g.png", "png")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        load_genealogy(bad)
