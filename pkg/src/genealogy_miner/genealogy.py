"""Apply a trained model across a corpus and export the resulting genealogy."""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from .corpus import atomic_write_text
from .errors import ConfigError, DataError, ParseError
from .model import identify_advisor

GENEALOGY_HEADER = ["advisee_id", "advisor_id", "probability", "first_coauthor_year", "field"]
EXPORT_FORMATS = ("csv", "dot", "graphml")


@dataclass(frozen=True)
class EligibilityRule:
    """Career filter applied before inference.

    A scholar qualifies with at least ``min_papers`` papers, no silence longer
    than ``max_gap_years`` between consecutive papers, and a career covering
    at least ``min_span_years`` calendar years (first and last year included).
    """

    min_papers: int = 10
    max_gap_years: int = 5
    min_span_years: int = 10

    def __post_init__(self):
        for name in ("min_papers", "max_gap_years", "min_span_years"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    def accepts(self, paper_years) -> bool:
        years = sorted(paper_years)
        if len(years) < self.min_papers:
            return False
        if years[-1] - years[0] + 1 < self.min_span_years:
            return False
        return all(b - a <= self.max_gap_years for a, b in zip(years, years[1:]))


def filter_scholars(scholars, rule: EligibilityRule = EligibilityRule()) -> list:
    return [s for s in scholars if rule.accepts(s.paper_years)]


@dataclass(frozen=True)
class GenealogyRecord:
    advisee_id: int
    advisor_id: int
    probability: float
    first_coauthor_year: int
    field: str

    def row(self) -> list:
        return [self.advisee_id, self.advisor_id, repr(float(self.probability)), self.first_coauthor_year, self.field]


def generate_genealogy(model, graph, eligible, threshold: float = 0.5, top_k: int = 1,
                       corrections=None) -> list:
    """Score the collaborators of every eligible scholar and keep the best.

    ``top_k=1`` emits at most one advisor per advisee; larger values emit up
    to ``top_k`` candidates at or above ``threshold``.  Scholars missing from
    the graph or without collaborators are skipped.  Records are ordered by
    advisee id, then by descending probability.
    """
    if top_k < 1:
        raise ConfigError("top_k must be at least 1")
    out = []
    for scholar in sorted(eligible, key=lambda s: s.scholar_id):
        node = graph.node_of.get(scholar.scholar_id)
        if node is None or len(graph.neighbors[node]) == 0:
            continue
        ranked = identify_advisor(model, graph, scholar.scholar_id, corrections)
        for cand, prob in ranked[:top_k]:
            if prob < threshold:
                break
            year = graph.first_coauthor_year(node, graph.node_of[cand])
            out.append(GenealogyRecord(scholar.scholar_id, cand, prob, year, graph.field_of[node]))
    return out


def genealogy_csv(records) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GENEALOGY_HEADER)
    for rec in records:
        writer.writerow(rec.row())
    return buf.getvalue()


def _dot_id(value) -> str:
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def genealogy_dot(records, names=None) -> str:
    """Directed advisor -> advisee graph in DOT; ``names`` maps scholar id to a label."""
    lines = ["digraph genealogy {"]
    nodes = sorted({r.advisor_id for r in records} | {r.advisee_id for r in records})
    for n in nodes:
        label = f" [label={_dot_id(names[n])}]" if names and n in names else ""
        lines.append(f"  {_dot_id(n)}{label};")
    for r in records:
        lines.append(
            f"  {_dot_id(r.advisor_id)} -> {_dot_id(r.advisee_id)} "
            f"[probability={float(r.probability)!r}, first_coauthor_year={r.first_coauthor_year}, "
            f"field={_dot_id(r.field)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"
_EDGE_KEYS = (("probability", "double"), ("first_coauthor_year", "int"), ("field", "string"))


def genealogy_graphml(records, names=None) -> str:
    ET.register_namespace("", _GRAPHML_NS)
    root = ET.Element(f"{{{_GRAPHML_NS}}}graphml")
    ET.SubElement(root, f"{{{_GRAPHML_NS}}}key", {"id": "name", "for": "node", "attr.name": "name",
                                                   "attr.type": "string"})
    for key, kind in _EDGE_KEYS:
        ET.SubElement(root, f"{{{_GRAPHML_NS}}}key", {"id": key, "for": "edge", "attr.name": key,
                                                       "attr.type": kind})
    graph = ET.SubElement(root, f"{{{_GRAPHML_NS}}}graph", {"id": "genealogy", "edgedefault": "directed"})
    nodes = sorted({r.advisor_id for r in records} | {r.advisee_id for r in records})
    for n in nodes:
        node = ET.SubElement(graph, f"{{{_GRAPHML_NS}}}node", {"id": str(n)})
        if names and n in names:
            ET.SubElement(node, f"{{{_GRAPHML_NS}}}data", {"key": "name"}).text = str(names[n])
    for k, r in enumerate(records):
        edge = ET.SubElement(graph, f"{{{_GRAPHML_NS}}}edge",
                             {"id": f"e{k}", "source": str(r.advisor_id), "target": str(r.advisee_id)})
        values = (repr(float(r.probability)), str(r.first_coauthor_year), r.field)
        for (key, _), value in zip(_EDGE_KEYS, values):
            ET.SubElement(edge, f"{{{_GRAPHML_NS}}}data", {"key": key}).text = value
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def export_genealogy(records, path, format: str = "csv", names=None) -> None:
    """Write ``records`` atomically; graph formats need at least one record."""
    if format not in EXPORT_FORMATS:
        raise ConfigError(f"unknown export format {format!r}; expected one of {EXPORT_FORMATS}")
    if format == "csv":
        text = genealogy_csv(records)
    elif not records:
        raise DataError("graph export needs at least one record")
    elif format == "dot":
        text = genealogy_dot(records, names)
    else:
        text = genealogy_graphml(records, names)
    atomic_write_text(Path(path), text)


def load_genealogy(path) -> list:
    """Read a genealogy CSV written by :func:`export_genealogy`."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GENEALOGY_HEADER:
            raise ParseError(f"expected header {','.join(GENEALOGY_HEADER)}", line=1)
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                advisee, advisor, prob, year, field_name = row
                out.append(GenealogyRecord(int(advisee), int(advisor), float(prob), int(year), field_name))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    return out
