"""Splitting, classification metrics and the planted synthetic corpus."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import AuthorMention, GroundTruthPair, PublicationRecord
from .errors import EmptySplit, LengthMismatch


@dataclass(frozen=True)
class SplitSpec:
    """Pairs whose first joint paper falls in ``train_years`` (inclusive) train, the rest test.

    With ``random_fraction`` set, a seeded random split with that training
    share is used instead.
    """

    train_years: tuple = (2000, 2006)
    random_fraction: Optional[float] = None
    seed: int = 0


def split(items, spec: SplitSpec = SplitSpec(), year=lambda item: item.first_year):
    """Partition ``items`` into ``(train, test)`` lists; raises ``EmptySplit`` if either is empty."""
    items = list(items)
    if spec.random_fraction is not None:
        rng = np.random.default_rng(spec.seed)
        order = rng.permutation(len(items))
        n_train = int(round(spec.random_fraction * len(items)))
        chosen = set(order[:n_train].tolist())
        train = [it for k, it in enumerate(items) if k in chosen]
        test = [it for k, it in enumerate(items) if k not in chosen]
    else:
        lo, hi = spec.train_years
        train = [it for it in items if lo <= year(it) <= hi]
        test = [it for it in items if not lo <= year(it) <= hi]
    if not train:
        raise EmptySplit("training split is empty")
    if not test:
        raise EmptySplit("test split is empty")
    return train, test


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn")}


def metrics(predictions, labels, threshold: float = 0.5) -> MetricsReport:
    """Accuracy, precision, recall and F1 of ``predictions >= threshold``; 0/0 counts as 0."""
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise LengthMismatch(f"{p.shape[0] if p.ndim else 0} predictions vs {y.shape[0] if y.ndim else 0} labels")
    pred = p >= threshold
    truth = y == 1
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    tn = int(np.sum(~pred & ~truth))
    fn = int(np.sum(~pred & truth))
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricsReport(accuracy, precision, recall, f1, tp, fp, tn, fn)


METRIC_COLUMNS = ["accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn"]


def reports_csv(rows, key: str = "value") -> str:
    """CSV with one row per ``(value, MetricsReport)``."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([key] + METRIC_COLUMNS)
    for value, rep in rows:
        d = rep.as_dict()
        writer.writerow([value] + [repr(d[c]) if isinstance(d[c], float) else d[c] for c in METRIC_COLUMNS])
    return buf.getvalue()


def reports_dat(rows, key: str = "value") -> str:
    """Whitespace-separated table readable by gnuplot."""
    lines = ["# " + " ".join([key] + METRIC_COLUMNS[:4])]
    for k, (value, rep) in enumerate(rows):
        x = value if isinstance(value, (int, float)) else k
        lines.append(" ".join(str(v) for v in [x, rep.accuracy, rep.precision, rep.recall, rep.f1]))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs of the planted advisor corpus.

    Each advisee publishes first with their advisor, who is older
    (``advisor_age_offset`` years), more productive (``advisor_pub_rate`` vs
    ``junior_pub_rate`` papers a year), shares the advisee's institution and
    co-authors intensely (``early_collab_rate`` papers a year) during the
    first ``supervision_years`` with the advisee first and the advisor last.

    The other collaborators are peers (junior, sporadic, same institution
    half the time), senior outsiders (productive, sporadic) and, with
    probability ``confounder_rate``, confounders that copy the advisor's
    seniority and collaboration pattern from another institution.  ``noise``
    is the probability that an advisor sits elsewhere or a confounder shares
    the advisee's institution.
    """

    n_advisees: int = 500
    collaborators_per_advisee: int = 8
    field: str = "computer_science"
    start_years: tuple = (2000, 2010)
    horizon_years: int = 8
    advisor_age_offset: tuple = (8, 25)
    advisor_pub_rate: float = 1.5
    junior_pub_rate: float = 0.6
    early_collab_rate: float = 2.0
    late_collab_rate: float = 0.3
    supervision_years: int = 5
    confounder_rate: float = 0.5
    noise: float = 0.05
    seed: int = 0


class _Corpus:
    def __init__(self, field):
        self.field = field
        self.records = []

    def add(self, year, authors):
        pid = f"P{len(self.records):07d}"
        self.records.append(PublicationRecord(
            paper_id=pid,
            title=f"Synthetic paper {len(self.records)}",
            year=int(year),
            field=self.field,
            authors=tuple(AuthorMention(n, a) for n, a in authors),
        ))

    def solo_papers(self, rng, person, first_year, last_year, rate):
        """Solo output of ``person`` over ``[first_year, last_year]``, at least one paper in the first year."""
        for year in range(first_year, last_year + 1):
            n = int(rng.poisson(rate))
            if year == first_year:
                n = max(n, 1)
            for _ in range(n):
                self.add(year, [person])


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()):
    """Planted corpus; returns ``(records, ground_truth)``.  Deterministic per ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    corpus = _Corpus(spec.field)
    truth = []
    lo_age, hi_age = spec.advisor_age_offset
    for k in range(spec.n_advisees):
        y0 = int(rng.integers(spec.start_years[0], spec.start_years[1] + 1))
        end = y0 + spec.horizon_years
        home = f"Institute {k:04d}"
        advisee = (f"Student {k:04d}", home)
        advisor_home = home if rng.random() >= spec.noise else f"Elsewhere {k:04d}"
        advisor = (f"Professor {k:04d}", advisor_home)
        age = int(rng.integers(lo_age, hi_age + 1))
        corpus.solo_papers(rng, advisor, y0 - age, end, spec.advisor_pub_rate)
        _supervision(corpus, rng, spec, advisee, advisor, y0)
        truth.append(GroundTruthPair(advisee[0], advisor[0], spec.field, y0))

        for c in range(spec.collaborators_per_advisee - 1):
            tag = f"{k:04d}-{c}"
            draw = rng.random()
            if draw < spec.confounder_rate:
                org = home if rng.random() < spec.noise else f"Lab {tag}"
                person = (f"Mentor {tag}", org)
                age = int(rng.integers(lo_age, hi_age + 1))
                corpus.solo_papers(rng, person, y0 - age, end, spec.advisor_pub_rate)
                _supervision(corpus, rng, spec, advisee, person, y0)
            elif draw < spec.confounder_rate + (1 - spec.confounder_rate) / 2:
                org = home if rng.random() < 0.5 else f"Campus {tag}"
                person = (f"Peer {tag}", org)
                start = y0 + int(rng.integers(-2, 3))
                corpus.solo_papers(rng, person, start, end, spec.junior_pub_rate)
                for year in _sporadic_years(rng, max(start, y0), end, 1, 3):
                    pair = [advisee, person] if rng.random() < 0.5 else [person, advisee]
                    corpus.add(year, pair)
            else:
                person = (f"Senior {tag}", f"Center {tag}")
                age = int(rng.integers(lo_age, hi_age + 1))
                corpus.solo_papers(rng, person, y0 - age, end, spec.advisor_pub_rate)
                for year in _sporadic_years(rng, y0 + 1, end, 1, 2):
                    corpus.add(year, [person, advisee])
        # some of the advisee's own later output
        for year in range(y0 + spec.supervision_years, end + 1):
            for _ in range(int(rng.poisson(spec.junior_pub_rate))):
                corpus.add(year, [advisee])
    return corpus.records, truth


def _supervision(corpus, rng, spec, advisee, mentor, y0):
    """Dense early co-authorship: advisee first, mentor last."""
    for year in range(y0, y0 + spec.supervision_years):
        n = int(rng.poisson(spec.early_collab_rate))
        if year == y0:
            n = max(n, 1)
        for _ in range(n):
            corpus.add(year, [advisee, mentor])
    for year in range(y0 + spec.supervision_years, y0 + spec.horizon_years + 1):
        for _ in range(int(rng.poisson(spec.late_collab_rate))):
            corpus.add(year, [advisee, mentor])


def _sporadic_years(rng, first, last, lo, hi):
    n = int(rng.integers(lo, hi + 1))
    return sorted(int(y) for y in rng.integers(first, last + 1, size=n))
