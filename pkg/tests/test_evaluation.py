import dataclasses
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from genealogy_miner.errors import EmptySplit, LengthMismatch
from genealogy_miner.evaluation import (
    MetricsReport,
    SplitSpec,
    SyntheticSpec,
    generate_synthetic,
    metrics,
    reports_csv,
    reports_dat,
    split,
)
from genealogy_miner.model import Shifu2Config
from genealogy_miner.pipeline import (
    EDGE_LAYER_GROUPS,
    NODE_LAYER_GROUPS,
    dataset_samples,
    prepare_dataset,
    run_experiment,
    subsample,
    sweep,
    sweep_config,
)
from genealogy_miner.samples import stack


def item(year):
    return SimpleNamespace(first_year=year)


def test_year_split_rule():
    train, test = split([item(2004), item(2008)])
    assert [i.first_year for i in train] == [2004]
    assert [i.first_year for i in test] == [2008]


def test_empty_split():
    with pytest.raises(EmptySplit):
        split([item(2003), item(2003)])


@given(st.lists(st.integers(1995, 2012), min_size=0, max_size=40), st.none() | st.floats(0.1, 0.9))
def test_split_is_a_partition(years, fraction):
    items = [item(y) for y in years]
    try:
        train, test = split(items, SplitSpec(random_fraction=fraction, seed=1))
    except EmptySplit:
        return
    assert sorted(map(id, train + test)) == sorted(map(id, items))
    assert not set(map(id, train)) & set(map(id, test))
    assert split(items, SplitSpec(random_fraction=fraction, seed=1)) == (train, test)


def test_metrics_examples():
    perfect = metrics([0.9, 0.1, 0.7], [1, 0, 1])
    assert (perfect.accuracy, perfect.precision, perfect.recall, perfect.f1) == (1.0, 1.0, 1.0, 1.0)
    preds = [1] * 9 + [0] * 9 + [1] + [0]
    labels = [1] * 9 + [0] * 9 + [0] + [1]
    r = metrics(preds, labels)
    assert (r.tp, r.tn, r.fp, r.fn) == (9, 9, 1, 1)
    assert r.accuracy == r.precision == r.recall == pytest.approx(0.9)
    assert r.f1 == pytest.approx(0.9)
    none = metrics([0.1, 0.2], [1, 0])
    assert (none.precision, none.recall, none.f1) == (0.0, 0.0, 0.0)
    assert metrics([0.5], [1]).tp == 1


def test_metrics_length_mismatch():
    with pytest.raises(LengthMismatch):
        metrics([0.5, 0.5], [1])


@given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=50), st.randoms())
def test_metrics_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a = metrics([p for p, _ in pairs], [y for _, y in pairs])
    b = metrics([p for p, _ in shuffled], [y for _, y in shuffled])
    assert a == b
    assert a.accuracy == (a.tp + a.tn) / len(pairs)
    assert 0.0 <= a.f1 <= 1.0


def test_report_formats():
    rows = [(0.2, MetricsReport(0.9, 0.8, 0.7, 0.75, 1, 2, 3, 4)), (0.4, MetricsReport(1.0, 1.0, 1.0, 1.0, 5, 0, 5, 0))]
    lines = reports_csv(rows, key="train_fraction").splitlines()
    assert lines[0] == "train_fraction,accuracy,precision,recall,f1,tp,fp,tn,fn"
    assert lines[1] == "0.2,0.9,0.8,0.7,0.75,1,2,3,4"
    dat = reports_dat(rows).splitlines()
    assert dat[0].startswith("#")
    assert dat[2].split() == ["0.4", "1.0", "1.0", "1.0", "1.0"]


def test_generator_is_deterministic():
    spec = SyntheticSpec(n_advisees=20, seed=7)
    assert generate_synthetic(spec) == generate_synthetic(spec)
    assert generate_synthetic(spec) != generate_synthetic(dataclasses.replace(spec, seed=8))


def test_one_planted_advisor_each(small_corpus):
    _, truth = small_corpus
    advisees = [t.advisee_name for t in truth]
    assert len(advisees) == len(set(advisees)) == 60


def test_planted_advisors_are_older(small_dataset, small_samples):
    positives = [s for s in small_samples if s.label == 1]
    assert len(positives) == 60
    for s in positives:
        aa_advisee, aa_advisor = s.node_attr[0], s.node_attr[1]
        assert aa_advisor > aa_advisee


def test_noise_free_corpus_is_linearly_separable():
    records, truth = generate_synthetic(SyntheticSpec(n_advisees=80, noise=0.0, seed=2))
    samples = dataset_samples(prepare_dataset(records, truth, seed=2), Shifu2Config(pool_dim=10))
    node, _, edge, y, _ = stack(samples)
    X = np.hstack([node, edge])
    X = (X - X.min(0)) / np.where(np.ptp(X, 0) > 0, np.ptp(X, 0), 1)
    X = np.hstack([X, np.ones((len(X), 1))])
    sign = 2 * y - 1
    # lightly regularized logistic regression
    loss = lambda w: np.sum(np.logaddexp(0, -sign * (X @ w))) + 1e-4 * w @ w
    grad = lambda w: -X.T @ (sign / (1 + np.exp(sign * (X @ w)))) + 2e-4 * w
    w = minimize(loss, np.zeros(X.shape[1]), jac=grad, method="L-BFGS-B").x
    assert np.mean((X @ w > 0) == (y == 1)) >= 0.99


def test_subsample_is_stratified(small_samples):
    part = subsample(small_samples, 0.25, seed=0)
    pos = sum(s.label for s in part)
    assert pos == round(0.25 * 60)
    assert len(part) - pos == round(0.25 * 60)
    assert subsample(small_samples, 1.0, 0) == small_samples


def test_sweep_configs():
    base = Shifu2Config()
    assert sweep_config("node_depth", 2, base).node_layers == NODE_LAYER_GROUPS[2]
    assert sweep_config("edge_depth", 4, base).edge_layers == EDGE_LAYER_GROUPS[4]
    embed = sweep_config("embed_dim", 64, base)
    assert embed.node_layers[-1] == embed.edge_layers[-1] == 64
    assert sweep_config("feature_window", 3, base).feature_window == 3
    with pytest.raises(ValueError):
        sweep_config("colour", 1, base)


def test_sweep_row_equals_direct_run(small_dataset, small_samples):
    cfg = Shifu2Config(pool_dim=20, node_layers=(10, 5), edge_layers=(18, 10), pretrain_epochs=3, max_epochs=3)
    rows = sweep("learning_rate", [0.01], cfg, small_dataset)
    direct = run_experiment(small_samples, cfg)
    assert rows == [(0.01, direct.report)]
    with pytest.raises(ValueError):
        sweep("learning_rate", [], cfg, small_dataset)
