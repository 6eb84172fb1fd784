import dataclasses

import numpy as np
import pytest

from genealogy_miner.errors import DegenerateDataset, NoCollaborators, ShapeMismatch, UnlabeledSample
from genealogy_miner.model import (
    LOG_HEADER,
    Shifu2Config,
    Shifu2Model,
    history_csv,
    identify_advisor,
    train,
)
from genealogy_miner.samples import PairSample

from oracles import model_gradient_error

TINY = Shifu2Config(pool_dim=6, node_layers=(7, 4), edge_layers=(18, 5), alpha=0.05, gamma=0.5,
                    pretrain_epochs=2, max_epochs=3, batch_size=8, seed=3)


def toy_samples(n=40, seed=0, pool_dim=6):
    """Samples whose label is the sign of one edge feature."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        edge = rng.random(18)
        label = int(edge[3] > 0.5)
        out.append(PairSample(k, 1000 + k, rng.random(5), rng.random(pool_dim) * (rng.random(pool_dim) < 0.3),
                              edge, label, "cs", 2000 + k % 10))
    return out


def fitted(config, samples):
    model = Shifu2Model(config)
    model.fit_scaler(samples)
    return model


@pytest.mark.parametrize("variant", [
    {},
    {"regularizer": "literal"},
    {"use_node_autoencoder": False},
    {"dropout": 0.0, "rho": 1.0},
])
def test_joint_gradient_matches_finite_differences(variant):
    cfg = dataclasses.replace(TINY, **variant)
    samples = toy_samples(12)
    model = fitted(cfg, samples)
    # move the head off zero so every path carries gradient
    model.head_W[:] = np.random.default_rng(1).normal(size=model.head_W.shape)
    Xn, Xe, y = model.prepare(samples)
    assert model_gradient_error(model, Xn, Xe, y, seed=4) < 1e-6


def test_components_sum_to_total():
    samples = toy_samples(20)
    model = fitted(TINY, samples)
    Xn, Xe, y = model.prepare(samples)
    c = model.losses(Xn, Xe, y)
    assert c["L_sum"] == pytest.approx(c["L_a"] + c["L_e"] + TINY.beta * c["L_lr"] + c["L_reg"], rel=1e-15)
    assert c["L_lr"] == pytest.approx(0.5)  # zero head gives p = 0.5


def test_regularizer_weights():
    model = fitted(TINY, toy_samples(4))
    Xn, Xe, y = model.prepare(toy_samples(4))
    r_edge = sum(np.sum(l.W ** 2) + np.sum(l.b ** 2) for l in model.edge_enc + model.edge_dec)
    r_node = sum(np.sum(l.W ** 2) + np.sum(l.b ** 2) for l in model.node_enc + model.node_dec)
    expected = TINY.alpha * (r_edge + TINY.gamma * r_node)
    assert model.losses(Xn, Xe, y)["L_reg"] == pytest.approx(expected, rel=1e-13)


def test_separable_toy_reaches_full_training_accuracy():
    cfg = dataclasses.replace(TINY, max_epochs=200, pretrain_epochs=5, learning_rate=0.01, alpha=1e-4,
                              gamma=0.01, convergence_eps=0.0)
    _, history = train(Shifu2Model(cfg), toy_samples(60))
    assert history[0].epoch == 0
    assert max(h.train_acc for h in history) == 1.0


def test_training_rejects_bad_labels():
    samples = toy_samples(10)
    with pytest.raises(DegenerateDataset):
        train(Shifu2Model(TINY), [dataclasses.replace(s, label=1) for s in samples])
    with pytest.raises(UnlabeledSample):
        train(Shifu2Model(TINY), samples[:-1] + [dataclasses.replace(samples[-1], label=None)])


def test_history_and_log_csv():
    _, history = train(Shifu2Model(TINY), toy_samples(20))
    assert len(history) == TINY.max_epochs + 1
    lines = history_csv(history).splitlines()
    assert lines[0].split(",") == LOG_HEADER
    assert len(lines) == len(history) + 1
    for h in history:
        assert h.L_sum == pytest.approx(h.L_a + h.L_e + TINY.beta * h.L_lr + h.L_reg, rel=1e-12)


def test_convergence_stops_early():
    cfg = dataclasses.replace(TINY, max_epochs=500, convergence_eps=1.0, patience=2)
    _, history = train(Shifu2Model(cfg), toy_samples(20))
    assert len(history) == 1 + 3


def test_checkpoint_round_trip(tmp_path):
    samples = toy_samples(20)
    model, _ = train(Shifu2Model(TINY), samples)
    model.save(tmp_path / "m.bin")
    back = Shifu2Model.load(tmp_path / "m.bin")
    assert back.to_bytes() == model.to_bytes()
    assert np.array_equal(back.predict_proba(samples), model.predict_proba(samples))
    assert back.config == model.config


def test_training_is_deterministic():
    a, ha = train(Shifu2Model(TINY), toy_samples(20))
    b, hb = train(Shifu2Model(TINY), toy_samples(20))
    assert a.to_bytes() == b.to_bytes()
    assert ha == hb


def test_prediction_checks():
    model = Shifu2Model(TINY)
    with pytest.raises(RuntimeError):
        model.predict_proba(toy_samples(2))
    model.fit_scaler(toy_samples(4))
    assert model.predict_proba([]).shape == (0,)
    with pytest.raises(ShapeMismatch):
        model.predict_proba(toy_samples(2, pool_dim=9))


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        Shifu2Config(pool_dim=0)
    with pytest.raises(ValueError):
        Shifu2Config(regularizer="l3")
    cfg = Shifu2Config(node_layers=[8, 4])
    assert Shifu2Config.from_dict(cfg.to_dict()) == cfg
    default = Shifu2Config()
    assert (default.pool_dim, default.node_layers, default.edge_layers) == (1000, (2000, 1000, 500), (18, 50))
    assert (default.gamma, default.beta, default.learning_rate) == (0.01, 1.0, 0.01)


def test_identify_advisor_ranks_collaborators(small_dataset, small_samples):
    cfg = Shifu2Config(pool_dim=20, node_layers=(10, 5), edge_layers=(18, 10), pretrain_epochs=3,
                       max_epochs=3, seed=0)
    model, _ = train(Shifu2Model(cfg), small_samples)
    g = small_dataset.graph
    advisee = small_samples[0].advisee
    ranked = identify_advisor(model, g, advisee, small_dataset.corrections)
    assert len(ranked) == len(g.neighbors[g.node_of[advisee]])
    probs = [p for _, p in ranked]
    assert probs == sorted(probs, reverse=True)
    lonely = next(s.scholar_id for s in g.scholars if len(g.neighbors[g.node_of[s.scholar_id]]) == 0) \
        if any(len(nb) == 0 for nb in g.neighbors) else None
    if lonely is not None:
        with pytest.raises(NoCollaborators):
            identify_advisor(model, g, lonely)
