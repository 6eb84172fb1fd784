"""Joint node/edge autoencoder with a logistic head for advisor classification.

The node autoencoder reconstructs ``[scaled node attributes || pooled
adjacency]`` under a penalty mask; the edge autoencoder reconstructs the 18
scaled edge attributes with dropout on its hidden layers.  The head reads the
concatenated encoder outputs.  Per batch the objective is::

    L_sum = L_a + L_e + beta * L_lr + alpha * (R_edge + gamma * R_node)

with reconstruction losses and ``L_lr = |y - p|`` averaged over the batch and
``R`` the squared Frobenius norm of every weight and bias of an autoencoder
(or the plain sum of entries with ``regularizer="literal"``).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import nn
from .corpus import atomic_write_bytes, atomic_write_text
from .errors import DegenerateDataset, NoCollaborators, NonFiniteLoss, ShapeMismatch, UnlabeledSample
from .graph import EDGE_DIM
from .samples import FeatureScaler, make_sample, node_attr_dim, stack

log = logging.getLogger(__name__)

LOG_HEADER = ["epoch", "L_a", "L_e", "L_lr", "L_sum", "train_acc", "L_reg"]


@dataclass
class Shifu2Config:
    pool_dim: int = 1000
    node_layers: tuple = (2000, 1000, 500)
    edge_layers: tuple = (18, 50)
    alpha: float = 1e-4
    beta: float = 1.0
    gamma: float = 0.01
    learning_rate: float = 0.01
    pretrain_rate: float = 0.01
    pretrain_epochs: int = 20
    rho: float = 5.0
    dropout: float = 0.2
    batch_size: int = 64
    max_epochs: int = 1000
    convergence_eps: float = 1e-5
    patience: int = 5
    seed: int = 0
    use_node_autoencoder: bool = True
    regularizer: str = "squared"
    org_buckets: int = 0
    feature_window: Optional[int] = None

    def __post_init__(self):
        self.node_layers = tuple(int(u) for u in self.node_layers)
        self.edge_layers = tuple(int(u) for u in self.edge_layers)
        if self.pool_dim < 1:
            raise ValueError("pool_dim must be at least 1")
        if not self.edge_layers or (self.use_node_autoencoder and not self.node_layers):
            raise ValueError("each autoencoder needs at least one hidden layer")
        if self.regularizer not in ("squared", "literal"):
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        if self.rho < 1:
            raise ValueError("rho must be >= 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["node_layers"] = list(self.node_layers)
        d["edge_layers"] = list(self.edge_layers)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Shifu2Config":
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class EpochLog:
    epoch: int
    L_a: float
    L_e: float
    L_lr: float
    L_reg: float
    L_sum: float
    train_acc: float


def _reg_value(stack_, kind):
    if kind == "squared":
        return sum(float(np.sum(l.W * l.W) + np.sum(l.b * l.b)) for l in stack_)
    return sum(float(np.sum(l.W) + np.sum(l.b)) for l in stack_)


def _reg_grads(stack_, kind, scale):
    if kind == "squared":
        return [(2.0 * scale * l.W, 2.0 * scale * l.b) for l in stack_]
    return [(np.full_like(l.W, scale), np.full_like(l.b, scale)) for l in stack_]


class Shifu2Model:
    """Parameters of both autoencoders, the head and the feature scaler."""

    def __init__(self, config: Shifu2Config, node_dim: Optional[int] = None, edge_dim: int = EDGE_DIM):
        self.config = config
        self.node_dim = node_attr_dim(config.org_buckets) if node_dim is None else node_dim
        self.edge_dim = edge_dim
        self.scaler: Optional[FeatureScaler] = None
        rng = np.random.default_rng(config.seed)
        self.node_enc, self.node_dec = [], []
        if config.use_node_autoencoder:
            dims = [self.node_input_dim, *config.node_layers]
            self.node_enc = nn.build_stack(dims, rng)
            self.node_dec = nn.build_stack(dims[::-1], rng)
        dims = [edge_dim, *config.edge_layers]
        self.edge_enc = nn.build_stack(dims, rng)
        self.edge_dec = nn.build_stack(dims[::-1], rng)
        self.head_W = np.zeros(self.embed_dim)
        self.head_b = np.zeros(1)

    @property
    def node_input_dim(self) -> int:
        return self.node_dim + self.config.pool_dim

    @property
    def embed_dim(self) -> int:
        node = self.config.node_layers[-1] if self.config.use_node_autoencoder else 0
        return node + self.config.edge_layers[-1]

    def parameters(self) -> list:
        out = []
        for s in (self.node_enc, self.node_dec, self.edge_enc, self.edge_dec):
            for layer in s:
                out.extend(layer.params())
        out.extend([self.head_W, self.head_b])
        return out

    def node_parameters(self) -> list:
        return [p for l in self.node_enc + self.node_dec for p in l.params()]

    def edge_parameters(self) -> list:
        return [p for l in self.edge_enc + self.edge_dec for p in l.params()]

    # ------------------------------------------------------------------ inputs

    def prepare(self, samples):
        """Scaled ``(node_input, edge_input, labels)`` arrays for ``samples``."""
        if self.scaler is None:
            raise RuntimeError("model has no fitted feature scaler")
        node_attr, pooled, edge_attr, labels, fields = stack(samples)
        if node_attr.shape[1] != self.node_dim or edge_attr.shape[1] != self.edge_dim:
            raise ShapeMismatch("sample feature widths do not match the model")
        if self.config.use_node_autoencoder and pooled.shape[1] != self.config.pool_dim:
            raise ShapeMismatch(f"pooled width {pooled.shape[1]} != pool_dim {self.config.pool_dim}")
        n_norm, e_norm = self.scaler.transform(node_attr, edge_attr, fields)
        return np.hstack([n_norm, pooled]), e_norm, labels

    def fit_scaler(self, samples):
        node_attr, _, edge_attr, _, fields = stack(samples)
        self.scaler = FeatureScaler(self.node_dim, self.edge_dim).fit(node_attr, edge_attr, fields)

    # ------------------------------------------------------------- objective

    def embed(self, Xn, Xe, rng=None):
        """Forward pass; returns everything the loss and its gradient need."""
        cfg = self.config
        out = {}
        parts = []
        if cfg.use_node_autoencoder:
            hn, out["cn"] = nn.forward(self.node_enc, Xn)
            out["rn"], out["cdn"] = nn.forward(self.node_dec, hn)
            parts.append(hn)
        he, out["ce"] = nn.forward(self.edge_enc, Xe, cfg.dropout, rng)
        out["re"], out["cde"] = nn.forward(self.edge_dec, he)
        parts.append(he)
        out["D"] = np.hstack(parts)
        out["p"] = nn.sigmoid(out["D"] @ self.head_W + self.head_b[0])
        return out

    def losses(self, Xn, Xe, y, rng=None, fwd=None) -> dict:
        """Loss components averaged over the batch (``L_reg`` is not averaged)."""
        cfg = self.config
        fwd = fwd or self.embed(Xn, Xe, rng)
        n = Xe.shape[0]
        penalty = nn.PenaltyMatrix(cfg.rho)
        L_a = nn.penalized_recon_loss(Xn, fwd["rn"], penalty) / n if cfg.use_node_autoencoder else 0.0
        L_e = nn.recon_loss(Xe, fwd["re"]) / n
        L_lr = float(np.mean(np.abs(y - fwd["p"])))
        R_edge = _reg_value(self.edge_enc + self.edge_dec, cfg.regularizer)
        R_node = _reg_value(self.node_enc + self.node_dec, cfg.regularizer)
        L_reg = cfg.alpha * (R_edge + cfg.gamma * R_node)
        return {
            "L_a": L_a, "L_e": L_e, "L_lr": L_lr, "L_reg": L_reg,
            "L_sum": L_a + L_e + cfg.beta * L_lr + L_reg, "p": fwd["p"],
        }

    def loss_and_grads(self, Xn, Xe, y, rng=None):
        """Joint loss components and gradients aligned with ``parameters()``."""
        cfg = self.config
        if np.any((y != 0) & (y != 1)):
            raise UnlabeledSample("classifier loss needs labels in {0, 1}")
        fwd = self.embed(Xn, Xe, rng)
        comps = self.losses(Xn, Xe, y, fwd=fwd)
        n = Xe.shape[0]
        p = fwd["p"]
        dn = cfg.node_layers[-1] if cfg.use_node_autoencoder else 0

        # d|y - p|/dp = sign(p - y), zero at the kink
        ds = cfg.beta * np.sign(p - y) * p * (1.0 - p) / n
        gW = fwd["D"].T @ ds
        gb = np.array([ds.sum()])
        dD = np.outer(ds, self.head_W)

        grads_node = []
        if cfg.use_node_autoencoder:
            g_rn = nn.penalized_recon_grad(Xn, fwd["rn"], nn.PenaltyMatrix(cfg.rho)) / n
            g_dec, g_hn = nn.backward(self.node_dec, fwd["cdn"], g_rn)
            g_enc, _ = nn.backward(self.node_enc, fwd["cn"], g_hn + dD[:, :dn])
            grads_node = g_enc + g_dec
        g_re = nn.recon_grad(Xe, fwd["re"]) / n
        g_dec, g_he = nn.backward(self.edge_dec, fwd["cde"], g_re)
        g_enc, _ = nn.backward(self.edge_enc, fwd["ce"], g_he + dD[:, dn:])
        grads_edge = g_enc + g_dec

        grads_node = _add_reg(grads_node, self.node_enc + self.node_dec, cfg.regularizer, cfg.alpha * cfg.gamma)
        grads_edge = _add_reg(grads_edge, self.edge_enc + self.edge_dec, cfg.regularizer, cfg.alpha)
        grads = [g for pair in grads_node + grads_edge for g in pair] + [gW, gb]
        return comps, grads

    # ------------------------------------------------------------- inference

    def predict_proba(self, samples) -> np.ndarray:
        if not samples:
            return np.zeros(0)
        Xn, Xe, _ = self.prepare(samples)
        return self.predict_arrays(Xn, Xe)

    def predict_arrays(self, Xn, Xe) -> np.ndarray:
        return self.embed(Xn, Xe, rng=None)["p"]

    # ------------------------------------------------------------ checkpoint

    def to_bytes(self) -> bytes:
        tensors = {}
        for name, s in (("node_enc", self.node_enc), ("node_dec", self.node_dec),
                        ("edge_enc", self.edge_enc), ("edge_dec", self.edge_dec)):
            for k, layer in enumerate(s):
                tensors[f"{name}.{k}.W"] = layer.W
                tensors[f"{name}.{k}.b"] = layer.b
        tensors["head.W"] = self.head_W
        tensors["head.b"] = self.head_b
        meta = {"config": self.config.to_dict(), "node_dim": self.node_dim, "edge_dim": self.edge_dim}
        if self.scaler is not None:
            tensors.update(self.scaler.to_tensors())
            meta["scaler_fields"] = self.scaler.field_names()
        return nn.dumps_tensors(tensors, meta)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Shifu2Model":
        tensors, meta = nn.loads_tensors(data)
        model = cls(Shifu2Config.from_dict(meta["config"]), meta["node_dim"], meta["edge_dim"])
        for name in ("node_enc", "node_dec", "edge_enc", "edge_dec"):
            for k, layer in enumerate(getattr(model, name)):
                layer.W = tensors[f"{name}.{k}.W"]
                layer.b = tensors[f"{name}.{k}.b"]
        model.head_W = tensors["head.W"]
        model.head_b = tensors["head.b"]
        if "scaler_fields" in meta:
            model.scaler = FeatureScaler.from_tensors(
                model.node_dim, model.edge_dim, meta["scaler_fields"], tensors)
        return model

    def save(self, path) -> None:
        atomic_write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path) -> "Shifu2Model":
        return cls.from_bytes(Path(path).read_bytes())


def predict_pair(model: Shifu2Model, sample) -> float:
    return float(model.predict_proba([sample])[0])


def _epoch_log(model, epoch, Xn, Xe, y) -> EpochLog:
    c = model.losses(Xn, Xe, y)
    acc = float(np.mean((c["p"] >= 0.5) == (y == 1)))
    entry = EpochLog(epoch, c["L_a"], c["L_e"], c["L_lr"], c["L_reg"], c["L_sum"], acc)
    if not np.isfinite(entry.L_sum):
        raise NonFiniteLoss(f"L_sum is not finite at epoch {epoch}")
    return entry


def _add_reg(grads, stack_, kind, scale):
    return [(w + rw, b + rb) for (w, b), (rw, rb) in zip(grads, _reg_grads(stack_, kind, scale))]


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def pretrain_autoencoder(enc, dec, X, cfg: Shifu2Config, rng, rho: float = 1.0, reg_scale: float = 0.0,
                         dropout: float = 0.0) -> None:
    """Fit one autoencoder alone on its (optionally penalized) reconstruction loss."""
    layers = enc + dec
    params = [p for l in layers for p in l.params()]
    state = nn.AdamState(alpha=cfg.pretrain_rate)
    penalty = nn.PenaltyMatrix(rho)
    for _ in range(cfg.pretrain_epochs):
        for idx in _batches(len(X), cfg.batch_size, rng):
            Xb = X[idx]
            h, c_enc = nn.forward(enc, Xb, dropout, rng)
            r, c_dec = nn.forward(dec, h)
            g_dec, g_h = nn.backward(dec, c_dec, nn.penalized_recon_grad(Xb, r, penalty) / len(idx))
            g_enc, _ = nn.backward(enc, c_enc, g_h)
            grads = _add_reg(g_enc + g_dec, layers, cfg.regularizer, reg_scale)
            nn.adam_step(params, [g for pair in grads for g in pair], state)


def train(model: Shifu2Model, samples, config: Optional[Shifu2Config] = None):
    """Pre-train both autoencoders, then train everything jointly.

    Returns ``(model, history)``.  ``history[0]`` is the untrained model;
    then one entry per joint epoch, each evaluated over the full training
    set in eval mode.  Joint training stops once the relative change of
    ``L_sum`` stays below ``convergence_eps`` for ``patience`` epochs or
    ``max_epochs`` is reached.
    """
    cfg = config or model.config
    labels = {s.label for s in samples}
    if None in labels:
        raise UnlabeledSample("training samples must be labeled")
    if labels != {0, 1}:
        raise DegenerateDataset("training needs both positive and negative samples")
    rng = np.random.default_rng(cfg.seed + 1)
    model.fit_scaler(samples)
    Xn, Xe, y = model.prepare(samples)
    history = [_epoch_log(model, 0, Xn, Xe, y)]

    if cfg.use_node_autoencoder:
        pretrain_autoencoder(model.node_enc, model.node_dec, Xn, cfg, rng, rho=cfg.rho,
                             reg_scale=cfg.alpha * cfg.gamma)
    pretrain_autoencoder(model.edge_enc, model.edge_dec, Xe, cfg, rng, reg_scale=cfg.alpha, dropout=cfg.dropout)
    log.debug("pre-training done: %s", _epoch_log(model, 0, Xn, Xe, y))

    params = model.parameters()
    state = nn.AdamState(alpha=cfg.learning_rate)
    calm = 0
    for epoch in range(1, cfg.max_epochs + 1):
        for idx in _batches(len(y), cfg.batch_size, rng):
            comps, grads = model.loss_and_grads(Xn[idx], Xe[idx], y[idx], rng=rng)
            if not np.isfinite(comps["L_sum"]):
                raise NonFiniteLoss(f"non-finite loss in epoch {epoch}")
            nn.adam_step(params, grads, state)
        entry = _epoch_log(model, epoch, Xn, Xe, y)
        prev = history[-1].L_sum
        history.append(entry)
        log.debug("epoch %d: %s", epoch, entry)
        if epoch > 1 and abs(prev - entry.L_sum) / max(abs(prev), 1e-300) < cfg.convergence_eps:
            calm += 1
            if calm >= cfg.patience:
                break
        else:
            calm = 0
    return model, history


def history_csv(history) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for h in history:
        writer.writerow([h.epoch, repr(h.L_a), repr(h.L_e), repr(h.L_lr), repr(h.L_sum), repr(h.train_acc), repr(h.L_reg)])
    return buf.getvalue()


def write_history(history, path) -> None:
    atomic_write_text(path, history_csv(history))


def identify_advisor(model: Shifu2Model, graph, advisee: int, corrections=None) -> list:
    """Score every collaborator of scholar ``advisee`` (a scholar id).

    Returns ``(candidate_scholar_id, probability)`` sorted by probability
    descending, ties by scholar id.
    """
    node = graph.node_of[advisee]
    neighbors = [int(nb) for nb in graph.neighbors[node]]
    if not neighbors:
        raise NoCollaborators(f"scholar {advisee} has no collaborators")
    cfg = model.config
    samples = [make_sample(graph, node, nb, cfg.pool_dim, corrections, None, cfg.org_buckets, cfg.feature_window)
               for nb in neighbors]
    probs = model.predict_proba(samples)
    ranked = [(s.candidate, float(p)) for s, p in zip(samples, probs)]
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked


def config_json(config: Shifu2Config) -> str:
    return json.dumps(config.to_dict(), sort_keys=True)
