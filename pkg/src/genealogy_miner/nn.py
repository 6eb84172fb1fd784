"""Dense layers, reconstruction losses, backprop, Adam and dropout in plain numpy.

Everything works on row-major batches: a batch ``X`` has shape
``(n_samples, in_dim)`` and a layer computes ``f(X @ W.T + b)``.  A single
vector is treated as a batch of one.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .errors import ShapeMismatch

SIGMOID = "sigmoid"
IDENTITY = "identity"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


def sigmoid(z):
    return expit(z)


@dataclass
class DenseLayer:
    W: np.ndarray
    b: np.ndarray
    activation: str = SIGMOID

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ShapeMismatch(f"weight {self.W.shape} and bias {self.b.shape} do not agree")
        if self.activation not in (SIGMOID, IDENTITY):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    @classmethod
    def glorot(cls, in_dim: int, out_dim: int, rng: np.random.Generator, activation: str = SIGMOID):
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        return cls(rng.uniform(-limit, limit, size=(out_dim, in_dim)), np.zeros(out_dim), activation)

    def params(self) -> list:
        return [self.W, self.b]


def build_stack(dims, rng, activation: str = SIGMOID) -> list:
    """Layers mapping ``dims[0] -> dims[1] -> ... -> dims[-1]``."""
    return [DenseLayer.glorot(a, b, rng, activation) for a, b in zip(dims[:-1], dims[1:])]


@dataclass
class LayerCache:
    x: np.ndarray
    h: np.ndarray
    mask: Optional[np.ndarray] = None


def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability ``rate``, else ``1 / (1 - rate)``."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must lie in [0, 1)")
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def dropout(x, rate: float, mode: str = "train", rng: Optional[np.random.Generator] = None):
    x = np.asarray(x, dtype=np.float64)
    if mode == "eval" or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    return x * dropout_mask(x.shape, rate, rng)


def forward(stack, x, dropout_rate: float = 0.0, rng: Optional[np.random.Generator] = None):
    """Run ``x`` through ``stack``; returns ``(output, cache)``.

    With ``dropout_rate > 0`` and a generator, inverted dropout is applied to
    the output of every layer but the last.
    """
    h = _as_batch(x)
    cache = []
    for k, layer in enumerate(stack):
        if h.shape[1] != layer.in_dim:
            raise ShapeMismatch(f"layer {k} expects {layer.in_dim} inputs, got {h.shape[1]}")
        x_in = h
        z = x_in @ layer.W.T + layer.b
        h = sigmoid(z) if layer.activation == SIGMOID else z
        mask = None
        if dropout_rate > 0.0 and rng is not None and k < len(stack) - 1:
            mask = dropout_mask(h.shape, dropout_rate, rng)
        cache.append(LayerCache(x_in, h, mask))
        if mask is not None:
            h = h * mask
    return h, cache


def backward(stack, cache, grad_out):
    """Backpropagate ``dL/d(output)`` through the stack.

    Returns ``(grads, grad_input)`` where ``grads[k] = (dW, db)`` for layer
    ``k``.  Per layer the error signal is ``delta = dL/dz``; then
    ``dW = delta.T @ x`` and ``db = delta.sum(0)`` summed over the batch.
    """
    grad = _as_batch(grad_out)
    if len(cache) != len(stack):
        raise ShapeMismatch("cache does not match the stack")
    if grad.shape != cache[-1].h.shape:
        raise ShapeMismatch(f"output gradient {grad.shape} vs output {cache[-1].h.shape}")
    grads = [None] * len(stack)
    for k in range(len(stack) - 1, -1, -1):
        layer, c = stack[k], cache[k]
        if c.mask is not None:
            grad = grad * c.mask
        delta = grad * c.h * (1.0 - c.h) if layer.activation == SIGMOID else grad
        grads[k] = (delta.T @ c.x, delta.sum(axis=0))
        grad = delta @ layer.W
    return grads, grad


@dataclass(frozen=True)
class PenaltyMatrix:
    """Weight ``rho`` on entries where the target is non-zero, 1 elsewhere."""

    rho: float = 5.0

    def mask(self, target) -> np.ndarray:
        target = np.asarray(target, dtype=np.float64)
        return np.where(target > 0, self.rho, 1.0)


def _check_same(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")


def penalized_recon_loss(target, recon, penalty=PenaltyMatrix()) -> float:
    """``|| (target - recon) * mask ||_F^2`` with the mask from ``penalty``."""
    target = np.asarray(target, dtype=np.float64)
    recon = np.asarray(recon, dtype=np.float64)
    _check_same(target, recon)
    mask = penalty.mask(target) if isinstance(penalty, PenaltyMatrix) else np.asarray(penalty)
    return float(np.sum(((target - recon) * mask) ** 2))


def penalized_recon_grad(target, recon, penalty=PenaltyMatrix()) -> np.ndarray:
    """Gradient of ``penalized_recon_loss`` w.r.t. ``recon``: ``2 (recon - target) mask^2``."""
    target = np.asarray(target, dtype=np.float64)
    recon = np.asarray(recon, dtype=np.float64)
    _check_same(target, recon)
    mask = penalty.mask(target) if isinstance(penalty, PenaltyMatrix) else np.asarray(penalty)
    return 2.0 * (recon - target) * mask * mask


def recon_loss(target, recon) -> float:
    return penalized_recon_loss(target, recon, PenaltyMatrix(1.0))


def recon_grad(target, recon) -> np.ndarray:
    return penalized_recon_grad(target, recon, PenaltyMatrix(1.0))


@dataclass
class AdamState:
    alpha: float = 0.001
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params, grads, state: AdamState):
    """One Adam update, in place on ``params``; returns ``(params, state)``."""
    if len(params) != len(grads):
        raise ShapeMismatch("params and grads differ in length")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or m.shape != p.shape:
            raise ShapeMismatch(f"parameter {p.shape} vs gradient {g.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        p -= state.alpha * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state


def numerical_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of scalar ``f()`` w.r.t. array ``x`` (perturbed in place)."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + eps
        up = f()
        flat[k] = old - eps
        down = f()
        flat[k] = old
        gflat[k] = (up - down) / (2.0 * eps)
    return grad


def max_relative_error(analytic, numeric, floor: float = 1e-7) -> float:
    """``max |a - n| / max(|a|, |n|, floor)``; the floor keeps exact zeros from dividing by zero."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


_MAGIC = b"GMTS"
_VERSION = 1


def dumps_tensors(tensors: dict, meta: Optional[dict] = None) -> bytes:
    """Serialize named float64 arrays with a JSON shape header.

    Layout: magic, uint32 version, uint64 header length, header JSON, then
    the raw little-endian array bytes in header order.  Output is a pure
    function of the inputs, so identical models give identical bytes.
    """
    entries = []
    blobs = []
    offset = 0
    for name in tensors:
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        raw = arr.tobytes()
        entries.append({"name": name, "dtype": "<f8", "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"version": _VERSION, "meta": meta or {}, "tensors": entries}, sort_keys=True).encode()
    return _MAGIC + struct.pack("<IQ", _VERSION, len(header)) + header + b"".join(blobs)


def loads_tensors(data: bytes):
    """Inverse of ``dumps_tensors``; returns ``(tensors, meta)``."""
    if data[:4] != _MAGIC:
        raise ValueError("not a tensor file")
    version, hlen = struct.unpack("<IQ", data[4:16])
    if version != _VERSION:
        raise ValueError(f"unsupported tensor file version {version}")
    header = json.loads(data[16:16 + hlen])
    base = 16 + hlen
    tensors = {}
    for e in header["tensors"]:
        start = base + e["offset"]
        arr = np.frombuffer(data[start:start + e["nbytes"]], dtype=e["dtype"]).reshape(e["shape"])
        tensors[e["name"]] = arr.astype(np.float64)
    return tensors, header["meta"]
