"""State-augmented MLP slicing policy with hand-written backpropagation."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .domain import SliceAllocation

LAYER_SIZES = (11, 64, 64, 32, 3)
FORMAT_VERSION = 1
# Multipliers reach O(10); dividing keeps them on the scale of the state entries.
LAMBDA_SCALE = 10.0


@dataclass
class PolicyParams:
    """Dense layers; ``weights[k]`` has shape (fan_in, fan_out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        shapes = [w.shape for w in self.weights]
        expected = list(zip(LAYER_SIZES[:-1], LAYER_SIZES[1:]))
        if shapes != expected or [b.shape for b in self.biases] != [(o,) for _, o in expected]:
            raise ValueError(f"parameter shapes {shapes} do not match {expected}")

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "PolicyParams":
        return PolicyParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def zeros_like(cls, other: "PolicyParams") -> "PolicyParams":
        return cls([np.zeros_like(w) for w in other.weights],
                   [np.zeros_like(b) for b in other.biases])

    def to_dict(self, **metadata) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "layers": [
                {"shape": list(w.shape), "weights": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
            "metadata": metadata,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PolicyParams":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {doc.get('format_version')}")
        weights, biases = [], []
        for layer in doc["layers"]:
            weights.append(np.array(layer["weights"], dtype=float).reshape(layer["shape"]))
            biases.append(np.array(layer["bias"], dtype=float))
        return cls(weights, biases)

    def save(self, path, **metadata) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(**metadata), fh)

    @classmethod
    def load(cls, path) -> tuple["PolicyParams", dict]:
        with open(path) as fh:
            doc = json.load(fh)
        return cls.from_dict(doc), doc.get("metadata", {})


def init_params(rng: np.random.Generator) -> PolicyParams:
    """He-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(LAYER_SIZES[:-1], LAYER_SIZES[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return PolicyParams(weights, biases)


def policy_input(state, lam) -> np.ndarray:
    """Concatenate the network state with the (scaled) dual multipliers."""
    return np.concatenate([np.asarray(state, float), np.asarray(lam, float) / LAMBDA_SCALE])


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


@dataclass
class ForwardCache:
    activations: list[np.ndarray]  # input of each dense layer
    preacts: list[np.ndarray]  # hidden pre-activations


def forward(params: PolicyParams, x) -> tuple[np.ndarray, SliceAllocation, ForwardCache]:
    x = np.asarray(x, dtype=float)
    if x.shape != (LAYER_SIZES[0],):
        raise ValueError(f"policy input must have shape ({LAYER_SIZES[0]},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite policy input")
    acts, pre = [x], []
    a = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    logits = a @ params.weights[-1] + params.biases[-1]
    return logits, SliceAllocation.from_array(softmax(logits)), ForwardCache(acts, pre)


def backward(params: PolicyParams, cache: ForwardCache, dlogits) -> PolicyParams:
    """Gradient of ``dlogits . logits`` with respect to every parameter."""
    g = np.asarray(dlogits, dtype=float)
    if g.shape != (LAYER_SIZES[-1],):
        raise ValueError(f"dlogits must have shape ({LAYER_SIZES[-1]},)")
    n = len(params.weights)
    dw, db = [None] * n, [None] * n
    for k in range(n - 1, -1, -1):
        dw[k] = np.outer(cache.activations[k], g)
        db[k] = g.copy()
        if k > 0:
            g = (params.weights[k] @ g) * (cache.preacts[k - 1] > 0)
    return PolicyParams(dw, db)
