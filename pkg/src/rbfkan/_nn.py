"""Shared pieces for the hand-differentiated models.

A model keeps its parameters in an ordered ``dict[str, ndarray]`` and
exposes ``forward(x) -> (out, trace)`` and ``backward(trace, grad_out) ->
dict`` with the same keys.  The optimizer and serializer only rely on that.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import DomainError, NumericalDivergenceError

LN_EPS = 1e-5
MODEL_SCHEMA = "rbfkan.model/1"


def silu(x):
    s = 1.0 / (1.0 + np.exp(-x))
    return x * s, s * (1.0 + x * (1.0 - s))


def layernorm_forward(x, gain, bias):
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return xhat * gain + bias, (xhat, inv)


def layernorm_backward(dz, cache, gain):
    xhat, inv = cache
    dgain = np.einsum("bn,bn->n", dz, xhat)
    dbias = dz.sum(axis=0)
    dxhat = dz * gain
    dx = inv * (dxhat - dxhat.mean(axis=1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=1, keepdims=True))
    return dx, dgain, dbias


def as_batch(x, d_in) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, d_in) if d_in > 1 else x[:, None]
    if x.ndim != 2 or x.shape[1] != d_in or x.shape[0] == 0:
        raise DomainError(f"expected a non-empty batch of {d_in}-vectors, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("inputs must be finite")
    return x


def check_finite(arr, layer, what="activation"):
    if not np.all(np.isfinite(arr)):
        raise NumericalDivergenceError(f"non-finite {what} in layer {layer}", layer=layer)


def encode_array(a) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def decode_array(d) -> np.ndarray:
    return np.array(d["data"], dtype=np.float64).reshape(d["shape"])


class Model:
    """Base class: parameter bookkeeping, prediction and persistence."""

    kind: str = ""
    params: dict
    frozen: frozenset = frozenset()

    @property
    def trainable(self) -> list[str]:
        return [k for k in self.params if k not in self.frozen]

    def predict(self, x) -> np.ndarray:
        out, _ = self.forward(x)
        return out[:, 0] if out.shape[1] == 1 else out

    def n_params(self) -> int:
        return int(sum(self.params[k].size for k in self.trainable))

    def config_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "schema": MODEL_SCHEMA,
            "kind": self.kind,
            "config": self.config_dict(),
            "frozen": sorted(self.frozen),
            "params": {k: encode_array(v) for k, v in self.params.items()},
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")
