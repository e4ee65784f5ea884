"""Minimal dense-MLP substrate with flat parameter vectors.

Parameters live in one flat float64 vector (layer-major: W then b per
layer), which is what the cross-agent weight blending operates on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class MlpArchitecture:
    input_dim: int
    hidden: list[int] = field(default_factory=lambda: [128, 64])
    output_dim: int = 11

    def __post_init__(self):
        dims = [self.input_dim, *self.hidden, self.output_dim]
        if any(d < 1 for d in dims):
            raise ValueError("all layer dims must be >= 1")

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden, self.output_dim]
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]

    @property
    def n_params(self) -> int:
        return sum((fi + 1) * fo for fi, fo in self.layer_dims)


@dataclass
class PolicyModel:
    arch: MlpArchitecture
    params: np.ndarray

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        if self.params.shape != (self.arch.n_params,):
            raise ValueError(
                f"params length {self.params.size} != architecture size {self.arch.n_params}"
            )


def init_model(arch: MlpArchitecture, rng: np.random.Generator) -> PolicyModel:
    """Scaled-uniform fan-in initialization; biases start at zero."""
    chunks = []
    for fan_in, fan_out in arch.layer_dims:
        bound = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return PolicyModel(arch, np.concatenate(chunks))


def _unpack(model: PolicyModel):
    layers = []
    off = 0
    for fan_in, fan_out in model.arch.layer_dims:
        w = model.params[off:off + fan_in * fan_out].reshape(fan_out, fan_in)
        off += fan_in * fan_out
        b = model.params[off:off + fan_out]
        off += fan_out
        layers.append((w, b))
    return layers


def _forward_cached(model: PolicyModel, x: np.ndarray):
    """Returns (logits, activations) where activations[i] is the input to
    layer i (post-ReLU for hidden layers)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.arch.input_dim,):
        raise ValueError(f"input shape {x.shape} != ({model.arch.input_dim},)")
    layers = _unpack(model)
    acts = [x]
    a = x
    for i, (w, b) in enumerate(layers):
        z = w @ a + b
        a = np.maximum(z, 0.0) if i < len(layers) - 1 else z
        if i < len(layers) - 1:
            acts.append(a)
    return a, acts


def forward(model: PolicyModel, x: np.ndarray) -> np.ndarray:
    """Logits; hidden layers are ReLU, the output layer is linear."""
    return _forward_cached(model, x)[0]


def backward(model: PolicyModel, x: np.ndarray, upstream_grad: np.ndarray) -> np.ndarray:
    """Exact gradient of (logits . upstream_grad) w.r.t. the flat params."""
    upstream_grad = np.asarray(upstream_grad, dtype=float)
    if upstream_grad.shape != (model.arch.output_dim,):
        raise ValueError("upstream_grad shape mismatch")
    logits, acts = _forward_cached(model, x)
    layers = _unpack(model)
    grads = [None] * len(layers)
    g = upstream_grad
    for i in range(len(layers) - 1, -1, -1):
        w, b = layers[i]
        a_in = acts[i]
        grads[i] = (np.outer(g, a_in), g.copy())
        if i > 0:
            g = w.T @ g
            g = g * (acts[i] > 0)  # ReLU mask of the layer-i input activation
    flat = []
    for gw, gb in grads:
        flat.append(gw.ravel())
        flat.append(gb)
    return np.concatenate(flat)


def softmax_probs(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def softmax_sample(logits: np.ndarray, rng: np.random.Generator) -> tuple[int, float]:
    probs = softmax_probs(np.asarray(logits, dtype=float))
    idx = int(rng.choice(len(probs), p=probs))
    return idx, float(np.log(probs[idx]))


@dataclass
class AdamState:
    lr: float = 0.0003
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stab: float = 1e-8
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """Standard bias-corrected Adam; returns updated params, mutates state."""
    if params.shape != grads.shape:
        raise ValueError("params/grads length mismatch")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1 - state.beta2) * grads ** 2
    m_hat = state.m / (1 - state.beta1 ** state.t)
    v_hat = state.v / (1 - state.beta2 ** state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps_stab)


def export_params(model: PolicyModel) -> np.ndarray:
    return model.params.copy()


def import_params(model: PolicyModel, flat: np.ndarray) -> PolicyModel:
    flat = np.asarray(flat, dtype=float)
    if flat.shape != (model.arch.n_params,):
        raise ValueError("flat vector length does not match architecture")
    return PolicyModel(model.arch, flat.copy())


def save_checkpoint(model: PolicyModel, path, metadata: dict | None = None) -> None:
    np.savez(
        path,
        input_dim=model.arch.input_dim,
        hidden=np.asarray(model.arch.hidden, dtype=int),
        output_dim=model.arch.output_dim,
        params=model.params,
        metadata=json.dumps(metadata or {}),
    )


def load_checkpoint(path) -> tuple[PolicyModel, dict]:
    with np.load(path, allow_pickle=False) as z:
        arch = MlpArchitecture(
            int(z["input_dim"]), [int(h) for h in z["hidden"]], int(z["output_dim"])
        )
        model = PolicyModel(arch, z["params"])
        metadata = json.loads(str(z["metadata"]))
    return model, metadata
