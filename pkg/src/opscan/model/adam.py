"""Adam optimizer with bias-corrected moments."""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from .params import ModelParams


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0  # applied by the training loop before stepping

    @classmethod
    def init(cls, params: ModelParams, lr: float = 1e-3,
             clip_norm: float = 5.0) -> "AdamState":
        m = {name: np.zeros_like(arr) for name, arr in params.param_items()}
        v = {name: np.zeros_like(arr) for name, arr in params.param_items()}
        return cls(m=m, v=v, lr=lr, clip_norm=clip_norm)


def adam_step(params: ModelParams, grads: dict, state: AdamState):
    """One in-place update; returns (params, state) for chaining."""
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, arr in params.param_items():
        g = grads[name]
        if g.shape != arr.shape:
            raise ShapeMismatch(f"gradient {name} has shape {g.shape}, "
                                f"parameter has {arr.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        arr -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    params.version += 1
    return params, state
