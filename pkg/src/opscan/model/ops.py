"""Scalar/array numeric primitives: activations, loss, gradient clipping."""

import math

import numpy as np

from ..errors import LengthMismatch

PROB_CLAMP = 1e-7


def sigmoid(z):
    """Numerically stable logistic function, elementwise.

    Evaluates exp only on the non-overflowing branch so |z| up to the
    hundreds is safe in float64.
    """
    if np.isscalar(z):
        if z >= 0.0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def tanh(z):
    """Hyperbolic tangent (numpy's is already stable for large |z|)."""
    if np.isscalar(z):
        return math.tanh(z)
    return np.tanh(np.asarray(z, dtype=np.float64))


def clamp_probs(a):
    return np.clip(a, PROB_CLAMP, 1.0 - PROB_CLAMP)


def bce_loss(a_batch, y_batch) -> float:
    """Mean binary cross-entropy; probabilities clamped away from {0, 1}."""
    a = np.asarray(a_batch, dtype=np.float64)
    y = np.asarray(y_batch, dtype=np.float64)
    if a.shape != y.shape:
        raise LengthMismatch(f"probabilities {a.shape} vs labels {y.shape}")
    ac = clamp_probs(a)
    return float(-np.mean(y * np.log(ac) + (1.0 - y) * np.log(1.0 - ac)))


def bce_grad_wrt_logit(a_batch, y_batch):
    """Gradient of the (clamped) mean BCE w.r.t. the pre-sigmoid logit.

    Outside the clamp region this is the familiar (a - y) / N; inside it
    the clamped loss is locally constant, so the gradient is exactly zero.
    """
    a = np.asarray(a_batch, dtype=np.float64)
    y = np.asarray(y_batch, dtype=np.float64)
    if a.shape != y.shape:
        raise LengthMismatch(f"probabilities {a.shape} vs labels {y.shape}")
    n = a.size
    grad = (a - y) / n
    clamped = (a < PROB_CLAMP) | (a > 1.0 - PROB_CLAMP)
    grad[clamped] = 0.0
    return grad


def global_norm(arrays) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in arrays))


def clip_by_global_norm(grads, clip_norm: float):
    """Scale all gradients in place so their joint L2 norm is <= clip_norm."""
    if clip_norm <= 0:
        raise ValueError("clip_norm must be positive")
    norm = global_norm(grads)
    if norm > clip_norm:
        scale = clip_norm / norm
        for g in grads:
            g *= scale
    return grads
