"""Two-layer LSTM classifier: forward pass, BPTT gradients, prediction.

Inputs enter either as token id matrices (looked up in the trainable
embedding) or as pre-embedded code-vector sequences (the form synthetic
resampled contracts exist in).  The readout is the top layer's hidden
state at the last real (non-PAD) timestep, mapped to a probability by a
dense sigmoid head.
"""

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..encoding import CodeVectorSequence
from ..errors import DimensionMismatch, LengthMismatch, StaleCache
from ..evm import PAD_ID
from .ops import bce_grad_wrt_logit, sigmoid, tanh
from .params import ModelParams


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int) -> "CellState":
        return cls(h=np.zeros(hidden), c=np.zeros(hidden))


def lstm_cell(x_t, prev: CellState, layer) -> CellState:
    """Single recurrence step; x_t is (input,) or (B, input)."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_dim = layer.hidden
    if x_t.shape[-1] != layer.w_x.shape[1]:
        raise DimensionMismatch(
            f"input size {x_t.shape[-1]} != expected {layer.w_x.shape[1]}")
    if prev.h.shape[-1] != h_dim or prev.c.shape[-1] != h_dim:
        raise DimensionMismatch("previous state does not match hidden size")
    z = x_t @ layer.w_x.T + prev.h @ layer.w_h.T + layer.b
    i = sigmoid(z[..., :h_dim])
    f = sigmoid(z[..., h_dim:2 * h_dim])
    o = sigmoid(z[..., 2 * h_dim:3 * h_dim])
    g = tanh(z[..., 3 * h_dim:])
    c = f * prev.c + i * g
    h = o * np.tanh(c)
    return CellState(h=h, c=c)


@dataclass
class ForwardCache:
    x: np.ndarray            # (B, T, D) assembled inputs
    tokens: np.ndarray       # (Bt, T) ids for the token-input rows (Bt <= B)
    mask: np.ndarray         # (B, T)
    last_idx: np.ndarray     # (B,) last real timestep, -1 if none
    cache1: tuple
    cache2: tuple
    h2_last: np.ndarray      # (B, hidden2)
    a: np.ndarray            # (B,) probabilities
    params_version: int


def _assemble(params: ModelParams, tokens, vectors):
    """Stack token rows (embedded) and code-vector rows into one batch."""
    dims = params.dims
    parts = []
    masks = []
    n_token_rows = 0
    tok = np.zeros((0, dims.max_len), dtype=np.int64)
    if tokens is not None:
        tok = np.asarray(tokens, dtype=np.int64)
        if tok.ndim == 1:
            tok = tok[None, :]
        if tok.shape[1] != dims.max_len:
            raise DimensionMismatch(
                f"token rows have length {tok.shape[1]}, expected {dims.max_len}")
        if tok.size and (tok.min() < 0 or tok.max() >= dims.vocab_size):
            raise DimensionMismatch("token id outside vocabulary")
        n_token_rows = tok.shape[0]
        if n_token_rows:
            parts.append(params.embedding.values.T[tok])
            masks.append(tok != PAD_ID)
    if vectors is not None:
        vec = np.asarray(vectors, dtype=np.float64)
        if vec.ndim == 2:
            vec = vec[None, :, :]
        if vec.shape[1] != dims.max_len or vec.shape[2] != dims.embed_dim:
            raise DimensionMismatch(
                f"vector rows are {vec.shape[1:]}, expected "
                f"({dims.max_len}, {dims.embed_dim})")
        if vec.shape[0]:
            parts.append(vec)
            masks.append(np.any(vec != 0.0, axis=2))
    if not parts:
        raise DimensionMismatch("no input rows given")
    x = np.ascontiguousarray(np.concatenate(parts, axis=0))
    mask = np.concatenate(masks, axis=0)
    return x, mask, tok, n_token_rows


def forward(params: ModelParams, tokens=None, vectors=None) -> ForwardCache:
    """Run the full classifier; returns the cache (cache.a holds probabilities).

    Both layers run over every timestep of the fixed window (keeping the
    classifier cost independent of raw contract length); the readout is
    the top layer's state at each row's last real timestep, so trailing
    PAD never changes the output.
    """
    x, mask, tok, n_token_rows = _assemble(params, tokens, vectors)
    B, T, _ = x.shape
    # last real timestep per row; -1 for all-PAD rows
    rev_first = np.argmax(mask[:, ::-1], axis=1)
    has_real = mask.any(axis=1)
    last_idx = np.where(has_real, T - 1 - rev_first, -1)

    l1, l2 = params.layer1, params.layer2
    h1, cache1 = kernels.lstm_forward(x, l1.w_x, l1.w_h, l1.b)
    h2, cache2 = kernels.lstm_forward(h1, l2.w_x, l2.w_h, l2.b)

    h2_last = np.zeros((B, l2.hidden))
    rows = np.nonzero(has_real)[0]
    h2_last[rows] = h2[rows, last_idx[rows]]
    a = sigmoid(h2_last @ params.w_out + params.b_out[0])
    return ForwardCache(x=x, tokens=tok, mask=mask, last_idx=last_idx,
                        cache1=cache1, cache2=cache2,
                        h2_last=h2_last, a=a, params_version=params.version)


def backward(params: ModelParams, cache: ForwardCache, y) -> dict:
    """Gradients of the mean BCE loss for every parameter tensor.

    The PAD embedding column is forced to zero so padding never trains.
    """
    if cache.params_version != params.version:
        raise StaleCache("parameters changed since this cache was computed")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != cache.a.shape:
        raise LengthMismatch(f"labels {y.shape} vs probabilities {cache.a.shape}")

    B, T, _ = cache.x.shape
    dz = bce_grad_wrt_logit(cache.a, y)          # (B,)
    grads = {
        "w_out": cache.h2_last.T @ dz,
        "b_out": np.array([dz.sum()]),
    }

    dh2 = np.zeros((B, T, params.layer2.hidden))
    rows = np.nonzero(cache.last_idx >= 0)[0]
    dh2[rows, cache.last_idx[rows]] = np.outer(dz[rows], params.w_out)

    dh1, dw_x2, dw_h2, db2 = kernels.lstm_backward(
        dh2, cache.cache2, params.layer2.w_x, params.layer2.w_h)
    dx, dw_x1, dw_h1, db1 = kernels.lstm_backward(
        dh1, cache.cache1, params.layer1.w_x, params.layer1.w_h)
    grads.update({"l2.w_x": dw_x2, "l2.w_h": dw_h2, "l2.b": db2,
                  "l1.w_x": dw_x1, "l1.w_h": dw_h1, "l1.b": db1})

    d_embed = np.zeros_like(params.embedding.values)  # (D, V)
    n_tok = cache.tokens.shape[0]
    if n_tok:
        d_embed_t = d_embed.T                          # (V, D) view
        np.add.at(d_embed_t, cache.tokens.ravel(),
                  dx[:n_tok].reshape(-1, d_embed.shape[0]))
        d_embed_t[PAD_ID] = 0.0
    grads["embedding"] = d_embed
    return grads


def predict(params: ModelParams, tokens=None, vectors=None, threshold: float = 0.5):
    """Labels and probabilities for a batch; label = 1 when a >= threshold."""
    a = forward(params, tokens=tokens, vectors=vectors).a
    return (a >= threshold).astype(np.int64), a


def predict_in_chunks(params: ModelParams, tokens, threshold: float = 0.5,
                      chunk: int = 512):
    """Memory-bounded predict over a large token matrix."""
    labels = []
    probs = []
    for start in range(0, len(tokens), chunk):
        lab, a = predict(params, tokens=tokens[start:start + chunk],
                         threshold=threshold)
        labels.append(lab)
        probs.append(a)
    if not labels:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(labels), np.concatenate(probs)


def embed_tokens(params: ModelParams, tokens) -> CodeVectorSequence:
    """Code-vector sequence for one padded token list using the model embedding."""
    from ..encoding import embed
    return embed(tokens, params.embedding)
