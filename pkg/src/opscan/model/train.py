"""Mini-batch training loop with per-epoch validation tracking."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .adam import AdamState, adam_step
from .network import backward, forward, predict_in_chunks
from .ops import bce_loss, clip_by_global_norm
from .params import ModelParams


@dataclass
class TrainSet:
    """Prepared training tensors: token rows plus optional code-vector rows."""

    tokens: np.ndarray                 # (N1, T) int
    token_labels: np.ndarray           # (N1,)
    vectors: np.ndarray | None = None  # (N2, T, embed_dim)
    vector_labels: np.ndarray | None = None

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.int64)
        self.token_labels = np.asarray(self.token_labels, dtype=np.float64)
        if self.vectors is None:
            self.vectors = np.zeros((0,) + self.tokens.shape[1:2] + (0,))
            self.vector_labels = np.zeros(0)
        self.vector_labels = np.asarray(self.vector_labels, dtype=np.float64)

    def __len__(self) -> int:
        return self.tokens.shape[0] + self.vectors.shape[0]


@dataclass
class TrainConfig:
    epochs: int = 256
    batch_size: int = 256
    lr: float = 1e-3
    clip_norm: float = 5.0
    seed: int = 0
    early_stop_patience: int | None = None   # off by default
    stop_at_train_acc: float | None = None   # early exit for overfit checks
    eval_chunk: int = 512
    threshold: float = 0.5
    verbose: bool = False


def _run_batch(params, train_set, idx, n_tok, config, state):
    tok_idx = idx[idx < n_tok]
    vec_idx = idx[idx >= n_tok] - n_tok
    tokens_b = train_set.tokens[tok_idx] if tok_idx.size else None
    vectors_b = train_set.vectors[vec_idx] if vec_idx.size else None
    y = np.concatenate([train_set.token_labels[tok_idx],
                        train_set.vector_labels[vec_idx]])
    cache = forward(params, tokens=tokens_b, vectors=vectors_b)
    loss = bce_loss(cache.a, y)
    hits = int(np.sum((cache.a >= config.threshold) == (y == 1.0)))
    grads = backward(params, cache, y)
    clip_by_global_norm(list(grads.values()), state.clip_norm)
    adam_step(params, grads, state)
    return loss, hits


def evaluate(params: ModelParams, tokens, labels, threshold: float = 0.5,
             chunk: int = 512):
    """(loss, accuracy, probabilities) over a token dataset."""
    labels = np.asarray(labels, dtype=np.float64)
    preds, probs = predict_in_chunks(params, tokens, threshold=threshold,
                                     chunk=chunk)
    loss = bce_loss(probs, labels)
    acc = float(np.mean(preds == labels.astype(np.int64))) if len(labels) else 0.0
    return loss, acc, probs


def train(params: ModelParams, train_set: TrainSet, val_tokens=None,
          val_labels=None, config: TrainConfig | None = None):
    """Train in place; returns (best_params, history).

    History has one row per epoch: epoch, train_loss, train_acc, val_loss,
    val_acc.  Best parameters are the snapshot with the lowest validation
    loss (the final state when no validation set is given).
    """
    if config is None:
        config = TrainConfig()
    rng = np.random.default_rng(config.seed)
    state = AdamState.init(params, lr=config.lr, clip_norm=config.clip_norm)
    n_tok = train_set.tokens.shape[0]
    n = len(train_set)
    has_val = val_tokens is not None and len(val_tokens) > 0

    history = []
    best_val = np.inf
    best_params = None
    bad_epochs = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        total_hits = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, hits = _run_batch(params, train_set, idx, n_tok, config, state)
            total_loss += loss * idx.size
            total_hits += hits
        train_loss = total_loss / n
        train_acc = total_hits / n

        row = {"epoch": epoch, "train_loss": train_loss, "train_acc": train_acc,
               "val_loss": float("nan"), "val_acc": float("nan")}
        if has_val:
            val_loss, val_acc, _ = evaluate(params, val_tokens, val_labels,
                                            threshold=config.threshold,
                                            chunk=config.eval_chunk)
            row["val_loss"] = val_loss
            row["val_acc"] = val_acc
            if val_loss < best_val:
                best_val = val_loss
                best_params = params.copy()
                bad_epochs = 0
            else:
                bad_epochs += 1
        history.append(row)
        if config.verbose:
            print(f"epoch {epoch:4d}  train_loss {train_loss:.4f}  "
                  f"train_acc {train_acc:.4f}  val_loss {row['val_loss']:.4f}  "
                  f"val_acc {row['val_acc']:.4f}")

        if config.stop_at_train_acc is not None and train_acc >= config.stop_at_train_acc:
            break
        if (config.early_stop_patience is not None and has_val
                and bad_epochs >= config.early_stop_patience):
            break

    if best_params is None:
        best_params = params.copy()
    return best_params, history


def write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        writer.writeheader()
        writer.writerows(history)
