"""Token one-hot vectors and the learned dense opcode embedding.

The embedding is a (embed_dim x vocab_size) matrix whose columns are the
code vectors; looking a token up is the matrix product with its one-hot
vector, specialized to column selection.  Column 0 belongs to PAD and is
kept at zero so padded timesteps contribute nothing.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange
from .evm import PAD_ID


@dataclass
class EmbeddingMatrix:
    values: np.ndarray  # (embed_dim, vocab_size)

    @property
    def embed_dim(self) -> int:
        return self.values.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.values.shape[1]

    @classmethod
    def init_random(cls, vocab_size: int, embed_dim: int = 150, seed: int = 0,
                    scale: float = 0.05) -> "EmbeddingMatrix":
        rng = np.random.default_rng(seed)
        values = rng.uniform(-scale, scale, size=(embed_dim, vocab_size))
        values[:, PAD_ID] = 0.0
        return cls(values=values)


@dataclass
class CodeVectorSequence:
    """Dense per-timestep representation of one contract."""

    vectors: np.ndarray  # (T, embed_dim)
    mask: np.ndarray     # (T,) uint8, 1 = real token

    def __len__(self) -> int:
        return self.vectors.shape[0]


def one_hot(token_id: int, vocab_size: int) -> np.ndarray:
    if not 0 <= token_id < vocab_size:
        raise IndexOutOfRange(f"token id {token_id} outside vocabulary of {vocab_size}")
    v = np.zeros(vocab_size)
    v[token_id] = 1.0
    return v


def embed(tokens, matrix: EmbeddingMatrix) -> CodeVectorSequence:
    """Look up the code vector (matrix column) for every token."""
    ids = np.asarray(tokens, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= matrix.vocab_size):
        raise IndexOutOfRange("token id outside vocabulary")
    vectors = matrix.values.T[ids]
    mask = (ids != PAD_ID).astype(np.uint8)
    return CodeVectorSequence(vectors=vectors, mask=mask)
