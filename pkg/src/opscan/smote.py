"""Training-set rebalancing: SMOTE oversampling in code-vector space plus
random majority undersampling.

Synthetic samples are convex combinations x + u * (x_nn - x) of a minority
sample and one of its k nearest neighbours (Euclidean distance on the
flattened padded code-vector sequence).  Every synthetic carries a
provenance record so the construction can be audited exactly.
"""

from dataclasses import dataclass

import numpy as np

from .encoding import CodeVectorSequence
from .errors import TargetTooLarge, TooFewSamples


@dataclass
class FlatSample:
    features: np.ndarray  # (max_len * embed_dim,)
    label: int


@dataclass
class SynthRecord:
    """How one synthetic sample was built: child = base + u * (neighbor - base)."""
    index: int        # position in the oversampled output
    parent_base: int  # index into the minority input
    parent_neighbor: int
    u: float

    def as_dict(self):
        return {"index": self.index, "parent_base": self.parent_base,
                "parent_neighbor": self.parent_neighbor, "u": self.u}


def flatten(cv: CodeVectorSequence) -> np.ndarray:
    """Row-major flattening: features[t * embed_dim + j] == vectors[t][j]."""
    return np.ascontiguousarray(cv.vectors, dtype=np.float64).ravel()


def unflatten(features: np.ndarray, max_len: int, embed_dim: int) -> np.ndarray:
    return np.asarray(features, dtype=np.float64).reshape(max_len, embed_dim)


def nearest_neighbors(features: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest rows for every row (self excluded)."""
    n = features.shape[0]
    k = min(k, n - 1)
    sq = np.sum(features ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (features @ features.T)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def smote_oversample(minority: np.ndarray, target_count: int, k: int = 5,
                     seed: int = 0):
    """Oversample to target_count rows: all originals first, then synthetics.

    Returns (samples, provenance); provenance has one SynthRecord per
    synthetic row.
    """
    minority = np.asarray(minority, dtype=np.float64)
    n = minority.shape[0]
    if target_count <= n:
        return minority[:target_count].copy(), []
    if n < 2:
        raise TooFewSamples("SMOTE needs at least 2 minority samples")
    if k < 1:
        raise ValueError("k must be >= 1")

    rng = np.random.default_rng(seed)
    neighbors = nearest_neighbors(minority, k)
    n_synth = target_count - n
    out = np.empty((target_count, minority.shape[1]))
    out[:n] = minority
    provenance = []
    for s in range(n_synth):
        base = int(rng.integers(0, n))
        nn = int(neighbors[base, rng.integers(0, neighbors.shape[1])])
        u = float(rng.uniform(0.0, 1.0))
        out[n + s] = minority[base] + u * (minority[nn] - minority[base])
        provenance.append(SynthRecord(index=n + s, parent_base=base,
                                      parent_neighbor=nn, u=u))
    return out, provenance


def undersample_majority(majority, target_count: int, seed: int = 0):
    """Uniform subset without replacement, input order preserved."""
    n = len(majority)
    if target_count > n:
        raise TargetTooLarge(f"cannot draw {target_count} from {n} samples")
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(n, size=target_count, replace=False))
    if isinstance(majority, np.ndarray):
        return majority[keep]
    return [majority[i] for i in keep]


def rebalance(minority: np.ndarray, majority: np.ndarray, total: int,
              k: int = 5, seed: int = 0):
    """Balanced training set: total//2 per class (odd totals give the
    extra sample to the majority side).

    Returns (features, labels, provenance).
    """
    minority = np.asarray(minority, dtype=np.float64)
    majority = np.asarray(majority, dtype=np.float64)
    if minority.shape[0] == 0 or majority.shape[0] == 0:
        raise TooFewSamples("both classes must be nonempty")
    n_min = total // 2
    n_maj = total - n_min
    min_out, provenance = (smote_oversample(minority, n_min, k=k, seed=seed)
                           if n_min > minority.shape[0]
                           else (undersample_majority(minority, n_min, seed=seed), []))
    maj_out = undersample_majority(majority, n_maj, seed=seed + 1)
    features = np.concatenate([min_out, maj_out], axis=0)
    labels = np.concatenate([np.ones(n_min), np.zeros(n_maj)])
    return features, labels, provenance
