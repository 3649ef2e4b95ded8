"""Dataset preparation pipeline: corpus -> split manifests + training tensors.

Steps: drop contracts with too many INVALID tokens, dedup by opcode
sequence, stratified 64/16/20 split, pad/truncate, then rebalance the
training split to 50/50 by SMOTE in code-vector space (synthetics) plus
majority undersampling.  Validation and test keep their natural class
balance.

Artifacts written to the output directory:
    splits.json     address manifest per split
    prepared.npz    token matrices, labels, synthetic code vectors, the
                    embedding used to build them
    prep_meta.json  dims and seeds needed to reload the tensors
    prep_report.json  class counts, dedup stats, length statistics
    smote_log.jsonl   provenance of every synthetic sample
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .dataset import (dedup_by_opcode, length_stats, pad_or_truncate,
                      split_manifest, stratified_split)
from .encoding import EmbeddingMatrix
from .errors import EmptyClass
from .evm import INVALID_ID, default_table
from .smote import smote_oversample, undersample_majority

FRACTIONS = (0.64, 0.16, 0.20)


@dataclass
class PreparedData:
    train_tokens: np.ndarray          # (N1, T) minority originals then majority
    train_token_labels: np.ndarray
    train_vectors: np.ndarray         # (N2, T, D) SMOTE synthetics
    train_vector_labels: np.ndarray
    val_tokens: np.ndarray
    val_labels: np.ndarray
    test_tokens: np.ndarray
    test_labels: np.ndarray
    embedding: EmbeddingMatrix
    meta: dict
    manifest: dict
    report: dict
    smote_log: list


def _tokens_matrix(records, max_len):
    if not records:
        return np.zeros((0, max_len), dtype=np.int32)
    return np.array([pad_or_truncate(r.tokens.tokens, max_len) for r in records],
                    dtype=np.int32)


def _labels(records):
    return np.array([r.label for r in records], dtype=np.float64)


def _invalid_fraction(rec):
    if rec.tokens.raw_len == 0:
        return 0.0
    return rec.tokens.tokens.count(INVALID_ID) / rec.tokens.raw_len


def prepare(records, seed: int = 0, max_len: int = 1600, embed_dim: int = 150,
            smote_k: int = 5, balance_total: int | None = None,
            max_invalid_fraction: float = 0.0) -> PreparedData:
    table = default_table()
    n_input = len(records)
    kept = [r for r in records if _invalid_fraction(r) <= max_invalid_fraction]
    n_invalid_dropped = n_input - len(kept)
    deduped = dedup_by_opcode(kept)
    n_duplicates = len(kept) - len(deduped)
    if not deduped:
        raise EmptyClass("corpus is empty after filtering")
    stats = length_stats(deduped)

    rng = np.random.default_rng(seed)
    split_seed, embed_seed, smote_seed = (int(v) for v in
                                          rng.integers(0, 2 ** 31, size=3))
    split = stratified_split(deduped, FRACTIONS, seed=split_seed)

    train_min = [r for r in split.train if r.label == 1]
    train_maj = [r for r in split.train if r.label == 0]
    if not train_min or not train_maj:
        raise EmptyClass("training split needs both classes for rebalancing")

    embedding = EmbeddingMatrix.init_random(table.vocab_size, embed_dim,
                                            seed=embed_seed)
    min_tokens = _tokens_matrix(train_min, max_len)
    maj_tokens = _tokens_matrix(train_maj, max_len)

    total = balance_total if balance_total is not None else 2 * len(train_maj)
    n_min_target = total // 2
    n_maj_target = total - n_min_target

    smote_log = []
    if n_min_target > len(train_min):
        # embed + flatten the minority, interpolate synthetics in that space
        features = embedding.values.T[min_tokens].reshape(len(train_min), -1)
        oversampled, provenance = smote_oversample(
            features, n_min_target, k=smote_k, seed=smote_seed)
        synth = oversampled[len(train_min):].reshape(-1, max_len, embed_dim)
        kept_min_tokens = min_tokens
        smote_log = [p.as_dict() for p in provenance]
    else:
        idx = undersample_majority(list(range(len(train_min))), n_min_target,
                                   seed=smote_seed)
        kept_min_tokens = min_tokens[idx]
        synth = np.zeros((0, max_len, embed_dim))

    maj_idx = undersample_majority(list(range(len(train_maj))), n_maj_target,
                                   seed=smote_seed + 1)
    kept_maj_tokens = maj_tokens[maj_idx]

    train_tokens = np.concatenate([kept_min_tokens, kept_maj_tokens], axis=0)
    train_token_labels = np.concatenate([
        np.ones(len(kept_min_tokens)), np.zeros(len(kept_maj_tokens))])

    report = {
        "input_records": n_input,
        "dropped_invalid": n_invalid_dropped,
        "duplicates_removed": n_duplicates,
        "length_stats": stats.as_dict(),
        "splits": {
            "train": {"vulnerable": len(train_min), "clean": len(train_maj)},
            "validation": {
                "vulnerable": sum(r.label for r in split.validation),
                "clean": sum(1 - r.label for r in split.validation)},
            "test": {"vulnerable": sum(r.label for r in split.test),
                     "clean": sum(1 - r.label for r in split.test)},
        },
        "balanced_train": {
            "token_rows": int(train_tokens.shape[0]),
            "synthetic_rows": int(synth.shape[0]),
            "vulnerable": int(train_token_labels.sum() + synth.shape[0]),
            "clean": int(len(kept_maj_tokens)),
        },
    }
    meta = {
        "seed": seed,
        "max_len": max_len,
        "embed_dim": embed_dim,
        "vocab_size": table.vocab_size,
        "smote_k": smote_k,
        "balance_total": total,
        "fractions": list(FRACTIONS),
        "sub_seeds": {"split": split_seed, "embedding": embed_seed,
                      "smote": smote_seed},
    }
    return PreparedData(
        train_tokens=train_tokens,
        train_token_labels=train_token_labels,
        train_vectors=synth,
        train_vector_labels=np.ones(synth.shape[0]),
        val_tokens=_tokens_matrix(split.validation, max_len),
        val_labels=_labels(split.validation),
        test_tokens=_tokens_matrix(split.test, max_len),
        test_labels=_labels(split.test),
        embedding=embedding,
        meta=meta,
        manifest=split_manifest(split, FRACTIONS),
        report=report,
        smote_log=smote_log,
    )


def save_prepared(data: PreparedData, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    np.savez_compressed(
        os.path.join(out_dir, "prepared.npz"),
        train_tokens=data.train_tokens,
        train_token_labels=data.train_token_labels,
        train_vectors=data.train_vectors,
        train_vector_labels=data.train_vector_labels,
        val_tokens=data.val_tokens,
        val_labels=data.val_labels,
        test_tokens=data.test_tokens,
        test_labels=data.test_labels,
        embedding=data.embedding.values,
    )
    for name, payload in (("splits.json", data.manifest),
                          ("prep_meta.json", data.meta),
                          ("prep_report.json", data.report)):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    with open(os.path.join(out_dir, "smote_log.jsonl"), "w", encoding="utf-8") as fh:
        for row in data.smote_log:
            fh.write(json.dumps(row) + "\n")


def load_prepared(out_dir):
    """(npz arrays dict, meta dict) for a prepared dataset directory."""
    arrays = dict(np.load(os.path.join(out_dir, "prepared.npz")))
    with open(os.path.join(out_dir, "prep_meta.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    return arrays, meta
