"""Labeled contract corpora: dedup, stratified splits, padding, statistics,
and a synthetic corpus generator for desk-scale experiments.

Corpus files are JSONL, one contract per line with an address, either
bytecode hex or a token id list, and a category tag.
"""

import json
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptyClass, EmptyCorpus, OpscanError
from .evm import (InstructionTable, OpcodeSequence, PAD_ID, default_table,
                  disassemble, parse_hex, to_token_ids)


class Category(str, Enum):
    NONE = "none"
    SUICIDAL = "suicidal"
    PRODIGAL = "prodigal"
    GREEDY = "greedy"
    SUICIDAL_AND_PRODIGAL = "suicidal_and_prodigal"


@dataclass
class ContractRecord:
    address: str
    tokens: OpcodeSequence
    label: int
    category: Category = Category.NONE

    def __post_init__(self):
        if isinstance(self.category, str):
            self.category = Category(self.category)
        expected = 0 if self.category == Category.NONE else 1
        if self.label != expected:
            raise OpscanError(
                f"label {self.label} inconsistent with category {self.category.value}")

    @classmethod
    def from_category(cls, address, tokens, category) -> "ContractRecord":
        category = Category(category)
        return cls(address=address, tokens=tokens,
                   label=0 if category == Category.NONE else 1, category=category)


@dataclass
class DatasetSplit:
    train: list
    validation: list
    test: list
    seed: int

    def sizes(self):
        return len(self.train), len(self.validation), len(self.test)


@dataclass
class LengthStats:
    mode: int
    median: int
    mean: float
    min: int
    max: int

    def as_dict(self):
        return {"mode": self.mode, "median": self.median,
                "mean": round(self.mean, 1), "min": self.min, "max": self.max}


def dedup_by_opcode(records: list) -> list:
    """Keep the first record for each distinct token sequence, order stable."""
    seen = set()
    out = []
    for rec in records:
        key = tuple(rec.tokens.tokens)
        if key not in seen:
            seen.add(key)
            out.append(rec)
    return out


def split_counts(n: int, fractions=(0.64, 0.16, 0.20)):
    """Per-class sizes: floor the train and test shares, the validation set
    absorbs the remainder (451 -> 288/73/90)."""
    n_train = int(n * fractions[0])
    n_test = int(n * fractions[2])
    return n_train, n - n_train - n_test, n_test


def stratified_split(records: list, fractions=(0.64, 0.16, 0.20),
                     seed: int = 0) -> DatasetSplit:
    """Shuffle each class and slice it by split_counts; deterministic per seed."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise OpscanError(f"fractions {fractions} do not sum to 1")
    if not records:
        raise EmptyClass("no records to split")
    by_label = {}
    for rec in records:
        by_label.setdefault(rec.label, []).append(rec)

    rng = np.random.default_rng(seed)
    train, validation, test = [], [], []
    for label in sorted(by_label):
        group = by_label[label]
        order = rng.permutation(len(group))
        shuffled = [group[i] for i in order]
        n_train, n_val, _ = split_counts(len(group), fractions)
        train.extend(shuffled[:n_train])
        validation.extend(shuffled[n_train:n_train + n_val])
        test.extend(shuffled[n_train + n_val:])
    return DatasetSplit(train=train, validation=validation, test=test, seed=seed)


def pad_or_truncate(tokens, max_len: int = 1600) -> list:
    """Right-pad with PAD(0) or keep the first max_len tokens."""
    if max_len < 1:
        raise OpscanError("max_len must be >= 1")
    tokens = list(tokens[:max_len])
    if len(tokens) < max_len:
        tokens.extend([PAD_ID] * (max_len - len(tokens)))
    return tokens


def length_stats(records: list) -> LengthStats:
    if not records:
        raise EmptyCorpus("cannot compute length statistics of an empty corpus")
    lengths = [rec.tokens.raw_len for rec in records]
    counts = Counter(lengths)
    best = max(counts.values())
    mode = min(v for v, c in counts.items() if c == best)  # smallest on ties
    ordered = sorted(lengths)
    median = ordered[(len(ordered) - 1) // 2]  # lower middle for even counts
    return LengthStats(mode=mode, median=median,
                       mean=float(np.mean(lengths)),
                       min=min(lengths), max=max(lengths))


# --- synthetic corpora -------------------------------------------------

# an unguarded kill path: dispatcher check straight into SELFDESTRUCT,
# the shape of signature a suicidal contract leaves in its opcode stream
DEFAULT_MOTIF_MNEMONICS = ("JUMPDEST", "CALLDATASIZE", "ISZERO", "PUSH2",
                           "JUMPI", "CALLER", "PUSH20", "AND", "DUP1",
                           "SELFDESTRUCT")


def default_motif(table: InstructionTable | None = None) -> list:
    return to_token_ids(list(DEFAULT_MOTIF_MNEMONICS), table or default_table())


def _contains(haystack: list, needle: bytes) -> bool:
    # token ids fit in a byte, so substring search does the work
    return needle in bytes(haystack)


def generate_synthetic_corpus(n: int, vulnerable_fraction: float,
                              motif: list | None = None, seed: int = 0,
                              length_range=(40, 3000),
                              motif_max_offset: int | None = None,
                              table: InstructionTable | None = None,
                              background_blocks: int = 48,
                              family_size: int = 20) -> list:
    """Random opcode corpora with a vulnerability motif planted in the
    positive class.

    The corpus mimics two strong regularities of on-chain bytecode:
    backgrounds are stitched from a shared library of boilerplate opcode
    blocks, and contracts come in families of near-duplicates (template
    plus per-deployment edits), the way repeated deployments of the same
    source differ only in small patches.  Template lengths are log-uniform
    over length_range.  Vulnerable records carry the motif spliced into
    their family template at a random position (bounded by
    motif_max_offset when given, so truncated training windows still see
    it); clean records are re-rolled until they do not contain the motif
    by chance.
    """
    if n < 0:
        raise OpscanError("n must be >= 0")
    if n and not 0.0 < vulnerable_fraction < 1.0:
        raise OpscanError("vulnerable_fraction must be in (0, 1)")
    table = table or default_table()
    motif = list(motif) if motif is not None else default_motif(table)
    if not motif:
        raise OpscanError("motif must be nonempty")
    motif_bytes = bytes(motif)
    alphabet = np.array(table.sequence_token_ids(), dtype=np.int64)
    rng = np.random.default_rng(seed)
    lo, hi = length_range
    n_vul = int(round(n * vulnerable_fraction))

    library = [alphabet[rng.integers(0, len(alphabet),
                                     size=int(rng.integers(4, 25)))]
               for _ in range(background_blocks)]

    def noise(k):
        return alphabet[rng.integers(0, len(alphabet), size=k)].tolist()

    def random_body(length):
        parts = []
        total = 0
        while total < length:
            if rng.uniform() < 0.1:  # unique filler between shared blocks
                blk = noise(int(rng.integers(1, 8)))
            else:
                blk = library[int(rng.integers(0, len(library)))].tolist()
            parts.append(blk)
            total += len(blk)
        return [t for part in parts for t in part][:length]

    def make_template(vulnerable):
        length = int(round(np.exp(rng.uniform(np.log(lo), np.log(hi)))))
        while True:
            body = random_body(length)
            if not _contains(body, motif_bytes):
                break
        motif_pos = None
        if vulnerable:
            limit = len(body) if motif_max_offset is None else min(len(body),
                                                                   motif_max_offset)
            motif_pos = int(rng.integers(0, limit + 1))
            body = body[:motif_pos] + motif + body[motif_pos:]
        return body, motif_pos

    def instantiate(template, motif_pos, vulnerable):
        # members of a family differ by length-preserving patches, the way
        # redeployments of one source differ in embedded constants
        protected = (motif_pos, motif_pos + len(motif)) if vulnerable else None
        while True:
            body = list(template)
            for _ in range(int(rng.integers(2, 7))):
                if len(body) < 8:
                    break
                seg = min(int(rng.integers(3, 13)), len(body) // 2)
                for _ in range(8):  # keep patches off the motif span
                    p = int(rng.integers(0, len(body) - seg + 1))
                    if protected is None or (p + seg <= protected[0]
                                             or p >= protected[1]):
                        body[p:p + seg] = noise(seg)
                        break
            if _contains(body, motif_bytes) == vulnerable:
                return body

    def build_class(count, vulnerable):
        bodies = []
        while len(bodies) < count:
            template, motif_pos = make_template(vulnerable)
            for _ in range(min(family_size, count - len(bodies))):
                bodies.append(instantiate(template, motif_pos, vulnerable))
        return bodies

    records = []
    for body, vulnerable in (
            [(b, True) for b in build_class(n_vul, True)]
            + [(b, False) for b in build_class(n - n_vul, False)]):
        address = "0x" + bytes(rng.integers(0, 256, size=20).tolist()).hex()
        seq = OpcodeSequence(tokens=body,
                             mnemonics=[table.mnemonic(t) for t in body],
                             raw_len=len(body))
        records.append(ContractRecord.from_category(
            address, seq, Category.SUICIDAL if vulnerable else Category.NONE))

    order = rng.permutation(n)
    return [records[i] for i in order]


# --- JSONL corpus and manifest I/O --------------------------------------

def record_to_json(rec: ContractRecord) -> dict:
    return {"address": rec.address, "tokens": rec.tokens.tokens,
            "category": rec.category.value}


def record_from_json(obj: dict, table: InstructionTable | None = None) -> ContractRecord:
    table = table or default_table()
    if "tokens" in obj:
        tokens = [int(t) for t in obj["tokens"]]
        seq = OpcodeSequence(tokens=tokens,
                             mnemonics=[table.mnemonic(t) for t in tokens],
                             raw_len=len(tokens))
    elif "bytecode_hex" in obj:
        seq = disassemble(parse_hex(obj["bytecode_hex"]), table)
    else:
        raise OpscanError("record needs either 'tokens' or 'bytecode_hex'")
    return ContractRecord.from_category(obj.get("address", ""), seq,
                                        obj.get("category", "none"))


def write_corpus(records: list, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_json(rec)) + "\n")


def read_corpus(path, table: InstructionTable | None = None) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(record_from_json(json.loads(line), table))
            except (json.JSONDecodeError, OpscanError, KeyError, ValueError) as exc:
                raise OpscanError(f"{path}:{lineno}: {exc}") from exc
    return records


def split_manifest(split: DatasetSplit, fractions=(0.64, 0.16, 0.20)) -> dict:
    return {
        "seed": split.seed,
        "fractions": list(fractions),
        "splits": {
            "train": [r.address for r in split.train],
            "validation": [r.address for r in split.validation],
            "test": [r.address for r in split.test],
        },
    }
