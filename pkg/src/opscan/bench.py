"""Per-contract analysis latency across opcode-length buckets.

Each bucket times the full scan path (disassemble -> pad/truncate ->
embed -> LSTM forward) on synthetic contracts of a given raw opcode
length.  Because inputs are truncated to the model window, classifier
work is length-independent; only the linear-time disassembly grows, so
the curve should stay nearly flat.
"""

import json
import platform
import time
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import kernels
from .dataset import pad_or_truncate
from .evm import assemble, default_table, disassemble
from .model.network import forward
from .model.params import ModelParams

DEFAULT_BUCKETS = (500, 1000, 1500, 2000, 4000, 8000, 12000, 20000, 25000)
SAMPLES_PER_BUCKET = 5


@dataclass
class BucketResult:
    length: int
    mean_seconds: float
    std_seconds: float
    n: int
    forward_mean_seconds: float

    def as_dict(self):
        return {"length": self.length, "mean_seconds": self.mean_seconds,
                "std_seconds": self.std_seconds, "n": self.n,
                "forward_mean_seconds": self.forward_mean_seconds}


@dataclass
class BenchReport:
    buckets: list
    machine: str
    backend: str
    timestamp: str
    seed: int

    def as_dict(self):
        return {"machine": self.machine, "backend": self.backend,
                "timestamp": self.timestamp, "seed": self.seed,
                "buckets": [b.as_dict() for b in self.buckets]}

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.as_dict(), fh, indent=2)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("length,mean_s,std_s\n")
            for b in self.buckets:
                fh.write(f"{b.length},{b.mean_seconds},{b.std_seconds}\n")


def _machine_descriptor() -> str:
    return (f"{platform.machine()} {platform.system()} "
            f"python {platform.python_version()}")


def _synthesize_bytecode(length: int, rng, table) -> bytes:
    alphabet = np.array(table.sequence_token_ids(), dtype=np.int64)
    tokens = alphabet[rng.integers(0, len(alphabet), size=length)].tolist()
    return assemble(tokens, table, rng=rng)


def scan_once(params: ModelParams, code: bytes, table=None):
    """One full analysis; returns (probability, total_seconds, forward_seconds)."""
    table = table or default_table()
    t0 = time.perf_counter()
    seq = disassemble(code, table)
    padded = np.asarray(pad_or_truncate(seq.tokens, params.dims.max_len),
                        dtype=np.int64)
    t1 = time.perf_counter()
    a = forward(params, tokens=padded[None]).a[0]  # embed + LSTM + head
    t2 = time.perf_counter()
    return float(a), t2 - t0, t2 - t1


def run_bench(params: ModelParams, buckets=DEFAULT_BUCKETS, seed: int = 0,
              table=None) -> BenchReport:
    """Time SAMPLES_PER_BUCKET contracts per opcode-length bucket.

    A warm-up scan runs first (and once per bucket) so allocation and
    code-path warm-up never lands in the statistics.
    """
    table = table or default_table()
    rng = np.random.default_rng(seed)
    # global warm-up: first-call costs (BLAS thread pools, caches)
    scan_once(params, _synthesize_bytecode(64, rng, table), table)

    results = []
    for length in buckets:
        codes = [_synthesize_bytecode(length, rng, table)
                 for _ in range(SAMPLES_PER_BUCKET)]
        scan_once(params, codes[0], table)  # per-bucket warm-up, excluded
        totals = []
        forwards = []
        for code in codes:
            _, total_s, fwd_s = scan_once(params, code, table)
            totals.append(total_s)
            forwards.append(fwd_s)
        results.append(BucketResult(
            length=length,
            mean_seconds=float(np.mean(totals)),
            std_seconds=float(np.std(totals)),
            n=SAMPLES_PER_BUCKET,
            forward_mean_seconds=float(np.mean(forwards)),
        ))
    return BenchReport(buckets=results, machine=_machine_descriptor(),
                       backend=kernels.backend_name(),
                       timestamp=datetime.now(timezone.utc).isoformat(),
                       seed=seed)
