"""Command line interface.

Subcommands: disasm, prep, train, eval, scan, bench (plus gen, which
makes the desk-scale synthetic corpora the other commands consume).
Every option can also come from a flat key=value config file; explicit
flags win over the file, the file wins over built-in defaults.

Exit codes: 0 success, 1 input error, 2 internal error.
"""

import argparse
import json
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import bench as bench_mod
from . import dataset, evm, kernels, metrics, prep
from .errors import OpscanError
from .model import train as train_mod
from .model.checkpoint import load_checkpoint, save_checkpoint
from .model.network import predict_in_chunks
from .model.params import ModelDims, init_params
from .encoding import EmbeddingMatrix


@dataclass
class RunConfig:
    max_len: int = 1600
    embed_dim: int = 150
    hidden1: int = 128
    hidden2: int = 64
    batch_size: int = 256
    epochs: int = 256
    lr: float = 1e-3
    clip_norm: float = 5.0
    smote_k: int = 5
    threshold: float = 0.5
    seed: int = 0
    max_invalid_fraction: float = 0.0
    balance_total: int | None = None
    patience: int | None = None


CONFIG_TYPES = {
    "max_len": int, "embed_dim": int, "hidden1": int, "hidden2": int,
    "batch_size": int, "epochs": int, "lr": float, "clip_norm": float,
    "smote_k": int, "threshold": float, "seed": int,
    "max_invalid_fraction": float, "balance_total": int, "patience": int,
}


def load_config_file(path) -> dict:
    """Flat key=value lines; '#' starts a comment; keys match RunConfig fields."""
    types = CONFIG_TYPES
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise OpscanError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise OpscanError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = types[key](value)
            except ValueError as exc:
                raise OpscanError(f"{path}:{lineno}: {exc}") from exc
    return values


def resolve_config(args) -> RunConfig:
    """defaults < config file < explicit CLI flags."""
    merged = {}
    if getattr(args, "config", None):
        merged.update(load_config_file(args.config))
    for f in fields(RunConfig):
        cli_value = getattr(args, f.name, None)
        if cli_value is not None:
            merged[f.name] = cli_value
    return RunConfig(**merged)


def _add_config_options(parser, names):
    parser.add_argument("--config", help="key=value config file")
    option = {
        "max_len": ("--max-len", int), "embed_dim": ("--embed-dim", int),
        "hidden1": ("--hidden1", int), "hidden2": ("--hidden2", int),
        "batch_size": ("--batch-size", int), "epochs": ("--epochs", int),
        "lr": ("--lr", float), "clip_norm": ("--clip-norm", float),
        "smote_k": ("--smote-k", int), "threshold": ("--threshold", float),
        "seed": ("--seed", int),
        "max_invalid_fraction": ("--max-invalid-fraction", float),
        "balance_total": ("--balance-total", int),
        "patience": ("--patience", int),
    }
    for name in names:
        flag, typ = option[name]
        parser.add_argument(flag, dest=name, type=typ, default=None)


# --- subcommands ---------------------------------------------------------

def _iter_disasm_inputs(path):
    """Yield (address, code bytes) from a JSONL corpus or a hex text file."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.read(1)
        fh.seek(0)
        if first == "{":
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    yield obj.get("address", f"line{lineno}"), evm.parse_hex(
                        obj["bytecode_hex"])
                except (json.JSONDecodeError, KeyError, OpscanError) as exc:
                    raise OpscanError(f"{path}:{lineno}: {exc}") from exc
        else:
            try:
                yield path, evm.parse_hex(fh.read())
            except OpscanError as exc:
                raise OpscanError(f"{path}: {exc}") from exc


def cmd_disasm(args) -> int:
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for address, code in _iter_disasm_inputs(args.input):
            seq = evm.disassemble(code)
            out.write(json.dumps({"address": address, "mnemonics": seq.mnemonics,
                                  "tokens": seq.tokens, "raw_len": seq.raw_len})
                      + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_gen(args) -> int:
    config = resolve_config(args)
    motif = None
    if args.motif:
        motif = evm.to_token_ids([m.strip().upper() for m in args.motif.split(",")])
    lo, hi = (int(v) for v in args.length_range.split(","))
    records = dataset.generate_synthetic_corpus(
        args.n, args.vulnerable_fraction, motif=motif, seed=config.seed,
        length_range=(lo, hi), motif_max_offset=args.motif_max_offset)
    dataset.write_corpus(records, args.out)
    n_vul = sum(r.label for r in records)
    print(f"wrote {len(records)} contracts ({n_vul} vulnerable) to {args.out}")
    return 0


def cmd_prep(args) -> int:
    config = resolve_config(args)
    records = dataset.read_corpus(args.corpus)
    data = prep.prepare(records, seed=config.seed, max_len=config.max_len,
                        embed_dim=config.embed_dim, smote_k=config.smote_k,
                        balance_total=config.balance_total,
                        max_invalid_fraction=config.max_invalid_fraction)
    prep.save_prepared(data, args.out_dir)
    bal = data.report["balanced_train"]
    print(f"prepared {args.out_dir}: train {bal['vulnerable']}+{bal['clean']} "
          f"(of which {bal['synthetic_rows']} synthetic), "
          f"val {len(data.val_labels)}, test {len(data.test_labels)}")
    return 0


def cmd_train(args) -> int:
    config = resolve_config(args)
    arrays, meta = prep.load_prepared(args.data)
    dims = ModelDims(vocab_size=int(meta["vocab_size"]),
                     embed_dim=int(meta["embed_dim"]),
                     hidden1=config.hidden1, hidden2=config.hidden2,
                     max_len=int(meta["max_len"]))
    params = init_params(dims, seed=config.seed,
                         embedding=EmbeddingMatrix(values=arrays["embedding"]))
    train_set = train_mod.TrainSet(
        tokens=arrays["train_tokens"],
        token_labels=arrays["train_token_labels"],
        vectors=arrays["train_vectors"],
        vector_labels=arrays["train_vector_labels"])
    tc = train_mod.TrainConfig(
        epochs=config.epochs, batch_size=config.batch_size, lr=config.lr,
        clip_norm=config.clip_norm, seed=config.seed,
        early_stop_patience=config.patience, threshold=config.threshold,
        verbose=not args.quiet)
    best, history = train_mod.train(params, train_set, arrays["val_tokens"],
                                    arrays["val_labels"], config=tc)
    save_checkpoint(best, args.checkpoint)
    if args.history:
        train_mod.write_history_csv(history, args.history)
    if args.report:
        val_loss, val_acc, _ = train_mod.evaluate(best, arrays["val_tokens"],
                                                  arrays["val_labels"],
                                                  threshold=config.threshold)
        payload = {"epochs_run": len(history), "val_loss": val_loss,
                   "val_acc": val_acc, "num_params": best.num_params(),
                   "backend": kernels.backend_name(),
                   "checkpoint": str(args.checkpoint)}
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    print(f"trained {len(history)} epochs; checkpoint -> {args.checkpoint}")
    return 0


def _eval_from_predictions(path):
    preds, labels, scores_ = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                preds.append(int(obj["pred"]))
                labels.append(int(obj["label"]))
                if "score" in obj:
                    scores_.append(float(obj["score"]))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise OpscanError(f"{path}:{lineno}: {exc}") from exc
    score_values = scores_ if len(scores_) == len(preds) else None
    return np.array(preds), np.array(labels), score_values


def cmd_eval(args) -> int:
    config = resolve_config(args)
    if args.pred_file:
        preds, labels, score_values = _eval_from_predictions(args.pred_file)
    else:
        if not (args.checkpoint and args.data):
            raise OpscanError("eval needs either --pred-file or "
                              "--checkpoint with --data")
        params = load_checkpoint(args.checkpoint)
        arrays, _ = prep.load_prepared(args.data)
        key = {"validation": ("val_tokens", "val_labels"),
               "test": ("test_tokens", "test_labels")}[args.split]
        tokens, labels = arrays[key[0]], arrays[key[1]].astype(np.int64)
        preds, score_values = predict_in_chunks(params, tokens,
                                                threshold=config.threshold)
    cm, report, points = metrics.full_report(preds, labels, score_values)
    print(f"confusion tp={cm.tp} fp={cm.fp} fn={cm.fn} tn={cm.tn}")
    print(report.summary())
    if args.report:
        metrics.write_report_json(args.report, cm, report, points)
    if args.roc_csv and points is not None:
        metrics.write_roc_csv(args.roc_csv, points)
    return 0


def cmd_scan(args) -> int:
    config = resolve_config(args)
    params = load_checkpoint(args.checkpoint)
    results = []
    for path in args.inputs:
        for address, code in _iter_disasm_inputs(path):
            prob, _, _ = bench_mod.scan_once(params, code)
            label = int(prob >= config.threshold)
            results.append({"address": address, "probability": prob,
                            "label": label})
            print(f"{address}\t{prob:.6f}\t{'vulnerable' if label else 'clean'}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)
            fh.write("\n")
    return 0


def cmd_bench(args) -> int:
    config = resolve_config(args)
    params = load_checkpoint(args.checkpoint)
    buckets = tuple(int(v) for v in args.buckets.split(",")) if args.buckets \
        else bench_mod.DEFAULT_BUCKETS
    report = bench_mod.run_bench(params, buckets=buckets, seed=config.seed)
    for b in report.buckets:
        print(f"length {b.length:>6}: {b.mean_seconds * 1e3:8.2f} ms "
              f"+- {b.std_seconds * 1e3:6.2f} (forward "
              f"{b.forward_mean_seconds * 1e3:7.2f} ms, n={b.n})")
    if args.json:
        report.write_json(args.json)
    if args.csv:
        report.write_csv(args.csv)
    return 0


# --- parser / entry point -------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opscan",
        description="EVM opcode-sequence security threat scanner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("disasm", help="bytecode -> opcode token JSONL")
    p.add_argument("--in", dest="input", required=True,
                   help="hex text file or JSONL corpus")
    p.add_argument("--out", help="output JSONL (default stdout)")
    p.set_defaults(func=cmd_disasm)

    p = sub.add_parser("gen", help="generate a synthetic labeled corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--vulnerable-fraction", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.add_argument("--motif", help="comma-separated mnemonics")
    p.add_argument("--length-range", default="40,3000")
    p.add_argument("--motif-max-offset", type=int, default=None)
    _add_config_options(p, ["seed"])
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("prep", help="corpus -> splits + balanced tensors")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    _add_config_options(p, ["seed", "max_len", "embed_dim", "smote_k",
                            "balance_total", "max_invalid_fraction"])
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("train", help="train the classifier on prepared data")
    p.add_argument("--data", required=True, help="prep output directory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--history", help="per-epoch CSV")
    p.add_argument("--report", help="training report JSON")
    p.add_argument("--quiet", action="store_true")
    _add_config_options(p, ["seed", "hidden1", "hidden2", "batch_size",
                            "epochs", "lr", "clip_norm", "threshold",
                            "patience"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="metrics on a split or a prediction file")
    p.add_argument("--checkpoint")
    p.add_argument("--data", help="prep output directory")
    p.add_argument("--split", choices=["validation", "test"], default="test")
    p.add_argument("--pred-file", help="JSONL with pred/label/score fields")
    p.add_argument("--report", help="metrics JSON")
    p.add_argument("--roc-csv")
    _add_config_options(p, ["threshold"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scan", help="classify bytecode files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--json", help="results JSON")
    p.add_argument("inputs", nargs="+", help="hex text files or JSONL corpora")
    _add_config_options(p, ["threshold"])
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("bench", help="per-contract latency across length buckets")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--buckets", help="comma-separated raw opcode lengths")
    p.add_argument("--json")
    p.add_argument("--csv")
    _add_config_options(p, ["seed"])
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OpscanError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
