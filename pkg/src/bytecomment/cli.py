"""Command-line interface: ``bytecomment <subcommand> ...``.

Exit codes: 0 success, 2 input error, 3 numeric fault. Errors are reported
on stderr as one JSON object with ``error`` (category) and ``message``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import __version__
from .cfg import build_cfg, extract_functions, format_cfg, serialize_cfg, to_dot
from .corpus import (
    DatasetSplit,
    dedup,
    format_selector,
    ingest,
    read_entries,
    read_jsonl,
    split,
    write_entries,
)
from .evm import disassemble, format_listing, parse_hex, strip_metadata
from .exceptions import BytecommentError, InputError, NumericFault
from .metrics import evaluate
from .model import CommentGenerator
from .pipeline import Bm25Retriever, BytecodeCommenter
from .retrieval import Bm25Index, build_index

logger = logging.getLogger("bytecomment")

RETRIEVAL_DEFAULTS: Dict[str, Any] = {
    "k1": 1.2,
    "b": 0.75,
    "topk": 1,
    "exclude_self": True,
    "method": "bm25",
}
MODEL_DEFAULTS: Dict[str, Any] = CommentGenerator().get_params()


# -- helpers ------------------------------------------------------------------


def _require(path: Optional[str], what: str) -> Optional[Path]:
    if path is None or path == "-":
        return None
    p = Path(path)
    if not p.exists():
        raise InputError(f"{what} not found: {path}")
    return p


def _read_text(path: Optional[str]) -> str:
    p = _require(path, "input file")
    return sys.stdin.read() if p is None else p.read_text(encoding="utf-8")


def load_config(args: argparse.Namespace) -> Dict[str, Any]:
    """Built-in defaults, overridden by ``--config`` file, overridden by flags."""
    cfg = {**MODEL_DEFAULTS, **RETRIEVAL_DEFAULTS}
    if args.config:
        path = _require(args.config, "config file")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"config {args.config}: {exc}") from None
        unknown = set(data) - set(cfg)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(data)
    flags = {
        "seed": args.seed,
        "topk": args.topk,
        "coverage_weight": args.coverage_weight,
        "beam_k": args.beam,
    }
    for key in list(MODEL_DEFAULTS) + list(RETRIEVAL_DEFAULTS):
        value = getattr(args, key, None)
        if value is not None:
            flags[key] = value
    cfg.update({k: v for k, v in flags.items() if v is not None})
    return cfg


def _generator_params(cfg: Dict[str, Any]) -> Dict[str, Any]:
    return {k: cfg[k] for k in MODEL_DEFAULTS}


def _retrieval_params(cfg: Dict[str, Any]) -> Dict[str, Any]:
    return {k: cfg[k] for k in RETRIEVAL_DEFAULTS}


def _load_split(corpus: Path, manifest: Optional[str]):
    entries = read_entries(corpus)
    if manifest is None:
        return entries, None
    path = _require(manifest, "split manifest")
    return entries, DatasetSplit.from_manifest(json.loads(path.read_text(encoding="utf-8")), entries)


def _partition(entries, parts: Optional[DatasetSplit], name: str):
    if name == "all" or parts is None:
        return entries
    return getattr(parts, name)


def _load_index(path: Optional[str]) -> Optional[Bm25Index]:
    p = _require(path, "index")
    return None if p is None else Bm25Index.load(p)


def _load_model(args, cfg) -> BytecodeCommenter:
    ckpt = _require(args.checkpoint, "checkpoint")
    generator = CommentGenerator.load(ckpt)
    saved = generator.checkpoint_meta_.get("retrieval", {})
    retrieval = {**RETRIEVAL_DEFAULTS, **saved}
    if args.topk is not None:
        retrieval["topk"] = args.topk
    if getattr(args, "exclude_self", None) is not None:
        retrieval["exclude_self"] = args.exclude_self
    if args.beam is not None:
        generator.set_params(beam_k=args.beam)
    index_path = args.index
    if index_path is None:
        # fall back to the index the checkpoint was trained with, so that
        # inference sees the same kind of input as training did
        saved_index = generator.checkpoint_meta_.get("index")
        if saved_index and Path(saved_index).exists():
            index_path = saved_index
        elif saved_index and retrieval["topk"]:
            logger.warning("training index %s not found; generating without retrieval", saved_index)
    index = _load_index(index_path)
    retriever = Bm25Retriever.from_index(index, **retrieval)
    model = BytecodeCommenter(retriever, generator)
    model.retriever_, model.generator_ = retriever, generator
    return model


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# -- commands -------------------------------------------------------------------


def cmd_disasm(args, cfg) -> int:
    raw = parse_hex(_read_text(args.input))
    if not args.no_strip:
        raw = strip_metadata(raw)
    _write(args.out, format_listing(disassemble(raw)))
    return 0


def cmd_cfg(args, cfg) -> int:
    graph = build_cfg(_read_text(args.input), strip=not args.no_strip)
    if args.dot:
        _write(args.out, to_dot(graph))
        return 0
    lines = [format_cfg(graph)]
    for fn in extract_functions(graph):
        lines.append(f"FUNCTION {fn.name} {fn.entry} {' '.join(serialize_cfg(fn))}\n")
    for bid, msg in graph.diagnostics:
        logger.info("block %d: %s", bid, msg)
    _write(args.out, "".join(lines))
    return 0


def cmd_prepare(args, cfg) -> int:
    src = _require(args.input, "raw corpus")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = ingest(read_jsonl(src), n_jobs=args.n_jobs)
    entries = dedup(report.entries)
    parts = split(entries, seed=cfg["seed"])
    write_entries(entries, out / "corpus.jsonl")
    (out / "split.json").write_text(json.dumps(parts.manifest(), indent=1) + "\n", encoding="utf-8")
    summary = {
        "seed": cfg["seed"],
        "records": report.n_records,
        "skipped": [{"record": i, "reason": r} for i, r in report.skipped],
        "entries": len(report.entries),
        "unique": len(entries),
        "train": len(parts.train),
        "valid": len(parts.valid),
        "test": len(parts.test),
    }
    (out / "prepare.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps({k: v for k, v in summary.items() if k != "skipped"} | {"skipped": len(report.skipped)}, sort_keys=True))
    return 0


def cmd_index(args, cfg) -> int:
    corpus = _require(args.corpus, "corpus")
    entries, parts = _load_split(corpus, args.split)
    docs = _partition(entries, parts, args.partition)
    index = build_index(docs, cfg["k1"], cfg["b"])
    index.meta = {"seed": cfg["seed"], "partition": args.partition if parts else "all"}
    index.save(args.out)
    print(json.dumps({"documents": index.N, "tokens": len(index.postings), "avgdl": round(index.avgdl, 4)}))
    return 0


def cmd_train(args, cfg) -> int:
    corpus = _require(args.corpus, "corpus")
    entries, parts = _load_split(corpus, args.split)
    train = _partition(entries, parts, "train")
    valid = parts.valid if parts is not None and parts.valid else None
    index = _load_index(args.index)
    index_path = args.index
    retrieval = _retrieval_params(cfg)
    if index is None:
        index = build_index(train, cfg["k1"], cfg["b"])
        index.meta = {"seed": cfg["seed"], "partition": "train"}
        index_path = str(args.out) + ".index.json"
        index.save(index_path)
    retriever = Bm25Retriever.from_index(index, **retrieval)
    generator = CommentGenerator(**_generator_params(cfg))
    model = BytecodeCommenter(retriever, generator)
    log_path = Path(args.log or str(args.out) + ".log.jsonl")
    meta = {"seed": cfg["seed"], "retrieval": retrieval, "corpus": str(corpus),
            "index": str(Path(index_path).resolve())}
    with open(log_path, "w", encoding="utf-8") as log_fh:

        def log(event: Dict) -> None:
            if event["event"] != "step" or args.log_steps:
                log_fh.write(json.dumps({"seed": cfg["seed"], **event}, sort_keys=True) + "\n")
            if event["event"] == "epoch" and args.verbose:
                print(json.dumps(event, sort_keys=True), file=sys.stderr)

        try:
            model.fit(train, X_val=valid, log=log)
        except NumericFault:
            generator.save(args.out, **meta, diverged=True)
            raise
    generator.save(args.out, **meta, best_epoch=generator.best_epoch_)
    print(json.dumps({"checkpoint": str(args.out), "best_epoch": generator.best_epoch_,
                      "best_val_bleu4": round(generator.best_val_bleu4_, 2), "seed": cfg["seed"]}))
    return 0


def cmd_generate(args, cfg) -> int:
    model = _load_model(args, cfg)
    if args.cfg_seq is not None:
        [comment] = model.predict([args.cfg_seq.split()])
        _write(args.out, " ".join(comment) + "\n")
        return 0
    rows = model.generate(_read_text(args.input), strip_metadata=not args.no_strip)
    _write(args.out, "".join(f"{format_selector(sel)}\t{' '.join(c)}\n" for sel, c in rows))
    return 0


def cmd_evaluate(args, cfg) -> int:
    model = _load_model(args, cfg)
    corpus = _require(args.corpus, "corpus")
    entries, parts = _load_split(corpus, args.split)
    data = _partition(entries, parts, args.partition)
    hyps = model.predict(data)
    report = evaluate(hyps, [list(e.comment_tokens) for e in data], [e.entry_id for e in data],
                      pooled_bleu=args.pooled_bleu)
    seed = model.generator_.checkpoint_meta_.get("seed")
    if args.out:
        Path(args.out).write_text(report.to_json(seed=seed, partition=args.partition) + "\n", encoding="utf-8")
    if args.table:
        Path(args.table).write_text(report.to_table(), encoding="utf-8")
    header, corpus_row = report.to_table().splitlines()[:2]
    sys.stdout.write(f"{header}\n{corpus_row}\n")
    return 0


# -- parser -----------------------------------------------------------------------


def _bool_flag(p: argparse.ArgumentParser, name: str, dest: str, help: str) -> None:
    p.add_argument(f"--{name}", dest=dest, action="store_true", default=None, help=help)


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model hyperparameters (override --config)")
    for key, default in MODEL_DEFAULTS.items():
        if key in ("seed", "coverage_weight", "beam_k"):
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            g.add_argument(flag, dest=key, type=lambda s: s.lower() in ("1", "true", "yes"), default=None)
        elif default is None or isinstance(default, int):
            g.add_argument(flag, dest=key, type=int, default=None)
        elif isinstance(default, float):
            g.add_argument(flag, dest=key, type=float, default=None)
        else:
            g.add_argument(flag, dest=key, default=None)


def _retrieval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--method", choices=("bm25", "bow"), default=None)
    p.add_argument("--no-exclude-self", dest="exclude_self", action="store_false", default=None,
                   help="let training entries retrieve their own comment")


def _global_flags(p: argparse.ArgumentParser, default: Any) -> None:
    # subcommands use SUPPRESS so values given before the subcommand survive
    p.add_argument("--config", default=default, help="JSON key-value configuration file")
    p.add_argument("--seed", type=int, default=default)
    p.add_argument("--topk", type=int, default=default, help="retrieved comments per input (0 disables)")
    p.add_argument("--lambda", dest="coverage_weight", type=float, default=default, help="coverage loss weight")
    p.add_argument("--beam", type=int, default=default, help="beam width")
    p.add_argument("-v", "--verbose", action="store_true", default=False if default is None else default)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="bytecomment", description=__doc__.split("\n")[0])
    _global_flags(parser, None)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("disasm", parents=[common], help="disassemble hex bytecode")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--no-strip", action="store_true", help="keep the metadata trailer")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_disasm)

    p = sub.add_parser("cfg", parents=[common], help="recover CFG and per-function sequences")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--no-strip", action="store_true")
    p.add_argument("--dot", action="store_true", help="emit Graphviz DOT instead")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_cfg)

    p = sub.add_parser("prepare", parents=[common], help="ingest, dedup and split a raw corpus")
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--n-jobs", type=int, default=None)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("index", parents=[common], help="build a BM25 index")
    p.add_argument("corpus")
    p.add_argument("--split")
    p.add_argument("--partition", default="train", choices=("train", "valid", "test", "all"))
    p.add_argument("-o", "--out", required=True)
    _retrieval_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("train", parents=[common], help="train the comment generator")
    p.add_argument("corpus")
    p.add_argument("--split", help="split manifest; without it every entry is used for training")
    p.add_argument("--index", help="BM25 index (default: built from the training partition)")
    p.add_argument("-o", "--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="JSON-lines training log (default <out>.log.jsonl)")
    p.add_argument("--log-steps", action="store_true", help="also log every optimizer step")
    _retrieval_flags(p)
    _model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", parents=[common], help="comment every function of a contract")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--index")
    p.add_argument("--cfg-seq", help="CFG token sequence instead of bytecode")
    p.add_argument("--no-strip", action="store_true")
    p.add_argument("--no-exclude-self", dest="exclude_self", action="store_false", default=None)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", parents=[common], help="score a checkpoint on a corpus partition")
    p.add_argument("corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--index")
    p.add_argument("--split")
    p.add_argument("--partition", default="test", choices=("train", "valid", "test", "all"))
    p.add_argument("--pooled-bleu", action="store_true")
    p.add_argument("--no-exclude-self", dest="exclude_self", action="store_false", default=None)
    p.add_argument("-o", "--out", help="JSON report path")
    p.add_argument("--table", help="tab-separated report path")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return args.func(args, cfg)
    except BytecommentError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(json.dumps({"error": "InputError", "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
