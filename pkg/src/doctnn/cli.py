"""Command-line entry point: gen-corpus, train, recognize, eval, inspect."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .documents import CorpusError, DocumentInstance, load_corpus, save_corpus
from .evaluation import build_report, render_report, report_to_dict
from .generator import GenSpec, Noise, generate
from .mlp import MlpModel, load_mlp, train_mlp
from .network import ModelFormatError, TnnModel, train_tnn
from .recognizer import RecognizerParams, recognize
from .topology import NetworkConfig, TopologyError, default_config, load_config

ERROR_PREFIX = "error:"


def _fail(message: str) -> int:
    print(f"{ERROR_PREFIX} {message}", file=sys.stderr)
    return 1


def _counts(text: str) -> dict[str, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated counts")
    try:
        values = [int(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"counts must be integers: {exc}") from exc
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("counts must be non-negative")
    return dict(zip(("invoice", "form", "letter"), values))


def _load_config_arg(path: str | None) -> NetworkConfig:
    return load_config(path) if path else default_config()


def _recognizer_params(args: argparse.Namespace) -> RecognizerParams:
    return RecognizerParams(
        tau_accept=args.tau_accept,
        tau_margin=args.tau_margin,
        tau_struct=args.tau_struct,
        max_passes=args.max_passes,
    )


def _add_recognizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau-accept", type=float, default=0.6)
    parser.add_argument("--tau-margin", type=float, default=0.15)
    parser.add_argument("--tau-struct", type=float, default=0.5)
    parser.add_argument("--max-passes", type=int, default=3)


def _pick_document(docs: list[DocumentInstance], doc_id: str | None) -> DocumentInstance:
    if doc_id is not None:
        for doc in docs:
            if doc.id == doc_id:
                return doc
        raise CorpusError(f"document id '{doc_id}' not found")
    if len(docs) == 1:
        return docs[0]
    raise CorpusError(f"corpus holds {len(docs)} documents; pass --id to pick one")


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    noise = Noise(jitter=args.jitter, drop_rate=args.drop, distort_rate=args.distort)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for split, counts, seed_offset in (
        ("train", args.train, 0),
        ("test", args.test, 1),
    ):
        spec = GenSpec(seed=args.seed + seed_offset, counts=counts, noise=noise)
        docs = generate(spec)
        path = out_dir / f"{split}.json"
        save_corpus(docs, path)
        summary = ", ".join(f"{counts[c]} {c}" for c in ("invoice", "form", "letter"))
        print(f"{split}: wrote {len(docs)} documents ({summary}) to {path}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config_arg(args.config)
    if args.mu is not None or args.epsilon is not None or args.max_epochs is not None:
        hp = replace(
            config.hyperparams,
            **{
                k: v
                for k, v in (
                    ("mu", args.mu),
                    ("epsilon", args.epsilon),
                    ("max_epochs", args.max_epochs),
                )
                if v is not None
            },
        )
        config = NetworkConfig(config.topology, config.extractors, hp)
    docs = load_corpus(args.corpus, config.topology)
    if args.network == "tnn":
        model = TnnModel.create(config, seed=args.seed)
        summary = train_tnn(model, docs)
        model.save(args.out)
        stats = " ".join(
            f"nn1[{i}]: epochs={s.epochs} mse={s.final_mse:.5f}"
            for i, s in enumerate(summary.stats)
        )
        print(
            f"trained tnn on {len(docs)} documents; {stats}; "
            f"update passes={summary.total_update_passes}; wrote {args.out}"
        )
    else:
        model = MlpModel.create(config, seed=args.seed)
        stats = train_mlp(model, docs)
        model.save(args.out)
        print(
            f"trained mlp on {len(docs)} documents; epochs={stats.epochs} "
            f"mse={stats.final_mse:.5f} backward passes={stats.backward_passes}; "
            f"wrote {args.out}"
        )
    return 0


def cmd_recognize(args: argparse.Namespace) -> int:
    model = TnnModel.load(args.model)
    docs = load_corpus(args.doc, model.topology)
    doc = _pick_document(docs, args.id)
    result = recognize(model, doc, _recognizer_params(args))
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    tnn_model = TnnModel.load(args.tnn)
    mlp_model = load_mlp(args.mlp) if args.mlp else None
    test_docs = load_corpus(args.test, tnn_model.topology)
    mlp_test_docs = list(test_docs)
    if args.reuse_training_samples:
        if not args.train:
            return _fail("--reuse-training-samples requires --train")
        train_docs = load_corpus(args.train, tnn_model.topology)
        mlp_test_docs = train_docs + [
            DocumentInstance(id=f"test-{d.id}", tokens=d.tokens, labels=d.labels)
            for d in test_docs
        ]
    report = build_report(
        tnn_model,
        test_docs,
        _recognizer_params(args),
        mlp_model=mlp_model,
        mlp_test_docs=mlp_test_docs if mlp_model else None,
    )
    print(render_report(report), end="")
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        print(f"wrote {args.json_out}")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    model = TnnModel.load(args.model)
    docs = load_corpus(args.doc, model.topology)
    doc = _pick_document(docs, args.id)
    result = recognize(model, doc, _recognizer_params(args))
    if args.json:
        print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
        return 0
    print(f"document: {doc.id}")
    for number, record in enumerate(result.passes, start=1):
        print(f"pass {number}:")
        raised = {n: lvl for n, lvl in record.levels.items() if lvl > 1}
        print(f"  levels raised: {raised if raised else 'none'}")
        docs_ranked = sorted(record.trace.documents.items(), key=lambda kv: -kv[1])
        ranked = ", ".join(f"{n}={v:.3f}" for n, v in docs_ranked)
        print(f"  class votes: {ranked}")
        if record.blamed:
            print(f"  blamed for refinement: {', '.join(record.blamed)}")
    print(f"status: {result.status}")
    if result.winning_class:
        print(f"class: {result.winning_class} (confidence {result.confidence:.3f}, "
              f"margin {result.margin:.3f})")
    else:
        print(f"confidence {result.confidence:.3f}, margin {result.margin:.3f}")
    if result.structures:
        shown = ", ".join(
            f"{s.name}={s.activation:.3f}{'*' if s.linked_to_winner else ''}"
            for s in result.structures
        )
        print(f"structures (* = votes for winner): {shown}")
    else:
        print("structures: none above threshold")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doctnn",
        description="Recognize administrative document classes and structure "
        "from token layouts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="write synthetic train/test corpus files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train", type=_counts, default="40,36,26",
                   help="invoice,form,letter counts")
    p.add_argument("--test", type=_counts, default="120,90,40")
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--drop", type=float, default=0.0)
    p.add_argument("--distort", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("train", help="train a model on a labeled corpus")
    p.add_argument("network", choices=("tnn", "mlp"))
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recognize", help="classify one document and print the result")
    p.add_argument("--model", required=True)
    p.add_argument("--doc", required=True, help="corpus file holding the document")
    p.add_argument("--id", default=None)
    _add_recognizer_flags(p)
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("eval", help="evaluate trained models on a test corpus")
    p.add_argument("--tnn", required=True)
    p.add_argument("--mlp", default=None)
    p.add_argument("--test", required=True)
    p.add_argument("--train", default=None)
    p.add_argument(
        "--reuse-training-samples",
        action="store_true",
        help="also feed the training documents to the baseline at test time",
    )
    p.add_argument("--json-out", default=None)
    _add_recognizer_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="show the pass-by-pass trace for one document")
    p.add_argument("--model", required=True)
    p.add_argument("--doc", required=True)
    p.add_argument("--id", default=None)
    p.add_argument("--json", action="store_true")
    _add_recognizer_flags(p)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, TopologyError, ModelFormatError, ValueError) as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"{exc}")


if __name__ == "__main__":
    sys.exit(main())
