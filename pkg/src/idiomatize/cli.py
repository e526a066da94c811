"""Command-line interface.

Subcommands: ingest, train, transform, evaluate, gradcheck.

Exit codes: 0 success, 1 usage error, 2 data error (missing or
malformed files, bad configs/checkpoints), 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .checks import ALL_CHECKS
from .corpus import (
    CorpusError,
    SplitCorpus,
    build_vocab,
    load_lexicon,
    load_pairs,
    split_corpus,
)
from .extractor import ExtractorModel, train_extractor
from .generator import GeneratorModel, train_generator
from .numerics import NumericError
from .pipeline import (
    CheckpointError,
    Dataset,
    PipelineConfig,
    evaluate,
    generator_training_data,
    load_dataset,
    load_pipeline_models,
    save_checkpoint,
    transform,
    write_dataset,
)
from .retrieval import RetrievalModel, train_retrieval

GRADCHECK_TOLERANCE = 1e-4


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this CLI reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="idiomatize", description=__doc__)
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="split a parallel corpus and build the vocabulary")
    p.add_argument("--lexicon", required=True, help="idiom lexicon (jsonl)")
    p.add_argument("--pairs", required=True, help="parallel pairs (jsonl)")
    p.add_argument("--pairs-aug", help="augmented pairs appended to the train split (jsonl)")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--annotated",
        help="file of idiom ids (one per line) eligible for validation/test; default: all",
    )
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train", help="train one pipeline component")
    p.add_argument("component", choices=("retrieval", "extractor", "generator"))
    p.add_argument("--data", required=True, help="dataset directory from ingest")
    p.add_argument("--out", required=True, help="checkpoint path (json)")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=64, help="retrieval/extractor only")
    p.add_argument("--hidden", type=int, default=None, help="default: 64, generator 256")
    p.add_argument("--key", choices=("definition", "idiom"), default="definition",
                   help="retrieval only: candidate key")
    p.add_argument("--negatives", type=int, default=100,
                   help="retrieval only: negatives per positive")
    p.add_argument("--mode", choices=("guided", "unguided"), default="guided",
                   help="generator only")
    p.add_argument("--batch", type=int, default=32, help="instances per Adam step")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("transform", help="rewrite literal sentences (one per input line)")
    p.add_argument("--config", required=True, help="pipeline config (json)")
    p.add_argument("--lexicon", required=True, help="idiom lexicon (jsonl)")
    p.add_argument("--ckpt-dir", required=True,
                   help="directory with retrieval.json/extractor.json/generator.json")
    p.add_argument("--input", help="literal sentence; default: one sentence per stdin line")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("evaluate", help="score the pipeline on a dataset split")
    p.add_argument("--config", required=True, help="pipeline config (json)")
    p.add_argument("--data", required=True, help="dataset directory from ingest")
    p.add_argument("--ckpt-dir", required=True)
    p.add_argument("--split", choices=("train", "validation", "test"), default="test")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument("--module", choices=sorted(ALL_CHECKS), help="default: all three")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=GRADCHECK_TOLERANCE)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def _cmd_ingest(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    pairs = load_pairs(args.pairs, lexicon)
    aug = load_pairs(args.pairs_aug, lexicon) if args.pairs_aug else []
    if args.annotated:
        with open(args.annotated, encoding="utf-8") as fh:
            annotated = tuple(line.strip() for line in fh if line.strip())
        known = {e.id for e in lexicon}
        unknown = sorted(set(annotated) - known)
        if unknown:
            raise CorpusError(f"{args.annotated}: unknown idiom ids {unknown}")
    else:
        annotated = tuple(e.id for e in lexicon)
    split = split_corpus(pairs, annotated, args.seed)
    if aug:
        split = SplitCorpus(
            train=split.train + tuple(aug),
            validation=split.validation,
            test=split.test,
            seed=split.seed,
        )
    vocab = build_vocab(list(pairs) + list(aug), lexicon)
    dataset = Dataset(
        lexicon=lexicon, split=split, vocab=vocab, annotated_ids=annotated, seed=args.seed
    )
    write_dataset(args.out, dataset)
    logging.info(
        "wrote %s: train=%d validation=%d test=%d vocab=%d",
        args.out, len(split.train), len(split.validation), len(split.test), len(vocab),
    )
    return 0


def _cmd_train(args) -> int:
    ds = load_dataset(args.data)
    if args.component == "retrieval":
        hidden = args.hidden if args.hidden is not None else 64
        model = RetrievalModel(ds.vocab, embed_dim=args.embed_dim, hidden=hidden, seed=args.seed)
        train_retrieval(
            model, ds.split.train, ds.lexicon,
            epochs=args.epochs, negatives_per_positive=args.negatives, lr=args.lr,
            seed=args.seed, key_mode=args.key, validation=ds.split.validation,
            batch_size=args.batch,
        )
    elif args.component == "extractor":
        hidden = args.hidden if args.hidden is not None else 64
        model = ExtractorModel(ds.vocab, embed_dim=args.embed_dim, hidden=hidden, seed=args.seed)
        train_extractor(
            model, ds.split.train, ds.lexicon,
            epochs=args.epochs, lr=args.lr, seed=args.seed, validation=ds.split.validation,
            batch_size=args.batch,
        )
    else:
        hidden = args.hidden if args.hidden is not None else 256
        guided = args.mode == "guided"
        model = GeneratorModel(ds.vocab, hidden=hidden, guided=guided, seed=args.seed)
        train_generator(
            model,
            generator_training_data(ds.split.train, ds.lexicon, guided),
            epochs=args.epochs, batch_size=args.batch, lr=args.lr, seed=args.seed,
            validation=generator_training_data(ds.split.validation, ds.lexicon, guided),
        )
    parent = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(parent, exist_ok=True)
    save_checkpoint(model, args.out)
    logging.info("saved %s checkpoint to %s", args.component, args.out)
    return 0


def _cmd_transform(args) -> int:
    config = PipelineConfig.from_file(args.config)
    lexicon = load_lexicon(args.lexicon)
    models = load_pipeline_models(args.ckpt_dir, config)
    lines = [args.input] if args.input is not None else sys.stdin.readlines()
    for line in lines:
        line = line.strip()
        if not line:
            continue
        result = transform(models, lexicon, line, config)
        print(json.dumps(result.to_dict(), ensure_ascii=False))
    return 0


def _cmd_evaluate(args) -> int:
    config = PipelineConfig.from_file(args.config)
    ds = load_dataset(args.data)
    models = load_pipeline_models(args.ckpt_dir, config)
    pairs = getattr(ds.split, args.split)
    report = evaluate(models, pairs, ds.lexicon, config)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    _print_report_table(report)
    return 0


def _print_report_table(report) -> None:
    """Human-readable 0-100 scaled summary on stderr."""
    rows = [
        ("bleu", report.bleu),
        ("rouge1", report.rouge1),
        ("rouge2", report.rouge2),
        ("rougeL", report.rougeL),
        ("meteor", report.meteor),
        ("span_f1", report.span_f1),
        ("retrieval_acc", report.retrieval_accuracy),
        ("idiom_part_acc", report.idiom_part_acc),
        ("non_idiom_part_acc", report.non_idiom_part_acc),
    ]
    for level in sorted(report.by_rigidity, key=str):
        rows.append((f"bleu@rigidity={level}", report.by_rigidity[level]))
    width = max(len(name) for name, _ in rows)
    print(f"instances: {report.num_instances}", file=sys.stderr)
    for name, value in rows:
        print(f"{name:<{width}}  {100.0 * value:6.2f}", file=sys.stderr)


def _cmd_gradcheck(args) -> int:
    names = [args.module] if args.module else sorted(ALL_CHECKS)
    worst = 0.0
    for name in names:
        err = ALL_CHECKS[name](seed=args.seed)
        print(f"{name}: max relative gradient error {err:.3e}")
        worst = max(worst, err)
    if worst > args.tolerance:
        print(f"gradcheck failed: {worst:.3e} > {args.tolerance:.1e}", file=sys.stderr)
        return 3
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (CorpusError, CheckpointError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
