"""
Command-line interface: ``eurovoc <verb> [options]``.

Settings come from defaults and ``EUROVOC_*`` environment variables, then ``--config``, then
flags. Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import Config
from .corpus import (
    descriptor_stats,
    frequency_histogram,
    histogram_to_csv,
    load_corpus,
    multilingual_histogram,
    save_corpus,
    stats_to_json,
)
from .errors import EuroVocError
from .thesaurus import Level, load_thesaurus, validate_counts

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


class UsageError(Exception):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info("Wrote %s", out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_ingest(args, config: Config) -> int:
    t = load_thesaurus(args.thesaurus) if args.thesaurus else None
    corpus = load_corpus(args.corpus, args.language, require_labels=not args.unlabeled)
    if t is not None:
        unknown = sorted({code for doc in corpus for code in doc.labels if code not in t})
        if unknown:
            raise EuroVocError(f"{len(unknown)} labels missing from the thesaurus, e.g. {unknown[:5]}")
    if args.out:
        save_corpus(corpus, args.out)
    summary = {"language": corpus.language, "documents": len(corpus),
               "descriptors": len(corpus.label_codes())}
    if t is not None:
        summary["thesaurus"] = vars(validate_counts(t))
    _emit(json.dumps(summary, indent=2), None)
    return 0


def cmd_stats(args, config: Config) -> int:
    if len(args.language) != len(args.corpus):
        raise UsageError("give one --language per --corpus")
    t = load_thesaurus(args.thesaurus)
    corpora = [load_corpus(path, lang) for path, lang in zip(args.corpus, args.language)]
    if args.kind == "labels":
        stats = [descriptor_stats(c, t, level) for c in corpora for level in Level]
        _emit(stats_to_json(stats), args.out)
    elif args.kind == "histogram":
        level = Level.parse(args.level)
        if len(corpora) == 1:
            _emit(histogram_to_csv(frequency_histogram(corpora[0], t, level, args.group_size)), args.out)
        else:
            h = multilingual_histogram(corpora, t, level, args.group_size)
            rows = ["group_index,mean,std," + ",".join(h.languages)]
            for g in range(len(h.mean)):
                rows.append(",".join(
                    [str(g), f"{h.mean[g]:.4f}", f"{h.std[g]:.4f}"]
                    + [str(int(h.counts[i][g])) for i in range(len(h.languages))]
                ))
            _emit("\n".join(rows) + "\n", args.out)
    else:
        from .tokenization import load_vocabulary, vocab_stats_table, vocabulary_stats

        if not args.vocab or len(args.vocab) != len(corpora):
            raise UsageError("give one --vocab per --corpus")
        rows = []
        for c, vocab_path in zip(corpora, args.vocab):
            vocab = load_vocabulary(vocab_path, lowercase=config.lowercase)
            rows.append((c.language, vocabulary_stats(vocab, c)))
        _emit(vocab_stats_table(rows), args.out)
    return 0


def cmd_split(args, config: Config) -> int:
    from .stratify import SplitRatios, label_distribution_deviation, make_multi_splits, save_split_plans

    corpus = load_corpus(args.corpus, args.language)
    ratios = SplitRatios(tuple(config.ratios))
    plans = make_multi_splits(corpus, ratios, config.seeds)
    save_split_plans(plans, args.out)
    for plan in plans:
        logger.info("seed %d: sizes %s, label deviation %.4f", plan.seed,
                    [len(s) for s in plan.subsets], label_distribution_deviation(corpus, plan, ratios))
    return 0


def _plan(args):
    from .stratify import load_split_plans

    plans = load_split_plans(args.plans)
    if not 0 <= args.plan_index < len(plans):
        raise UsageError(f"--plan-index must be below {len(plans)}")
    return plans[args.plan_index]


def cmd_train_jex(args, config: Config) -> int:
    from .jex import build_signatures

    corpus = load_corpus(args.corpus, args.language)
    train = _plan(args).subset_corpus(corpus, 0) if args.plans else corpus
    model = build_signatures(train, config.signature_config())
    model.save(args.out)
    logger.info("Saved %d signatures over %d terms to %s", len(model.descriptors), len(model.terms), args.out)
    return 0


def cmd_train_head(args, config: Config) -> int:
    from .encoders import MeanEmbeddingEncoder
    from .head import save_head
    from .tokenization import load_vocabulary
    from .training import LabeledSet, label_matrix, train_head

    corpus = load_corpus(args.corpus, args.language)
    plan = _plan(args)
    if len(plan.subsets) < 2:
        raise UsageError("head training needs a plan with train and validation subsets")
    train, val = plan.subset_corpus(corpus, 0), plan.subset_corpus(corpus, 1)
    codes = train.label_codes()
    vocab = load_vocabulary(args.vocab, lowercase=config.lowercase, max_sequence=config.max_sequence)
    encoder = MeanEmbeddingEncoder(vocab, dim=args.dim, seed=args.seed)
    head, log = train_head(
        LabeledSet(list(train), label_matrix([d.labels for d in train], codes)),
        LabeledSet(list(val), label_matrix([d.labels for d in val], codes)),
        config.train_config(seed=args.seed),
        codes,
        encoder=encoder,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_head(head, out / "head.evhd")
    encoder.save(out / "encoder.npy")
    log.write_jsonl(out / "training_log.jsonl")
    logger.info("Best epoch %d of %d", log.best_epoch, len(log.records))
    return 0


def _ranker_factory(args, corpus, config: Config):
    from .ranking import HeadRanker, RandomRanker, SignatureRanker

    if args.model:
        from .jex import SignatureModel

        return SignatureRanker(SignatureModel.load(args.model))
    if args.head:
        from .encoders import MeanEmbeddingEncoder
        from .head import load_head
        from .tokenization import load_vocabulary

        if not args.encoder or not args.vocab:
            raise UsageError("--head needs --encoder and --vocab")
        vocab = load_vocabulary(args.vocab, lowercase=config.lowercase, max_sequence=config.max_sequence)
        return HeadRanker(load_head(args.head), MeanEmbeddingEncoder.load(args.encoder, vocab))
    if args.random:
        return RandomRanker(corpus.label_codes(), seed=args.seed)
    if args.jex:
        from .jex import build_signatures

        if not args.plans:
            raise UsageError("--jex needs --plans")

        return lambda plan: SignatureRanker(
            build_signatures(plan.subset_corpus(corpus, 0), config.signature_config())
        )
    raise UsageError("choose one of --model, --head, --random or --jex")


def cmd_eval(args, config: Config) -> int:
    from .metrics import evaluate_corpus, report_to_csv
    from .stratify import load_split_plans

    t = load_thesaurus(args.thesaurus)
    corpus = load_corpus(args.corpus, args.language)
    plans = load_split_plans(args.plans) if args.plans else None
    report = evaluate_corpus(
        _ranker_factory(args, corpus, config),
        corpus,
        t,
        plans,
        micro_k=args.micro_k,
        threshold=args.threshold,
        averaging=args.averaging,
        aggregation=config.aggregation,
    )
    if args.format == "csv":
        _emit(report_to_csv([report]), args.out)
    else:
        _emit(report.to_json(include_documents=args.documents), args.out)
    return 0


def cmd_register(args, config: Config) -> int:
    from .registry import ModelRegistry

    registry = ModelRegistry(config.registry_root)
    entry = registry.register(args.language, args.head, args.encoder, args.vocab,
                              args.thesaurus, family=args.family)
    _emit(json.dumps(entry.to_dict(), indent=2), None)
    return 0


def cmd_classify(args, config: Config) -> int:
    from .core import EuroVocClassifier

    if args.text is None and args.file is None:
        raise UsageError("give --text or --file")
    text = args.text if args.text is not None else Path(args.file).read_text(encoding="utf-8")
    model = EuroVocClassifier(args.language or config.default_language, config=config)
    result = model(text, num_labels=config.num_labels, level=config.level)
    _emit(json.dumps(result, indent=2, ensure_ascii=False), None)
    return 0


def cmd_serve(args, config: Config) -> int:
    from .registry import ModelRegistry
    from .service import build_server

    server = build_server(ModelRegistry(config.registry_root, lowercase=config.lowercase),
                          config.host, config.port, config)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        logger.info("Shutting down")
    finally:
        server.server_close()
    return 0


def cmd_bench(args, config: Config) -> int:
    from .benchmark import benchmark_to_csv, latency_benchmark
    from .registry import ModelRegistry

    bundle = ModelRegistry(config.registry_root, lowercase=config.lowercase).get(
        args.language or config.default_language
    )
    rows = latency_benchmark(bundle, args.lengths, args.trials, warmup=args.warmup, url=args.url)
    _emit(benchmark_to_csv(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eurovoc", description="EuroVoc multi-label document classification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON, YAML or TOML config file")
    parser.add_argument("--log-level", help="Logging level (default: INFO)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="Validate a JSONL corpus against the thesaurus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--thesaurus")
    p.add_argument("--unlabeled", action="store_true", help="Allow documents without labels")
    p.add_argument("--out", help="Write the normalized corpus here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="Label statistics, frequency histograms or tokenizer statistics")
    p.add_argument("--thesaurus", required=True)
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--language", action="append", required=True)
    p.add_argument("--kind", choices=["labels", "histogram", "tokens"], default="labels")
    p.add_argument("--level", default="ID")
    p.add_argument("--group-size", type=int)
    p.add_argument("--vocab", action="append")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="Stratified splits, one per seed")
    p.add_argument("--corpus", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--ratios", help="e.g. 0.8,0.1,0.1")
    p.add_argument("--seeds", type=_int_list, help="e.g. 1,2,3,4,5")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-jex", help="Build topic signatures")
    p.add_argument("--corpus", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--plans")
    p.add_argument("--plan-index", type=int, default=0)
    p.add_argument("--min-df", type=int)
    p.add_argument("--out", required=True, help=".json or .npz")
    p.set_defaults(func=cmd_train_jex)

    p = sub.add_parser("train-head", help="Train a classification head with a mean-embedding encoder")
    p.add_argument("--corpus", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--plans", required=True)
    p.add_argument("--plan-index", type=int, default=0)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--peak-lr", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train_head)

    p = sub.add_parser("eval", help="Evaluate a ranker on the test subsets")
    p.add_argument("--corpus", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--thesaurus", required=True)
    p.add_argument("--plans")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", help="Saved topic signature model")
    group.add_argument("--head", help="Head checkpoint (with --encoder and --vocab)")
    group.add_argument("--random", action="store_true", help="Seeded random ranking")
    group.add_argument("--jex", action="store_true", help="Build signatures on each plan's train subset")
    p.add_argument("--encoder")
    p.add_argument("--vocab")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--micro-k", type=int, default=5)
    p.add_argument("--threshold", type=float)
    p.add_argument("--averaging", choices=["documents", "pr"], default="documents")
    p.add_argument("--documents", action="store_true", help="Include per-document values")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("register", help="Add a model bundle to the registry")
    p.add_argument("--language", required=True)
    p.add_argument("--head", required=True)
    p.add_argument("--encoder", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--thesaurus", required=True)
    p.add_argument("--family", choices=["legal", "mono", "wiki", "multi"], default="legal")
    p.add_argument("--registry")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("classify", help="Classify a text with a registered model")
    p.add_argument("--language")
    p.add_argument("--text")
    p.add_argument("--file")
    p.add_argument("--num-labels", type=int)
    p.add_argument("--level", choices=["ID", "MT", "DO"])
    p.add_argument("--registry")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("serve", help="Run the HTTP classification service")
    p.add_argument("--registry")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="Classification latency by document length")
    p.add_argument("--language")
    p.add_argument("--registry")
    p.add_argument("--lengths", type=_int_list, default=[64, 128, 256, 384, 512])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--url", help="Benchmark a running service instead of the in-process model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


_FLAG_TO_CONFIG = {
    "registry": "registry_root",
    "num_labels": "num_labels",
    "level": "level",
    "host": "host",
    "port": "port",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "peak_lr": "peak_lr",
    "patience": "patience",
    "min_df": "min_df",
    "ratios": "ratios",
    "seeds": "seeds",
    "log_level": "log_level",
}


def resolve_config(args: argparse.Namespace) -> Config:
    """Defaults/env < config file < flags."""
    config = Config.load_from_file(args.config) if args.config else Config.from_env()
    overrides = {field: getattr(args, flag, None) for flag, field in _FLAG_TO_CONFIG.items()}
    return config.merged(**overrides)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except (OSError, ValueError, ImportError) as e:
        print(f"eurovoc: error: {e}", file=sys.stderr)
        return 1
    logging.basicConfig(level=config.log_level.upper(), format=LOG_FORMAT)

    try:
        return args.func(args, config)
    except UsageError as e:
        print(f"eurovoc: error: {e}", file=sys.stderr)
        return 1
    except EuroVocError as e:
        logger.error("%s", e)
        return e.exit_code
    except (OSError, ValueError, KeyError) as e:
        logger.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
