"""The ``ake`` command line: build-lm, train, extract, eval, ablate, aggregate, serve.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import DataError, UsageError


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{message}\n{self.format_usage()}")


def _add_preprocess_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-light-filter", action="store_true", help="skip sentence filtering")
    p.add_argument("--no-coref", action="store_true", help="skip alias normalization")
    p.add_argument("--filter-first", action="store_true", help="filter before normalizing")
    p.add_argument("--support-size", type=int, default=5, help="support set size K")
    p.add_argument(
        "--filter-fraction", type=float, default=0.10, help="body fraction to remove"
    )


def _add_resource_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lm", help="n-gram model file (needed with the ss group)")
    p.add_argument("--gazetteer", help="phrase<TAB>labels file (bundled demo by default)")
    p.add_argument("--lexicon", help="signal cue lexicon file (bundled by default)")


def build_parser() -> _Parser:
    parser = _Parser(prog="ake", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("build-lm", help="build the compressed n-gram model")
    p.add_argument("--corpus", required=True, help="stories .jsonl, or text lines with --plain")
    p.add_argument("--plain", action="store_true", help="treat corpus as raw token lines")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--fingerprint-bits", type=int, default=16)
    p.add_argument("--quant-bits", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a bagged decision-tree model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--mask", default="baseline,ss,tc,rs,sc")
    p.add_argument("--bags", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--balance", action="store_true", help="reweight positive instances")
    p.add_argument("--out", required=True)
    _add_resource_flags(p)
    _add_preprocess_flags(p)

    p = sub.add_parser("extract", help="extract top key phrases from one document")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True, help="document file (.jsonl record or raw text)")
    p.add_argument("--category", help="category for raw text input")
    p.add_argument("--top", type=int, default=10)
    _add_resource_flags(p)
    _add_preprocess_flags(p)

    p = sub.add_parser("eval", help="evaluate a model against a gold standard")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--dcg-discount", choices=("log2i", "log2i1"), default="log2i")
    p.add_argument("--out-dir", help="write table.txt, records.csv and figures here")
    _add_resource_flags(p)

    p = sub.add_parser("ablate", help="train and evaluate a list of feature conditions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument(
        "--conditions",
        default="table1",
        help="'table1' or comma-separated labels like baseline+ss+cn",
    )
    p.add_argument("--train-count", type=int, default=None)
    p.add_argument("--test-count", type=int, default=None)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--bags", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--balance", action="store_true")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--dcg-discount", choices=("log2i", "log2i1"), default="log2i")
    p.add_argument("--out-dir", help="write table.txt, records.csv and figures here")
    p.add_argument("--support-size", type=int, default=5)
    p.add_argument("--filter-fraction", type=float, default=0.10)
    _add_resource_flags(p)

    p = sub.add_parser("aggregate", help="aggregate HITs into a gold standard")
    p.add_argument("--hits", required=True)
    p.add_argument("--stories", required=True, help="corpus .jsonl the HITs reference")
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.90)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--quota", type=int, default=20)
    p.add_argument("--data-dir", help="HIT log directory (default $AKE_DATA_DIR or ./ake-data)")
    p.add_argument("--static-dir", help="directory of built annotator UI assets")

    return parser


def _load_resources(args, mask):
    from .features import Gazetteer, SignalLexicon
    from .ngram_lm import NGramStore

    store = NGramStore.load(args.lm) if args.lm else None
    if "ss" in mask and store is None:
        raise DataError(
            "the ss feature group needs an n-gram model; pass --lm "
            "(build one with `ake build-lm`)"
        )
    lexicon = SignalLexicon.load(args.lexicon) if args.lexicon else SignalLexicon.load()
    gazetteer = Gazetteer.load(args.gazetteer) if args.gazetteer else Gazetteer.load()
    return store, lexicon, gazetteer


def _preprocess_config(args):
    from .pipeline import PreprocessConfig

    return PreprocessConfig(
        coref=not args.no_coref,
        light_filter=not args.no_light_filter,
        filter_first=args.filter_first,
        support_size=args.support_size,
        removal_fraction=args.filter_fraction,
    )


def _cmd_build_lm(args) -> int:
    from .corpus import ingest_corpus
    from .ngram_lm import build_model

    path = Path(args.corpus)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    if args.plain:
        sequences = [
            line.split() for line in path.read_text("utf-8").splitlines() if line.strip()
        ]
    else:
        docs = ingest_corpus(path)
        sequences = [
            [t.lower for t in s.tokens] for d in docs for s in d.sentences
        ]
    store = build_model(
        sequences,
        order=args.order,
        fp_bits=args.fingerprint_bits,
        quant_bits=args.quant_bits,
        base_seed=args.seed,
    )
    store.save(args.out)
    print(f"stored {store.key_count} n-grams (order {store.order}) in {args.out}")
    return 0


def _cmd_train(args) -> int:
    from .corpus import ingest_corpus
    from .features import parse_mask
    from .goldstandard import load_gold
    from .pipeline import save_model, train_model

    mask = parse_mask(args.mask)
    store, lexicon, gazetteer = _load_resources(args, mask)
    docs = ingest_corpus(args.corpus)
    gold = load_gold(args.gold)
    model = train_model(
        docs,
        gold,
        mask,
        store=store,
        lexicon=lexicon,
        gazetteer=gazetteer,
        preprocess=_preprocess_config(args),
        bags=args.bags,
        seed=args.seed,
        min_leaf=args.min_leaf,
        balance=args.balance,
    )
    save_model(model, args.out)
    print(
        f"trained {model.ensemble.bags} trees on mask {'+'.join(mask)}; "
        f"model written to {args.out}"
    )
    return 0


def _read_document(infile: str, category: str | None, need_category: bool):
    from .corpus import CATEGORIES, Document, segment_and_tokenize

    path = Path(infile)
    if not path.exists():
        raise DataError(f"input document not found: {path}")
    text = path.read_text("utf-8")
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            rec = json.loads(stripped.splitlines()[0])
            doc = Document(
                id=str(rec.get("id", path.stem)),
                title=rec["title"],
                body=rec["body"],
                category=rec["category"],
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: malformed document record: {exc}") from exc
    else:
        lines = text.splitlines()
        title = lines[0] if lines else ""
        body = "\n".join(lines[1:])
        if category is None:
            if need_category:
                raise DataError(
                    "the model uses category features; pass --category, one of: "
                    + ", ".join(CATEGORIES)
                )
            category = CATEGORIES[0]
        doc = Document(id=path.stem, title=title, body=body, category=category)
    doc.sentences = segment_and_tokenize(doc.title, doc.body)
    return doc


def _cmd_extract(args) -> int:
    from .pipeline import extract, load_model

    model = load_model(args.model)
    store, lexicon, gazetteer = _load_resources(args, model.mask)
    doc = _read_document(args.infile, args.category, need_category="tc" in model.mask)
    res = model.resources(store=store, lexicon=lexicon, gazetteer=gazetteer)
    pre = _preprocess_config(args)
    for phrase, score in extract(doc, model, res, k=args.top, preprocess=pre):
        print(f"{phrase}\t{score:.4f}")
    return 0


def _cmd_eval(args) -> int:
    from .corpus import ingest_corpus
    from .evaluation import evaluate_extractions
    from .goldstandard import load_gold
    from .pipeline import extract, load_model

    model = load_model(args.model)
    store, lexicon, gazetteer = _load_resources(args, model.mask)
    docs = ingest_corpus(args.corpus)
    gold = load_gold(args.gold)
    res = model.resources(store=store, lexicon=lexicon, gazetteer=gazetteer)
    extractions = {
        d.id: [p for p, _ in extract(d, model, res, k=args.k)]
        for d in docs
        if d.id in gold.stories
    }
    if not extractions:
        raise DataError("no corpus documents appear in the gold standard")
    result = evaluate_extractions(
        extractions, gold, k=args.k, discount=args.dcg_discount, label="eval"
    )
    print(f"stories evaluated: {len(extractions)}")
    print(f"macro nDCG@{args.k}:      {result.macro_ndcg:.4f}")
    print(f"macro precision@{args.k}: {result.macro_precision:.4f}")
    if args.out_dir:
        from .report import write_report

        paths = write_report([result], args.out_dir)
        print(f"report written to {paths['records'].parent}")
    return 0


def _cmd_ablate(args) -> int:
    from .corpus import ingest_corpus
    from .evaluation import TABLE1_CONDITIONS, run_ablation
    from .goldstandard import SplitSpec, load_gold, split
    from .report import format_table, write_report

    docs = ingest_corpus(args.corpus)
    gold = load_gold(args.gold)
    if args.conditions.strip().lower() == "table1":
        conditions = list(TABLE1_CONDITIONS)
    else:
        conditions = [c.strip() for c in args.conditions.split(",") if c.strip()]
    if not conditions:
        raise UsageError("--conditions must name at least one condition")
    labeled = [d for d in docs if d.id in gold.stories]
    train_count = args.train_count
    test_count = args.test_count
    if train_count is None and test_count is None:
        train_count = round(0.9 * len(labeled))
    if test_count is None:
        test_count = len(labeled) - train_count
    if train_count is None:
        train_count = len(labeled) - test_count
    spec = SplitSpec(train_count=train_count, test_count=test_count, seed=args.split_seed)
    gold_subset = {d.id: gold.stories[d.id] for d in labeled}
    from .goldstandard import GoldStandard

    train_ids, test_ids = split(
        GoldStandard(stories=gold_subset),
        spec,
        categories={d.id: d.category for d in labeled},
    )
    needs_ss = any("ss" in c for c in conditions)
    store, lexicon, gazetteer = _load_resources(
        args, ("ss",) if needs_ss else ("baseline",)
    )
    results = run_ablation(
        docs,
        gold,
        conditions,
        train_ids,
        test_ids,
        store=store,
        lexicon=lexicon,
        gazetteer=gazetteer,
        bags=args.bags,
        seed=args.seed,
        min_leaf=args.min_leaf,
        balance=args.balance,
        k=args.k,
        discount=args.dcg_discount,
        support_size=args.support_size,
        removal_fraction=args.filter_fraction,
    )
    print(format_table(results))
    if len(results) >= 2:
        from .evaluation import bootstrap_gap

        stats = bootstrap_gap(results[0], results[-1], seed=args.split_seed)
        print(
            f"bootstrap over test stories: {results[-1].label} beats "
            f"{results[0].label} by {stats['observed_gap']:.4f} nDCG "
            f"(P(no gain) = {stats['p_not_better']:.3f}, "
            f"{int(stats['trials'])} resamples)"
        )
    if args.out_dir:
        paths = write_report(results, args.out_dir)
        print(f"report written to {paths['records'].parent}")
    return 0


def _cmd_aggregate(args) -> int:
    from .corpus import ingest_corpus
    from .goldstandard import aggregate, filter_bad_hits, load_hits, save_gold

    docs = ingest_corpus(args.stories)
    hits = load_hits(args.hits, docs)
    good, rejected = filter_bad_hits(hits)
    gs = aggregate(good)
    save_gold(gs, args.out)
    print(f"aggregated {len(good)} good HITs over {len(gs)} stories -> {args.out}")
    if rejected:
        print(f"rejected {len(rejected)} HITs:")
        for r in rejected:
            print(f"  {r.hit.hit_id}: {', '.join(r.reasons)}")
    return 0


def _cmd_serve(args) -> int:
    from .corpus import ingest_corpus
    from .service import serve_annotation

    docs = ingest_corpus(args.corpus)
    static = args.static_dir
    if static is None:
        bundled = Path("frontend/dist")
        static = bundled if bundled.is_dir() else None
    serve_annotation(
        docs,
        port=args.port,
        host=args.host,
        data_dir=args.data_dir,
        quota=args.quota,
        static_dir=static,
    )
    return 0


_COMMANDS = {
    "build-lm": _cmd_build_lm,
    "train": _cmd_train,
    "extract": _cmd_extract,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "aggregate": _cmd_aggregate,
    "serve": _cmd_serve,
}


def cli_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ake: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"ake: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
