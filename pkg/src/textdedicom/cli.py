"""Command-line interface.

Subcommands: fetch, run, compare, neighbors, export.
Exit codes: 0 success, 1 usage, 2 input or network error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from textdedicom import analysis, modelio, pipeline, wikifetch
from textdedicom.config import METHODS, PipelineConfig
from textdedicom.dedicom import row_softmax_znorm
from textdedicom.errors import DedicomError, InputError, NumericError
from textdedicom.textprep import Corpus

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("textdedicom")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_pipeline_flags(p):
    p.add_argument("config", help="pipeline config (JSON)")
    p.add_argument("--output", dest="output_dir", help="output directory")
    p.add_argument("--k", type=int)
    p.add_argument("--epochs", dest="num_epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--nmf-iters", dest="nmf_iters", type=int)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--offline", action="store_true", default=None)


def build_parser():
    parser = _Parser(prog="textdedicom", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fetch", help="fetch Wikipedia articles and write synthetic documents")
    p.add_argument("--ids", type=int, nargs="+", help="row ids of the article table")
    p.add_argument("--table", help="tab-separated table: id, type, title1, title2, title3")
    p.add_argument("--out-dir", default="docs")
    p.add_argument("--cache-dir", help=f"article cache (default ${wikifetch.CACHE_ENV} or ~/.cache)")
    p.add_argument("--offline", action="store_true", help="never touch the network")
    p.add_argument("--api-url", help="MediaWiki API URL, '{lang}' is substituted")

    p = sub.add_parser("run", help="train one method and write all reports")
    _add_pipeline_flags(p)
    p.add_argument("--method", choices=METHODS)

    p = sub.add_parser("compare", help="train DEDICOM, NMF and SVD on the same target")
    _add_pipeline_flags(p)

    p = sub.add_parser("neighbors", help="cosine nearest neighbors of a word from a run directory")
    p.add_argument("word")
    p.add_argument("--run-dir", default="out")
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("export", help="write word embeddings of a saved model")
    p.add_argument("model", help="model.npz written by 'run'")
    p.add_argument("--corpus", help="corpus.json (default: next to the model)")
    p.add_argument("--out", required=True, help="embedding text file")
    return parser


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config)
    overrides = {k: getattr(args, k, None) for k in
                 ("output_dir", "k", "num_epochs", "seed", "nmf_iters", "cache_dir", "offline", "method")}
    return config.with_overrides(**overrides)


def cmd_fetch(args) -> int:
    table = wikifetch.read_table(args.table)
    if args.ids:
        by_id = {row[0]: row for row in table}
        missing = [i for i in args.ids if i not in by_id]
        if missing:
            raise InputError(f"ids not in table: {missing}")
        table = [by_id[i] for i in args.ids]
    docs = wikifetch.build_synthetic_docs(table, args.cache_dir, args.offline, args.api_url)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        (out / f"doc_{doc.id}.txt").write_text(doc.concatenated_text, encoding="utf-8")
        print(f"{doc.id:>3}  {doc.selection_type:<9}  {' / '.join(doc.article_titles)}  "
              f"({len(doc.concatenated_text)} chars)")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load_config(args)
    manifest = pipeline.run(config)
    print(f"{manifest['method']}: n={manifest['n']} k={manifest['k']} "
          f"final loss {manifest['final_loss']:.6g} -> {config.output_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load_config(args)
    summary = pipeline.compare(config)
    for method in ("dedicom", "nmf", "svd"):
        print(f"{method:<8} loss {summary['final_loss'][method]:>14.6g}  "
              f"params {summary['parameter_counts'][method]}")
    for name, ok in summary["checks"].items():
        print(f"{name:<15} {'ok' if ok else 'VIOLATED'}")
    return EXIT_OK


def cmd_neighbors(args) -> int:
    vocab, E = analysis.load_embeddings(Path(args.run_dir) / "embeddings.txt")
    try:
        index = vocab.index(args.word)
    except ValueError:
        raise InputError(f"word {args.word!r} is not in the vocabulary") from None
    table = analysis.nearest_neighbors(E, index, args.count, vocab)
    print(json.dumps(table.to_dict(), indent=2, ensure_ascii=False) if args.format == "json"
          else table.to_text())
    return EXIT_OK


def cmd_export(args) -> int:
    model, _, _ = modelio.load_model(args.model)
    corpus = Corpus.load(args.corpus or Path(args.model).with_name("corpus.json"))
    method = modelio.method_of(model)
    if method == "dedicom":
        E = row_softmax_znorm(model.A_raw).A_prime
    else:
        E = model.embeddings
    analysis.export_embeddings(E, list(corpus.vocab), args.out)
    print(f"wrote {E.shape[0]} x {E.shape[1]} {method} embeddings to {args.out}")
    return EXIT_OK


COMMANDS = {"fetch": cmd_fetch, "run": cmd_run, "compare": cmd_compare,
            "neighbors": cmd_neighbors, "export": cmd_export}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericError as exc:
        _report_error(exc)
        return EXIT_NUMERIC
    except (DedicomError, OSError) as exc:
        _report_error(exc)
        return EXIT_INPUT


def _report_error(exc):
    where = f" [stage {exc.stage}]" if getattr(exc, "stage", None) else ""
    print(f"error{where}: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
