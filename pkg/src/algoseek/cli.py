"""Command line interface: ingest, convert, parse, train, index, search, eval."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import evalkit, featenc, gae, icfg, plang, pseudoconv, search
from .config import Config, load_config
from .errors import DataError, UsageError

EXIT_USAGE = 2
EXIT_DATA = 3


def _make_encoder(cfg: Config):
    kind = cfg.get("encoder.kind")
    dim = cfg.get_int("encoder.dim")
    if kind == "builtin-hash":
        return featenc.HashTextEncoder(dim=dim, seed=cfg.get_int("encoder.seed"))
    if kind == "external-sidecar":
        path = cfg.get("encoder.sidecar_path")
        if not path:
            raise UsageError("encoder.sidecar_path is required for external-sidecar")
        return featenc.SidecarEncoder(path, dim)
    raise UsageError(f"unknown encoder.kind {kind!r}")


def _load_graphs(path: str) -> list:
    if not os.path.exists(path):
        raise DataError(f"graph store not found: {path}")
    return icfg.read_icfg_json(path)


def _feature_graphs(graphs, encoder):
    return [(g, featenc.build_feature_matrix(g, encoder)) for g in graphs]


# --- subcommands -------------------------------------------------------

def cmd_ingest(args, cfg: Config) -> int:
    root = args.corpus or cfg.get("paths.corpus")
    if not root:
        raise UsageError("no corpus directory given (--corpus or paths.corpus)")
    languages = set(cfg.get("languages").split(","))
    exts = {}
    if "c" in languages:
        exts.update({".c": "c", ".h": "c"})
    if "java" in languages:
        exts[".java"] = "java"
    files = []
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            ext = os.path.splitext(name)[1]
            if ext in exts:
                files.append((os.path.join(dirpath, name), exts[ext]))
    files.sort()
    if not files:
        raise DataError(f"no source files found under {root}")
    graphs, entries, diagnostics = [], [], []
    for path, language in files:
        try:
            g = icfg.extract_file_icfg(path, language)
        except (DataError, OSError) as exc:
            diagnostics.append({"path": path, "error": str(exc)})
            continue
        graphs.append(g)
        entries.append({
            "path": path,
            "language": language,
            "bytes": os.path.getsize(path),
            "function_count": sum(1 for n in g.nodes if n.kind == "entry"),
            "node_count": len(g.nodes),
        })
    icfg.write_icfg_json(graphs, args.out)
    manifest = {
        "files": entries,
        "totals": {
            "files": len(entries),
            "functions": sum(e["function_count"] for e in entries),
            "nodes": sum(e["node_count"] for e in entries),
        },
        "diagnostics": diagnostics,
    }
    with open(args.manifest, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"ingested {len(entries)} files "
          f"({manifest['totals']['functions']} functions, "
          f"{manifest['totals']['nodes']} nodes) -> {args.out}")
    if diagnostics:
        print(f"skipped {len(diagnostics)} files (see manifest diagnostics)")
    return 0


def cmd_convert(args, cfg: Config) -> int:
    with open(args.input, encoding="utf-8") as fh:
        pseudo = fh.read()
    comments = cfg.get("seed.comments") or None
    code = cfg.get("seed.code") or None
    seed_comments, seed_code = pseudoconv.load_seed_lines(comments, code)
    classifier = pseudoconv.LineClassifier(seed_comments, seed_code)
    pcode = pseudoconv.convert(pseudo, classifier)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(pcode)
    print(f"wrote {args.output}")
    return 0


def cmd_parse(args, cfg: Config) -> int:
    with open(args.input, encoding="utf-8") as fh:
        program = plang.parse_source(fh.read())
    g = icfg.build_pcode_icfg(program, graph_id=os.path.basename(args.input),
                              file=args.input)
    print(f"{len(program.functions)} function(s), "
          f"{len(g.nodes)} ICFG nodes, {len(g.edges)} edges")
    if args.pretty:
        print(plang.pretty_print(program), end="")
    return 0


def cmd_train(args, cfg: Config, seed: int) -> int:
    graphs = _load_graphs(args.graphs)
    encoder = _make_encoder(cfg)
    pairs = _feature_graphs(graphs, encoder)
    train_cfg = gae.TrainConfig(
        learning_rate=cfg.get_float("gae.lr"),
        edge_batch_size=cfg.get_int("gae.batch"),
        max_epochs=cfg.get_int("gae.max_epochs"),
        patience=cfg.get_int("gae.patience"),
        hidden_dim=cfg.get_int("gae.h"),
    )
    model, history = gae.train(pairs, train_cfg, seed=seed)
    model.config_hash = cfg.content_hash()
    gae.save_model(model, args.model)
    print(f"trained {len(history.epochs)} epochs, "
          f"best AUC {history.best_auc:.4f} at epoch {history.best_epoch + 1}")
    if args.report_dir:
        os.makedirs(args.report_dir, exist_ok=True)
        from . import report
        report.plot_training_curves(
            history, os.path.join(args.report_dir, "training_curves.png"))
        with open(os.path.join(args.report_dir, "training_history.json"),
                  "w", encoding="utf-8") as fh:
            json.dump({"epochs": history.epochs,
                       "best_epoch": history.best_epoch,
                       "best_auc": history.best_auc}, fh, indent=1)
            fh.write("\n")
    return 0


def cmd_index(args, cfg: Config) -> int:
    graphs = _load_graphs(args.graphs)
    model = gae.load_model(args.model)
    encoder = _make_encoder(cfg)
    pairs = _feature_graphs(graphs, encoder)
    finals = gae.embed(model, pairs)
    index = search.build_index(graphs, finals, model.config_hash)
    search.save_index(index, args.out)
    print(f"indexed {len(index.entries)} nodes -> {args.out}")
    return 0


def cmd_search(args, cfg: Config) -> int:
    index_path = args.index or cfg.get("paths.index")
    model_path = args.model or cfg.get("paths.model")
    if not index_path or not os.path.exists(index_path):
        raise DataError(f"index not found: {index_path or '<unset>'}")
    if not model_path or not os.path.exists(model_path):
        raise DataError(f"model not found: {model_path or '<unset>'}")
    index = search.load_index(index_path)
    model = gae.load_model(model_path)
    encoder = _make_encoder(cfg)
    graphs = {g.graph_id: g for g in _load_graphs(args.graphs)}
    with open(args.query, encoding="utf-8") as fh:
        program = plang.parse_source(fh.read())
    result = search.search(
        program, index, model, encoder, graphs,
        k=args.k if args.k is not None else cfg.get_int("search.k"),
        query_id=os.path.basename(args.query),
        gap_lines=cfg.get_int("search.gap_lines"))
    shown = result.groups[:args.top]
    for rank, group in enumerate(shown, start=1):
        frags = " ".join(f"{f}:{a}-{b}" for f, a, b in group.fragments) or "-"
        print(f"{rank:>4}  {group.gamma:.3f}  {frags}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(search.result_to_json(result), fh, indent=1, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_eval(args, cfg: Config) -> int:
    index = search.load_index(args.index)
    model = gae.load_model(args.model)
    encoder = _make_encoder(cfg)
    graph_list = _load_graphs(args.graphs)
    graphs = {g.graph_id: g for g in graph_list}
    truth = evalkit.read_ground_truth_tsv(args.truth)
    spans = evalkit.function_spans_from_graphs(graph_list)
    query_files = sorted(
        os.path.join(args.queries, f) for f in os.listdir(args.queries)
        if f.endswith(".p"))
    if not query_files:
        raise DataError(f"no .p queries under {args.queries}")
    cutoff = args.cutoff
    per_query = {}
    for path in query_files:
        qid = os.path.splitext(os.path.basename(path))[0]
        if qid not in truth:
            print(f"warning: no ground truth for {qid}, skipping",
                  file=sys.stderr)
            continue
        with open(path, encoding="utf-8") as fh:
            program = plang.parse_source(fh.read())
        result = search.search(program, index, model, encoder, graphs,
                               k=cfg.get_int("search.k"), query_id=qid,
                               gap_lines=cfg.get_int("search.gap_lines"))
        per_query[qid] = evalkit.f_rank(result, truth[qid], cutoff=cutoff,
                                        function_spans=spans)
    if not per_query:
        raise DataError("no queries matched the ground truth file")
    rep = evalkit.build_report(per_query, cutoff=cutoff)
    os.makedirs(args.report_dir, exist_ok=True)
    evalkit.write_report(rep,
                         os.path.join(args.report_dir, "metrics.json"),
                         os.path.join(args.report_dir, "metrics.txt"))
    from . import report
    report.plot_f_ranks(rep, os.path.join(args.report_dir, "f_ranks.png"))
    print(evalkit.report_to_table(rep))
    return 0


# --- argument parsing --------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="algoseek",
        description="Find algorithm implementations in source code "
                    "using pseudo code queries.")
    parser.add_argument("--config", help="path to key = value config file")
    parser.add_argument("--seed", type=int, help="override gae.seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="scan a corpus and build the graph store")
    p.add_argument("--corpus", help="corpus root directory")
    p.add_argument("--out", required=True, help="output graph store (JSON)")
    p.add_argument("--manifest", default="manifest.json")

    p = sub.add_parser("convert", help="pseudo code (.txt) -> p-code (.p)")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("parse", help="validate a p-code file")
    p.add_argument("--input", required=True)
    p.add_argument("--pretty", action="store_true")

    p = sub.add_parser("train", help="train the graph autoencoder")
    p.add_argument("--graphs", required=True)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--report-dir", help="write training curves here")

    p = sub.add_parser("index", help="build the vector index")
    p.add_argument("--graphs", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("search", help="run one query")
    p.add_argument("--query", required=True, help="p-code query file")
    p.add_argument("--index")
    p.add_argument("--model")
    p.add_argument("--graphs", required=True)
    p.add_argument("--top", type=int, default=25)
    p.add_argument("--k", type=int, help="per-node candidate count")
    p.add_argument("--output", help="write ranked result JSON here")

    p = sub.add_parser("eval", help="run queries against ground truth")
    p.add_argument("--queries", required=True, help="directory of .p files")
    p.add_argument("--truth", required=True, help="ground truth TSV")
    p.add_argument("--index", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--cutoff", type=int, default=100)
    p.add_argument("--report-dir", default="report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.get_int("gae.seed")
        np.seterr(all="raise", under="ignore")
        if args.command == "ingest":
            return cmd_ingest(args, cfg)
        if args.command == "convert":
            return cmd_convert(args, cfg)
        if args.command == "parse":
            return cmd_parse(args, cfg)
        if args.command == "train":
            return cmd_train(args, cfg, seed)
        if args.command == "index":
            return cmd_index(args, cfg)
        if args.command == "search":
            return cmd_search(args, cfg)
        if args.command == "eval":
            return cmd_eval(args, cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
