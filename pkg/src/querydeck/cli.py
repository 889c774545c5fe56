"""Command line entry points.

Subcommands: ``mine`` (log -> interface document), ``eval`` (recall /
expressiveness / precision report), ``gen-olap`` (synthetic walk log) and
``serve`` (interface document + static UI + exec endpoint over HTTP).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .estimator import InterfaceMiner
from .evaluate import EvalReport, derive_schema, recall_curve, schema_filter
from .logs import load_log
from .olap import DEFAULT_SEED, gen_olap_log
from .parser import default_grammar, load_grammar
from .specdoc import save
from .widgets import WidgetLibrary, default_library

logger = logging.getLogger(__name__)


def _add_mining_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--log", required=True, help="query log file (SQL or TSV)")
    p.add_argument("--window", type=int, default=2,
                   help="sliding window size (default 2)")
    p.add_argument("--no-lca-prune", action="store_true",
                   help="keep parent/root ancestor deltas instead of LCA pruning")
    p.add_argument("--gamma", type=float, default=1.0,
                   help="required log coverage; only 1.0 is supported")
    p.add_argument("--widget-config", help="widget type config JSON")
    p.add_argument("--grammar-config", help="grammar annotations JSON")
    p.add_argument("--merge-clients", action="store_true",
                   help="mine one interface across all clients of a TSV log")


def _miner_from_args(args) -> InterfaceMiner:
    lib = WidgetLibrary.load(args.widget_config) if args.widget_config else default_library()
    ann = load_grammar(args.grammar_config) if args.grammar_config else default_grammar()
    return InterfaceMiner(window=args.window,
                          pruning="none" if args.no_lca_prune else "lca",
                          gamma=args.gamma, widget_library=lib, grammar=ann)


def _load_queries(args):
    ann = load_grammar(args.grammar_config) if args.grammar_config else default_grammar()
    groups = load_log(args.log, ann, merge_clients=args.merge_clients)
    return groups, ann


def cmd_mine(args) -> int:
    groups, ann = _load_queries(args)
    multi = len(groups) > 1
    for client, queries in groups.items():
        if not queries:
            logger.warning("client %s: no parseable queries", client)
            continue
        miner = _miner_from_args(args).fit(queries)
        doc = miner.export()
        out = Path(args.out)
        if multi:
            out = out.with_name(f"{out.stem}.{client}{out.suffix}")
        save(doc, str(out))
        print(f"{out}: {len(miner.widgets_)} widgets, cost {miner.cost_:.2f} ms, "
              f"{miner.n_queries_} queries")
    return 0


def cmd_eval(args) -> int:
    groups, ann = _load_queries(args)
    queries = next(iter(groups.values()))
    try:
        n_train, n_holdout = (int(x) for x in args.split.split(":"))
    except ValueError:
        print(f"bad --split {args.split!r}, expected TRAIN:HOLDOUT", file=sys.stderr)
        return 2
    report = EvalReport()
    t0 = time.perf_counter()
    miner = _miner_from_args(args).fit(queries[:n_train])
    report.timings["mine"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    report.expressiveness = miner.score(queries[:n_train])
    holdout = queries[n_train:n_train + n_holdout]
    if holdout:
        report.recall = miner.score(holdout)
    report.timings["closure"] = time.perf_counter() - t0

    schema = derive_schema(queries)
    result = schema_filter(miner.widgets_, miner.q0_, schema, ann,
                           sample_budget=args.closure_budget)
    report.precision = result.precision
    report.precision_filtered = 1.0 if result.total else None
    report.truncated = result.truncated
    report.extras["widgets"] = len(miner.widgets_)
    report.extras["interface_cost_ms"] = f"{miner.cost_:.2f}"
    report.extras["closure_sampled"] = result.total

    if args.curve:
        sizes = sorted({max(1, n_train * k // 10) for k in range(1, 11)})
        curve = recall_curve(queries, sizes, holdout_size=n_holdout,
                             window=args.window,
                             pruning="none" if args.no_lca_prune else "lca")
        with open(args.curve, "w", encoding="utf-8") as fh:
            fh.write("train_size,recall\n")
            for size, value in curve:
                fh.write(f"{size},{value:.6f}\n")

    text = report.dumps()
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_gen_olap(args) -> int:
    statements = gen_olap_log(args.n, args.seed)
    text = ";\n".join(statements) + ";\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{args.out}: {args.n} queries (seed {args.seed})")
    else:
        print(text, end="")
    return 0


def cmd_serve(args) -> int:
    from .server import run_server
    return run_server(spec_path=args.spec, ui_dir=args.ui_dir,
                      exec_adapter=args.exec_adapter,
                      host=args.host, port=args.port)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    top = argparse.ArgumentParser(prog="querydeck",
                                  description="Mine query logs into widget interfaces")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine a log into an interface document")
    _add_mining_args(p)
    p.add_argument("--out", required=True, help="output interface document path")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("eval", help="expressiveness / recall / precision report")
    _add_mining_args(p)
    p.add_argument("--split", default="100:100", help="TRAIN:HOLDOUT sizes")
    p.add_argument("--report", help="write the key=value report here")
    p.add_argument("--curve", help="write a recall-curve CSV here")
    p.add_argument("--closure-budget", type=int, default=100_000)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-olap", help="generate the synthetic OLAP walk log")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_olap)

    p = sub.add_parser("serve", help="serve an interface document and the web UI")
    p.add_argument("--spec", required=True, help="interface document path")
    p.add_argument("--ui-dir", default=None,
                   help="static UI directory (default: bundled frontend build)")
    p.add_argument("--exec-adapter", default=None,
                   help="command that reads SQL on stdin and prints TSV rows")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    args = top.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
