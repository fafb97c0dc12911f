"""Command-line entry points.

Three subcommands: `match` runs the full resolution pipeline against two
KB dumps (simulated workers by default), `eval` scores a produced match
file against a gold standard, and `serve` starts the labeling HTTP
service with the engine blocking on human answers.
"""

from __future__ import annotations

import argparse
import json
import sys

from .engine import EngineConfig, evaluate, run_pipeline
from .kb import unescape_field


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kb1-attrs", required=True, metavar="F")
    p.add_argument("--kb1-rels", required=True, metavar="F")
    p.add_argument("--kb2-attrs", required=True, metavar="F")
    p.add_argument("--kb2-rels", required=True, metavar="F")
    p.add_argument("--gold", metavar="F",
                   help="gold matches TSV (required for simulation/metrics)")
    p.add_argument("--label-attr1", default="label",
                   help="name attribute in the first KB (default: label)")
    p.add_argument("--label-attr2", default="label",
                   help="name attribute in the second KB (default: label)")
    p.add_argument("--k", type=int, default=4,
                   help="pruning rank cutoff (default: 4)")
    p.add_argument("--tau", type=float, default=0.9,
                   help="inference probability threshold (default: 0.9)")
    p.add_argument("--mu", type=int, default=10,
                   help="questions per loop (default: 10)")
    p.add_argument("--budget", type=int, default=None,
                   help="total question budget (default: unlimited)")
    p.add_argument("--assignments", type=int, default=5,
                   help="workers per question (default: 5)")
    p.add_argument("--workers", metavar="F",
                   help="worker pool TSV: id, kind, quality")
    p.add_argument("--pool-size", type=int, default=15,
                   help="simulated pool size when --workers absent")
    p.add_argument("--out", metavar="F", help="write final matches TSV here")
    p.add_argument("--label-log", metavar="F",
                   help="append collected labels to this TSV")
    p.add_argument("--seed", type=int, default=0)


def _config(args) -> EngineConfig:
    return EngineConfig(
        kb1_attrs=args.kb1_attrs, kb1_rels=args.kb1_rels,
        kb2_attrs=args.kb2_attrs, kb2_rels=args.kb2_rels,
        gold=args.gold, label_attr1=args.label_attr1,
        label_attr2=args.label_attr2, k=args.k, tau=args.tau, mu=args.mu,
        budget=args.budget, assignments_per_question=args.assignments,
        error_rate=getattr(args, "error_rate", 0.0),
        workers_file=args.workers, pool_size=args.pool_size,
        seed=args.seed, out=args.out, label_log=args.label_log)


def cmd_match(args) -> int:
    if args.mode == "serve":
        from .service import serve_pipeline
        return serve_pipeline(_config(args), port=args.port,
                              static_dir=args.static_dir)
    result = run_pipeline(_config(args))
    json.dump(result.metrics.as_dict(), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _read_pairs(path) -> set:
    pairs = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns")
            pairs.add((unescape_field(fields[0]), unescape_field(fields[1])))
    return pairs


def cmd_eval(args) -> int:
    pred = _read_pairs(args.pred)
    gold = _read_pairs(args.gold)
    p, r, f1 = evaluate(pred, gold)
    json.dump({"precision": p, "recall": r, "f1": f1,
               "n_pred": len(pred), "n_gold": len(gold)},
              sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def cmd_serve(args) -> int:
    from .service import serve_pipeline
    return serve_pipeline(_config(args), port=args.port,
                          static_dir=args.static_dir)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="remp", description="crowdsourced collective entity resolution")
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("match", help="run the resolution pipeline")
    _add_engine_flags(m)
    m.add_argument("--mode", choices=("sim", "serve"), default="sim",
                   help="label source: simulated workers or HTTP service")
    m.add_argument("--error-rate", type=float, default=0.0,
                   help="simulated worker error rate (default: 0)")
    m.add_argument("--port", type=int, default=8080,
                   help="HTTP port when --mode serve")
    m.add_argument("--static-dir", default=None,
                   help="frontend asset directory when --mode serve")
    m.set_defaults(func=cmd_match)

    e = sub.add_parser("eval", help="score a match file against gold")
    e.add_argument("--pred", required=True, metavar="F")
    e.add_argument("--gold", required=True, metavar="F")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("serve", help="serve the labeling API and UI")
    _add_engine_flags(s)
    s.add_argument("--port", type=int, default=8080)
    s.add_argument("--static-dir", default=None,
                   help="frontend asset directory (default: bundled build)")
    s.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
