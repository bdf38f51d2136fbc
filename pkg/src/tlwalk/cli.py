"""``tlwalk`` command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or malformed
input), 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .community import louvain, read_partition, write_partition
from .graph import GraphError, load_edge_list, read_label_file, write_edge_list, write_label_file
from .layers import decompose
from .lfr import LfrConfig, lfr_generate
from .pipeline import (EmbedParams, classification_pipeline, clustering_pipeline,
                       labels_to_array, link_prediction_pipeline, substream, tlwalk_embed)
from .spectral import build_transition_matrices, enumerated_pmi, lemma1_records, shifted_pmi

log = logging.getLogger("tlwalk")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
THREADS_ENV = "TLWALK_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _fraction(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def _default_threads():
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1


def _add_embed_flags(p):
    g = p.add_argument_group("embedding")
    g.add_argument("--dim", type=_positive_int, default=128)
    g.add_argument("--walk-length", type=_positive_int, default=80)
    g.add_argument("--num-walks", type=_positive_int, default=10)
    g.add_argument("--window", type=_positive_int, default=10)
    g.add_argument("--negatives", type=_positive_int, default=5)
    g.add_argument("--epochs", type=_positive_int, default=5)
    g.add_argument("--lr", type=_positive_float, default=0.025)
    g.add_argument("--dynamic-window", action="store_true",
                   help="sample the window uniformly from 1..window per center")
    g.add_argument("--nondeterministic", action="store_true",
                   help="lock-free multi-threaded SGNS; results vary between runs")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker cap (default: ${THREADS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tlwalk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="train node embeddings for an edge list")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="embedding text file")
    p.add_argument("--partition-out", help="also write node<TAB>community")
    p.add_argument("--layers-out", help="also write the layer decomposition as JSON")
    p.add_argument("--walks-out", help="also write the walk corpus, one walk per line")
    _add_embed_flags(p)
    _add_common(p)

    p = sub.add_parser("linkpred", help="link prediction AUC over repeated edge splits")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="metrics JSON (default: stdout)")
    p.add_argument("--ratio", type=_fraction, default=0.7, help="fraction of edges kept for training")
    p.add_argument("--repeats", type=_positive_int, default=10)
    _add_embed_flags(p)
    _add_common(p)

    for name, text in (("cluster", "k-means node clustering against ground-truth labels"),
                       ("classify", "logistic-regression node classification")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--input", required=True)
        p.add_argument("--labels", required=True, help="node<TAB>label file")
        p.add_argument("--output", help="metrics JSON (default: stdout)")
        p.add_argument("--repeats", type=_positive_int, default=10)
        if name == "classify":
            p.add_argument("--train-frac", type=_fraction, default=0.8)
        _add_embed_flags(p)
        _add_common(p)

    p = sub.add_parser("lfr", help="generate an LFR-style benchmark graph")
    p.add_argument("--output", default="lfr", help="path prefix for .edges, .labels and .json")
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--k-avg", type=_positive_float, default=10.0)
    p.add_argument("--k-max", type=_positive_int, default=50)
    p.add_argument("--tau1", type=float, default=3.0)
    p.add_argument("--tau2", type=float, default=1.5)
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--s-min", type=_positive_int, default=20)
    p.add_argument("--s-max", type=_positive_int, default=100)
    _add_common(p)

    p = sub.add_parser("verify", help="exact checks of the two-layer walk theory on a small graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--partition", help="node<TAB>community file (default: Louvain)")
    p.add_argument("--output", help="report JSON (default: stdout)")
    p.add_argument("--t-max", type=_positive_int, default=10)
    p.add_argument("--T", type=_positive_int, default=3, help="PMI window for the oracle check")
    p.add_argument("--negatives", type=_positive_int, default=5)
    p.add_argument("--lemma1-reading", choices=("literal", "proof"), default="literal",
                   help="how neighbor terms of the first-passage bound are read")
    p.add_argument("--max-oracle-nodes", type=_positive_int, default=200,
                   help="skip path enumeration on larger graphs")
    _add_common(p)
    return parser


def _params(args) -> EmbedParams:
    return EmbedParams(dim=args.dim, walk_length=args.walk_length, num_walks=args.num_walks,
                       window=args.window, negatives=args.negatives, epochs=args.epochs,
                       lr=args.lr, dynamic_window=args.dynamic_window, workers=args.threads,
                       nondeterministic=args.nondeterministic)


def _echo(args) -> dict:
    skip = {"func", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _dataset(path) -> str:
    return Path(path).stem


def _graph_info(g) -> dict:
    return {"nodes": g.node_count, "edges": g.edge_count,
            "dropped_self_loops": g.dropped_self_loops}


def _report(args, task, dataset, body) -> dict:
    out = {"task": task, "dataset": dataset}
    out.update(body)
    out["params"] = _echo(args)
    out["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return out


def _emit(report, path):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path:
        _write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _write_atomic(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load(path):
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    return load_edge_list(path)


def cmd_embed(args):
    g = _load(args.input)
    res = tlwalk_embed(g, _params(args), args.seed)
    log.info("%d nodes, %d edges, %d communities, %d bridging nodes", g.node_count,
             g.edge_count, res.partition.community_count, len(res.layers.bridging_nodes))
    _write_atomic(args.output, res.embedding.to_text(g.labels))
    if args.partition_out:
        write_partition(args.partition_out, g, res.partition)
    if args.layers_out:
        _write_atomic(args.layers_out, res.layers.to_json(g))
    if args.walks_out:
        _write_atomic(args.walks_out, res.corpus.to_text(g.labels))


def _metric_body(g, metric):
    return {"graph": _graph_info(g), "metric": metric.name, "seeds": metric.seeds,
            "values": [float(v) for v in metric.values], "mean": metric.mean,
            "stddev": metric.stddev}


def _seeds(args):
    return [args.seed + i for i in range(args.repeats)]


def cmd_linkpred(args):
    g = _load(args.input)
    m = link_prediction_pipeline(g, _params(args), _seeds(args), args.ratio, threads=args.threads)
    body = _metric_body(g, m)
    body["mean_auc"] = m.mean
    _emit(_report(args, "linkpred", _dataset(args.input), body), args.output)


def _labeled(args):
    mapping = read_label_file(args.labels) if os.path.exists(args.labels) else None
    if mapping is None:
        raise FileNotFoundError(f"no such file: {args.labels}")
    g = _load(args.input)
    try:
        labels = labels_to_array(g, mapping)
    except KeyError as e:
        raise GraphError(str(e.args[0])) from None
    if len(np.unique(labels[labels >= 0])) < 2:
        raise GraphError("label file must contain at least two classes")
    return g, labels


def cmd_cluster(args):
    g, labels = _labeled(args)
    m = clustering_pipeline(g, labels, _params(args), _seeds(args), threads=args.threads)
    body = _metric_body(g, m)
    body.update(m.extra)
    _emit(_report(args, "cluster", _dataset(args.input), body), args.output)


def cmd_classify(args):
    g, labels = _labeled(args)
    m = classification_pipeline(g, labels, _params(args), _seeds(args), args.train_frac,
                                threads=args.threads)
    _emit(_report(args, "classify", _dataset(args.input), _metric_body(g, m)), args.output)


def cmd_lfr(args):
    try:
        cfg = LfrConfig(n=args.n, k_avg=args.k_avg, k_max=args.k_max, tau1=args.tau1,
                        tau2=args.tau2, mu=args.mu, s_min=args.s_min, s_max=args.s_max,
                        seed=args.seed)
    except GraphError as e:
        raise UsageError(str(e)) from None
    g, truth, meta = lfr_generate(cfg)
    prefix = args.output
    files = {"edges": f"{prefix}.edges", "labels": f"{prefix}.labels", "meta": f"{prefix}.json"}
    Path(files["edges"]).parent.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, files["edges"])
    write_label_file(files["labels"], g.labels, truth.assignment)
    body = {"graph": _graph_info(g), "files": files}
    body.update({k: meta[k] for k in ("realized_mu", "eq9_mu", "mean_degree", "communities",
                                      "community_sizes")})
    report = _report(args, "lfr", Path(prefix).name, body)
    _emit(report, files["meta"])
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _rowsum_ok(M, expect_nonzero):
    s = M.sum(axis=1)
    return bool(np.all(np.abs(s[expect_nonzero] - 1) <= 1e-12) and np.all(s[~expect_nonzero] == 0))


def cmd_verify(args):
    g = _load(args.graph)
    if args.partition:
        p = read_partition(args.partition, g)
    else:
        p = louvain(g, substream(args.seed, "louvain"))
    ld = decompose(g, p)
    tm = build_transition_matrices(g, ld)

    lemma1 = {}
    for reading in ("literal", "proof"):
        records = lemma1_records(g, ld, args.t_max, reading)
        lemma1[reading] = {
            "checked": len(records),
            "violations": sum(not r.holds for r in records),
            "equality_mismatches": sum(not r.equality_consistent for r in records),
        }
    chosen = lemma1[args.lemma1_reading]
    lemma1_ok = chosen["violations"] == 0 and chosen["equality_mismatches"] == 0

    rowsum_ok = (_rowsum_ok(tm.M_I, ~ld.isolated_in_intra())
                 and _rowsum_ok(tm.M_C, ld.bridging))

    oracle = "skipped"
    max_diff = None
    if g.node_count <= args.max_oracle_nodes:
        a = shifted_pmi(g, tm, args.T, args.negatives)
        b = enumerated_pmi(g, ld, args.T, args.negatives)
        same_mask = bool(np.array_equal(a.mask, b.mask))
        max_diff = float(np.max(np.abs(a.values[~a.mask] - b.values[~b.mask]))) \
            if same_mask and (~a.mask).any() else (0.0 if same_mask else None)
        oracle = "pass" if same_mask and max_diff is not None and max_diff <= 1e-10 else "fail"

    details = {
        "communities": p.community_count,
        "bridging_nodes": [g.labels[v] for v in ld.bridging_nodes],
        "lemma1_reading": args.lemma1_reading,
        "lemma1": lemma1,
        "lemma2_oracle_max_abs_diff": max_diff,
    }
    body = {"graph": _graph_info(g), "lemma1": "pass" if lemma1_ok else "fail",
            "lemma2_rowsum": "pass" if rowsum_ok else "fail", "lemma2_oracle": oracle,
            "details": details}
    _emit(_report(args, "verify", _dataset(args.graph), body), args.output)
    return EXIT_OK


COMMANDS = {"embed": cmd_embed, "linkpred": cmd_linkpred, "cluster": cmd_cluster,
            "classify": cmd_classify, "lfr": cmd_lfr, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    if getattr(args, "threads", None) is None:
        args.threads = _default_threads()
    try:
        COMMANDS[args.command](args)
    except UsageError as e:
        print(f"tlwalk: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, OSError, UnicodeDecodeError) as e:
        print(f"tlwalk: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (AssertionError, FloatingPointError) as e:
        print(f"tlwalk: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
