"""Command line interface: ``dcdclust build-graph | cluster | eval``."""

import argparse
import logging
import sys

from . import io
from .dcd import DcdConfig
from .errors import AllCandidatesFailedError, DCDError, IsolatedNodeError
from .evaluation import purity
from .graph import knn_graph
from .init import DEFAULT_ALPHAS, DEFAULT_EPS, multi_start

EXIT_USAGE = 2
EXIT_ALL_FAILED = 3


def _alphas(text):
    try:
        values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if any(a < 1 for a in values):
        raise argparse.ArgumentTypeError("every alpha must be >= 1")
    return values


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dcdclust",
        description="Graph clustering by low-rank doubly stochastic matrix decomposition.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build a symmetrized binary KNN graph from CSV features")
    p.add_argument("input", help="CSV file, one sample per row")
    p.add_argument("-k", "--neighbors", type=_positive_int, default=5, help="K (default: 5)")
    p.add_argument("-o", "--output", required=True, help="MatrixMarket file to write")
    p.add_argument("--header", action="store_true", help="skip the first line of the CSV")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("cluster", help="cluster a graph with the multi-start DCD pipeline")
    p.add_argument("graph", help="MatrixMarket similarity graph")
    p.add_argument("-r", "--clusters", type=_positive_int, required=True)
    p.add_argument("-o", "--output", required=True, help="JSON result file to write")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-iters", type=_positive_int, default=10_000)
    p.add_argument("--alphas", type=_alphas, default=DEFAULT_ALPHAS, help="default: 1.2,2,5")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS, help="indicator perturbation")
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.add_argument("--soft", action="store_true", help="include the assignment matrix")
    p.add_argument("--trace", metavar="PATH", help="write per-iteration traces as JSON lines")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="purity of a clustering result against ground truth")
    p.add_argument("result", help="JSON result file from 'cluster'")
    p.add_argument("truth", help="ground-truth class ids, one per line")
    p.set_defaults(func=cmd_eval)
    return parser


def cmd_build_graph(args):
    X = io.read_features(args.input, header=args.header)
    try:
        A = knn_graph(X, args.neighbors)
    except IsolatedNodeError as exc:
        print(f"error: row {exc.node} of {args.input} is isolated", file=sys.stderr)
        return EXIT_USAGE
    io.write_graph(A, args.output)
    deg = A.degrees()
    print(f"n: {A.n}")
    print(f"nnz: {A.nnz}")
    print(f"edges: {A.n_edges}")
    print(f"min_degree: {deg.min()}")
    print(f"max_degree: {deg.max()}")
    return 0


def cmd_cluster(args):
    A = io.read_graph(args.graph)
    config = DcdConfig(max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed)
    try:
        W, labels, candidates = multi_start(
            A, args.clusters, config, alphas=args.alphas, eps=args.eps, threads=args.threads
        )
    except AllCandidatesFailedError as exc:
        print("error: every candidate failed", file=sys.stderr)
        for source, reason in exc.reasons:
            print(f"  {source}: {reason}", file=sys.stderr)
        return EXIT_ALL_FAILED
    doc = io.result_document(
        A, args.clusters, W, labels, candidates, config,
        soft=args.soft, alphas=args.alphas, eps=args.eps,
    )
    io.write_result(doc, args.output)
    if args.trace:
        io.write_traces(candidates, args.trace)
    for c in doc["candidates"]:
        status = f"kl={c['final_kl']:.6f}" if c["error"] is None else c["error"]
        print(f"{c['source']}: {status}")
    print(f"selected: {doc['selected']}")
    print(f"kl_error: {doc['kl_error']:.6f}")
    return 0


def cmd_eval(args):
    doc = io.read_result(args.result)
    truth = io.read_labels(args.truth)
    print(f"purity: {purity(doc['labels'], truth):.4f}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DCDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
