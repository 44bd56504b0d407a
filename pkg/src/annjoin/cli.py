"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 verification mismatch,
3 IO/corruption error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import bench as bench_mod
from .ann import ann_join, ann_join_bestfirst, ann_join_unseeded, oracle_mismatches
from .baseline import RTreeStore, build_rtree, rtree_ann, write_rtree
from .errors import (
    AnnJoinError,
    ExhaustedGraph,
    IoFailure,
    RecordTooLarge,
    UnknownPoint,
    UnknownStart,
    VerificationMismatch,
)
from .geom import (
    PointRecord,
    build_delaunay,
    build_neighbour_graph,
    load_points_csv,
    save_points_csv,
)
from .nnsearch import nn_search, nn_search_bestfirst
from .store import BlockStore, DEFAULT_BLOCK_SIZE, DEFAULT_CACHE_BLOCKS, write_index

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISMATCH = 2
EXIT_IO = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_xy(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError(f"expected 'x,y', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _store_points(store) -> list[PointRecord]:
    return [PointRecord(i, store.xs[i], store.ys[i]) for i in range(store.point_count)]


def _rtree_points(path) -> list[PointRecord]:
    """All indexed points, read outside any counted search."""
    with RTreeStore(path, cache_blocks=0) as store:
        pts = []
        for nid in range(store.node_count):
            node = store.fetch_node(nid)
            if node.is_leaf:
                pts.extend(PointRecord(pid, x, y) for pid, x, y in node.entries)
    pts.sort(key=lambda p: p.id)
    return pts


def _write_pairs_csv(path, pairs: dict[int, tuple[int, float]]) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("q_id,nn_id,sq_dist\n")
            for q_id in sorted(pairs):
                nn_id, sq = pairs[q_id]
                fh.write(f"{q_id},{nn_id},{sq!r}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read_pairs_csv(path) -> dict[int, tuple[int, float]]:
    pairs = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "q_id,nn_id,sq_dist":
                raise IoFailure(f"{path}: unexpected header {header!r}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                q_id, nn_id, sq = line.split(",")
                pairs[int(q_id)] = (int(nn_id), float(sq))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise IoFailure(f"cannot parse {path}: {exc}") from exc
    return pairs


# -- subcommands ---------------------------------------------------------


def _cmd_gen(args) -> int:
    box = tuple(float(v) for v in args.box.split(","))
    if len(box) != 4:
        raise _UsageError("--box expects 'minx,miny,maxx,maxy'")
    points = bench_mod.gen_uniform(args.n, args.seed, box=box, order=args.order)
    save_points_csv(args.out, points)
    print(f"wrote {len(points)} points to {args.out}")
    return EXIT_OK


def _cmd_build_index(args) -> int:
    points = load_points_csv(args.input)
    index = (
        build_delaunay(points, method=args.method)
        if args.strict
        else build_neighbour_graph(points, method=args.method)
    )
    write_index(index, args.output, block_size=args.block_size)
    print(
        f"indexed {index.point_count} points "
        f"({sum(len(v) for v in index.adjacency.values()) // 2} edges) -> {args.output}"
    )
    return EXIT_OK


def _cmd_build_rtree(args) -> int:
    points = load_points_csv(args.input)
    tree = build_rtree(points, block_size=args.block_size)
    write_rtree(tree, args.output)
    print(
        f"packed {len(points)} points into {len(tree.nodes)} nodes "
        f"(height {tree.height}) -> {args.output}"
    )
    return EXIT_OK


def _cmd_nn(args) -> int:
    query = _parse_xy(args.query)
    search = nn_search_bestfirst if args.best_first else nn_search
    with BlockStore(args.index, cache_blocks=args.cache_blocks) as store:
        answer = search(store, query, args.start)
    s = answer.stats
    print(f"{answer.nn_id},{answer.sq_dist!r},{s.expansions},{s.ios}")
    return EXIT_OK


def _cmd_ann(args) -> int:
    t0 = time.perf_counter()
    if args.engine == "rtree":
        if args.query_points:
            q_points = load_points_csv(args.query_points)
        elif args.query_index:
            with BlockStore(args.query_index, cache_blocks=0) as q_store:
                q_points = _store_points(q_store)
        else:
            raise _UsageError("--engine rtree needs --query-points or --query-index")
        with RTreeStore(args.data_index, cache_blocks=args.cache_blocks) as store:
            result = rtree_ann(store, q_points)
        p_points = _rtree_points(args.data_index) if args.verify else []
    else:
        if not args.query_index:
            raise _UsageError("voronoi engines need --query-index")
        if args.unseeded and args.best_first:
            raise _UsageError("--unseeded and --best-first are mutually exclusive")
        join = ann_join
        if args.unseeded:
            join = ann_join_unseeded
        elif args.best_first:
            join = ann_join_bestfirst
        with BlockStore(args.query_index, cache_blocks=args.cache_blocks) as q_store:
            with BlockStore(args.data_index, cache_blocks=args.cache_blocks) as p_store:
                result = join(q_store, p_store, args.seed)
                q_points = _store_points(q_store)
                p_points = _store_points(p_store)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    _write_pairs_csv(args.out, result.pairs)
    print(
        f"pairs={len(result.pairs)} ios_p={result.p_side.ios} "
        f"ios_q={result.q_side.ios} ios_total={result.ios_total} "
        f"expansions_p={result.p_side.expansions} cpu_ms={elapsed_ms:.3f}"
    )
    if args.verify:
        bad = oracle_mismatches(result.pairs, q_points, p_points)
        if bad:
            raise VerificationMismatch(f"{len(bad)} pairs disagree with the oracle")
        print("verify: all pairs match the exhaustive oracle")
    return EXIT_OK


def _cmd_bench(args) -> int:
    engines = [e for e in args.engines.split(",") if e]
    seeds = _parse_int_list(args.seeds)
    if args.standard:
        specs = bench_mod.standard_sweeps(
            engines=engines,
            seeds=seeds,
            cache_blocks=args.cache_blocks,
            block_size=args.block_size,
            repetitions=args.reps,
        )
    else:
        specs = [
            bench_mod.ExperimentSpec(
                engine=engine,
                n_data=n_data,
                n_query=n_query,
                distribution=args.distribution,
                rng_seed=seed,
                cache_blocks=args.cache_blocks,
                block_size=args.block_size,
                repetitions=args.reps,
            )
            for engine in engines
            for n_data in _parse_int_list(args.n_data)
            for n_query in _parse_int_list(args.n_query)
            for seed in seeds
        ]
    rows = bench_mod.run_sweep(
        specs,
        args.out,
        verify=args.verify,
        jobs=args.jobs,
        workdir=args.workdir,
    )
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    pairs = _read_pairs_csv(args.pairs)
    q_points = load_points_csv(args.query_points)
    p_points = load_points_csv(args.data_points)
    bad = oracle_mismatches(pairs, q_points, p_points)
    if bad:
        raise VerificationMismatch(
            f"{len(bad)} of {len(q_points)} pairs disagree with the oracle "
            f"(first bad q_id: {bad[0]})"
        )
    print(f"verify: {len(q_points)} pairs match the exhaustive oracle")
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="annjoin",
        description=(
            "All-nearest-neighbour joins over block-stored Delaunay-graph "
            "indexes, with an R-tree baseline under the same IO model."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument(
        "--block-size",
        type=int,
        default=DEFAULT_BLOCK_SIZE,
        help=f"index file block size in bytes (default {DEFAULT_BLOCK_SIZE})",
    )
    common.add_argument(
        "--cache-blocks",
        type=int,
        default=DEFAULT_CACHE_BLOCKS,
        help=f"LRU buffer capacity in blocks, 0 disables (default {DEFAULT_CACHE_BLOCKS})",
    )

    p = sub.add_parser("gen", parents=[common], help="generate a uniform dataset CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--box", default="0,0,1,1", help="minx,miny,maxx,maxy")
    p.add_argument(
        "--order",
        choices=("hilbert", "draw"),
        default="hilbert",
        help="id assignment order (default: space-filling curve)",
    )
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser(
        "build-index", parents=[common], help="build a Delaunay-graph index file"
    )
    p.add_argument("--input", required=True, help="point CSV (id,x,y)")
    p.add_argument("--output", required=True)
    p.add_argument(
        "--method", choices=("auto", "qhull", "incremental"), default="auto"
    )
    p.add_argument(
        "--strict",
        action="store_true",
        help="reject degenerate inputs instead of falling back to a chain graph",
    )
    p.set_defaults(func=_cmd_build_index)

    p = sub.add_parser(
        "build-rtree", parents=[common], help="bulk-load a packed R-tree file"
    )
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_build_rtree)

    p = sub.add_parser(
        "nn", parents=[common], help="single nearest-neighbour query"
    )
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True, help="'x,y'")
    p.add_argument("--start", type=int, required=True, help="start vertex id")
    p.add_argument("--best-first", action="store_true")
    p.set_defaults(func=_cmd_nn)

    p = sub.add_parser(
        "ann", parents=[common], help="all-nearest-neighbour join"
    )
    p.add_argument("--query-index", help="query-side Delaunay index (.vor)")
    p.add_argument(
        "--query-points", help="query CSV; alternative to --query-index for rtree"
    )
    p.add_argument("--data-index", required=True, help=".vor or .rtr file")
    p.add_argument("--engine", choices=("voronoi", "rtree"), default="voronoi")
    p.add_argument("--unseeded", action="store_true")
    p.add_argument("--best-first", action="store_true")
    p.add_argument("--verify", action="store_true", help="check against the oracle")
    p.add_argument("--out", required=True, help="pairs CSV output path")
    p.set_defaults(func=_cmd_ann)

    p = sub.add_parser("bench", parents=[common], help="run a sweep, write a CSV")
    p.add_argument("--engines", default="voronoi-seeded,rtree")
    p.add_argument("--n-data", default="10000")
    p.add_argument("--n-query", default="10000")
    p.add_argument("--seeds", default="0")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--distribution", default="uniform", help="'uniform' or 'file:<path>'")
    p.add_argument("--standard", action="store_true", help="run the two reference grids")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--workdir", default=None, help="index cache directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser(
        "verify", parents=[common], help="check a pairs CSV against the oracle"
    )
    p.add_argument("--query-points", required=True)
    p.add_argument("--data-points", required=True)
    p.add_argument("--pairs", required=True)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"annjoin: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationMismatch as exc:
        print(f"annjoin: verification failed: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (IoFailure, RecordTooLarge, UnknownPoint, UnknownStart, ExhaustedGraph) as exc:
        print(f"annjoin: {exc}", file=sys.stderr)
        return EXIT_IO
    except AnnJoinError as exc:
        print(f"annjoin: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
