"""Benchmark driver: data generation, index builds, sweeps, CSV reporting.

A sweep cell is one (engine, n_data, n_query, seed) combination; cells
share generated datasets and prebuilt index files through a cache
directory, and every run opens fresh stores so IO counters start cold.
Reported CPU time covers the join only; index construction is treated as
precomputed.
"""

from __future__ import annotations

import csv
import os
import random
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from hashlib import sha1
from pathlib import Path
from typing import Iterable, Sequence

from .ann import ann_join, ann_join_bestfirst, ann_join_unseeded, oracle_mismatches
from .baseline import RTreeStore, build_rtree, rtree_ann, write_rtree
from .errors import AnnJoinError, VerificationMismatch
from .geom import PointRecord, build_neighbour_graph, load_points_csv, save_points_csv
from .sfc import hilbert_argsort
from .store import (
    BlockStore,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_CACHE_BLOCKS,
    MIN_BLOCK_SIZE,
    write_index,
)

ENGINES = ("voronoi-seeded", "voronoi-unseeded", "voronoi-bestfirst", "rtree")

CSV_COLUMNS = (
    "engine",
    "n_data",
    "n_query",
    "seed",
    "rep",
    "cpu_ms",
    "ios_p",
    "ios_q",
    "ios_total",
    "expansions",
)

VERIFY_PRODUCT_LIMIT = 10_000_000

# Sweep shapes used for the headline engine comparison: one varies the
# query count at fixed data size, the other the data size at fixed query
# count.
QUERY_SWEEP_COUNTS = (5000, 10000, 15000, 20000, 24000)
QUERY_SWEEP_N_DATA = 10000
DATA_SWEEP_COUNTS = (5000, 10000, 15000, 20000, 24000)
DATA_SWEEP_N_QUERY = 20000


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep cell: engine, sizes, and the knobs of the cost model."""

    engine: str
    n_data: int
    n_query: int
    distribution: str = "uniform"
    rng_seed: int = 0
    cache_blocks: int = DEFAULT_CACHE_BLOCKS
    block_size: int = DEFAULT_BLOCK_SIZE
    repetitions: int = 1

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; know {ENGINES}")
        if self.n_data < 1 or self.n_query < 1:
            raise ValueError("n_data and n_query must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.block_size < MIN_BLOCK_SIZE:
            raise ValueError(f"block_size must be >= {MIN_BLOCK_SIZE}")
        if self.cache_blocks < 0:
            raise ValueError("cache_blocks must be >= 0")
        if self.distribution != "uniform" and not self.distribution.startswith("file:"):
            raise ValueError(
                f"distribution must be 'uniform' or 'file:<path>', got {self.distribution!r}"
            )


def gen_uniform(
    n: int,
    rng_seed,
    box: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0),
    order: str = "hilbert",
) -> list[PointRecord]:
    """n distinct points drawn i.i.d. uniformly in the box.

    Deterministic per seed; duplicate draws are rejected and redrawn.
    With ``order="hilbert"`` (the default) ids follow a space-filling
    curve, so consecutive ids are spatial neighbours and flat-file blocks
    are spatially coherent, matching the locality a packed tree gets by
    construction.  ``order="draw"`` keeps raw draw order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    minx, miny, maxx, maxy = box
    if not (minx < maxx and miny < maxy):
        raise ValueError(f"degenerate bounding box {box!r}")
    rng = random.Random(rng_seed)
    seen = set()
    coords = []
    while len(coords) < n:
        x = minx + rng.random() * (maxx - minx)
        y = miny + rng.random() * (maxy - miny)
        if (x, y) in seen:
            continue
        seen.add((x, y))
        coords.append((x, y))
    if order == "hilbert":
        coords = [coords[i] for i in hilbert_argsort(coords)]
    elif order != "draw":
        raise ValueError(f"unknown point order {order!r}")
    return [PointRecord(i, x, y) for i, (x, y) in enumerate(coords)]


# -- dataset / index preparation -------------------------------------------


def _dataset_points(spec: ExperimentSpec, role: str) -> list[PointRecord]:
    n = spec.n_data if role == "data" else spec.n_query
    if spec.distribution == "uniform":
        return gen_uniform(n, f"{spec.rng_seed}:{role}")
    path = spec.distribution[len("file:") :]
    rows = load_points_csv(path)
    if len(rows) < spec.n_data + spec.n_query:
        raise AnnJoinError(
            f"{path} holds {len(rows)} points, need {spec.n_data + spec.n_query}"
        )
    lo, hi = (0, spec.n_data) if role == "data" else (
        spec.n_data,
        spec.n_data + spec.n_query,
    )
    return [PointRecord(i - lo, p.x, p.y) for i, p in enumerate(rows[lo:hi], start=lo)]


def _dataset_tag(spec: ExperimentSpec, role: str) -> str:
    n = spec.n_data if role == "data" else spec.n_query
    if spec.distribution == "uniform":
        return f"uni-{role}-n{n}-s{spec.rng_seed}"
    digest = sha1(spec.distribution.encode()).hexdigest()[:12]
    lo = 0 if role == "data" else spec.n_data
    return f"file{digest}-{lo}-{lo + n}"


@dataclass(frozen=True)
class CellPaths:
    q_csv: Path
    p_csv: Path
    q_vor: Path
    p_vor: Path
    p_rtr: Path


def _atomic(path: Path, write_fn) -> None:
    if path.exists():
        return
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    write_fn(tmp)
    os.replace(tmp, path)


def prepare_cell(spec: ExperimentSpec, workdir: Path) -> CellPaths:
    """Generate datasets and build index files for one cell, with caching."""
    workdir.mkdir(parents=True, exist_ok=True)
    tags = {role: _dataset_tag(spec, role) for role in ("data", "query")}
    csvs = {}
    for role, tag in tags.items():
        path = workdir / f"{tag}.csv"
        _atomic(path, lambda p, r=role: save_points_csv(p, _dataset_points(spec, r)))
        csvs[role] = path
    vors = {}
    for role, tag in tags.items():
        path = workdir / f"{tag}-b{spec.block_size}.vor"
        if spec.engine != "rtree":
            _atomic(
                path,
                lambda p, r=role: write_index(
                    build_neighbour_graph(load_points_csv(csvs[r])),
                    p,
                    spec.block_size,
                ),
            )
        vors[role] = path
    rtr = workdir / f"{tags['data']}-b{spec.block_size}.rtr"
    if spec.engine == "rtree":
        _atomic(
            rtr,
            lambda p: write_rtree(
                build_rtree(load_points_csv(csvs["data"]), spec.block_size), p
            ),
        )
    return CellPaths(
        q_csv=csvs["query"],
        p_csv=csvs["data"],
        q_vor=vors["query"],
        p_vor=vors["data"],
        p_rtr=rtr,
    )


# -- running ------------------------------------------------------------------

_VORONOI_JOINS = {
    "voronoi-seeded": ann_join,
    "voronoi-unseeded": ann_join_unseeded,
    "voronoi-bestfirst": ann_join_bestfirst,
}


def run_cell(spec: ExperimentSpec, paths: CellPaths, verify: bool = False) -> dict:
    """Run one engine on prepared indexes; returns one result row."""
    if spec.engine == "rtree":
        q_points = load_points_csv(paths.q_csv)
        with RTreeStore(paths.p_rtr, cache_blocks=spec.cache_blocks) as store:
            t0 = time.perf_counter()
            result = rtree_ann(store, q_points)
            elapsed = time.perf_counter() - t0
    else:
        join = _VORONOI_JOINS[spec.engine]
        with BlockStore(paths.q_vor, cache_blocks=spec.cache_blocks) as q_store:
            with BlockStore(paths.p_vor, cache_blocks=spec.cache_blocks) as p_store:
                t0 = time.perf_counter()
                result = join(q_store, p_store, spec.rng_seed)
                elapsed = time.perf_counter() - t0
    if verify and spec.n_data * spec.n_query <= VERIFY_PRODUCT_LIMIT:
        bad = oracle_mismatches(
            result.pairs, load_points_csv(paths.q_csv), load_points_csv(paths.p_csv)
        )
        if bad:
            raise VerificationMismatch(
                f"{spec.engine} n_data={spec.n_data} n_query={spec.n_query} "
                f"seed={spec.rng_seed}: {len(bad)} pairs disagree with the oracle"
            )
    return {
        "engine": spec.engine,
        "n_data": spec.n_data,
        "n_query": spec.n_query,
        "seed": spec.rng_seed,
        "cpu_ms": round(elapsed * 1000.0, 3),
        "ios_p": result.p_side.ios,
        "ios_q": result.q_side.ios,
        "ios_total": result.ios_total,
        "expansions": result.p_side.expansions,
    }


def _cell_task(args) -> dict:
    spec, workdir, verify = args
    paths = prepare_cell(spec, Path(workdir))
    return run_cell(spec, paths, verify=verify)


def run_sweep(
    specs: Sequence[ExperimentSpec],
    out_path,
    verify: bool = False,
    jobs: int = 1,
    workdir=None,
) -> list[dict]:
    """Run a sweep grid and stream rows to a CSV.

    One row per repetition, written (and flushed) as soon as it is
    available so an aborted sweep leaves a usable partial CSV.  Cells are
    independent; with ``jobs > 1`` they run in worker processes, each
    with private stores.
    """
    if workdir is None:
        workdir = Path(tempfile.gettempdir()) / "annjoin-bench"
    workdir = Path(workdir)

    tasks = []
    for spec in specs:
        for rep in range(1, spec.repetitions + 1):
            tasks.append((spec, rep))

    rows: list[dict] = []
    try:
        out_fh = open(out_path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise AnnJoinError(f"cannot write {out_path}: {exc}") from exc
    with out_fh:
        writer = csv.DictWriter(out_fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        out_fh.flush()

        def emit(spec: ExperimentSpec, rep: int, row: dict) -> None:
            row = dict(row, rep=rep)
            writer.writerow(row)
            out_fh.flush()
            rows.append(row)

        if jobs <= 1:
            for spec, rep in tasks:
                paths = prepare_cell(spec, workdir)
                emit(spec, rep, run_cell(spec, paths, verify=verify))
        else:
            # Build indexes up front (deduplicated by the file cache) so
            # worker processes never race on construction.
            for spec in specs:
                prepare_cell(spec, workdir)
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    pool.submit(_cell_task, (spec, str(workdir), verify))
                    for spec, rep in tasks
                ]
                for (spec, rep), fut in zip(tasks, futures):
                    emit(spec, rep, fut.result())
    return rows


def standard_sweeps(
    engines: Iterable[str] = ("voronoi-seeded", "rtree"),
    seeds: Iterable[int] = (0,),
    cache_blocks: int = DEFAULT_CACHE_BLOCKS,
    block_size: int = DEFAULT_BLOCK_SIZE,
    repetitions: int = 1,
) -> list[ExperimentSpec]:
    """The two reference grids: vary n_query at n_data=10000, and vice versa."""
    specs = []
    for engine in engines:
        for seed in seeds:
            for n_query in QUERY_SWEEP_COUNTS:
                specs.append(
                    ExperimentSpec(
                        engine=engine,
                        n_data=QUERY_SWEEP_N_DATA,
                        n_query=n_query,
                        rng_seed=seed,
                        cache_blocks=cache_blocks,
                        block_size=block_size,
                        repetitions=repetitions,
                    )
                )
            for n_data in DATA_SWEEP_COUNTS:
                if (n_data, DATA_SWEEP_N_QUERY) == (
                    QUERY_SWEEP_N_DATA,
                    DATA_SWEEP_N_QUERY,
                ):
                    continue  # cell already covered by the first grid
                specs.append(
                    ExperimentSpec(
                        engine=engine,
                        n_data=n_data,
                        n_query=DATA_SWEEP_N_QUERY,
                        rng_seed=seed,
                        cache_blocks=cache_blocks,
                        block_size=block_size,
                        repetitions=repetitions,
                    )
                )
    return specs
