"""Command-line interface.

Subcommands mirror the pipeline stages: quantize a grid over a point
stream, count cells under a sketch, pick the heavy cells, expand them
into a summary cloud. ``pipeline`` chains everything (optionally across
simulated partitions); ``bench`` sweeps synthetic stream sizes.

Exit codes: 0 success, 1 usage, 2 data/format error, 3 config mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import (
    ConfigError,
    CounterOverflowError,
    DataQualityError,
    DomainError,
    FormatError,
    SketchSumError,
)
from .formats import (
    atomic_output,
    count_rows,
    detect_format,
    read_hh_binary,
    read_hh_csv,
    read_points,
    read_sketch,
    write_hh_csv,
)
from .formats import write_summary_csv
from .harness import MergePlan, Shard, partition, tree_merge, worker_run
from .heavy_hitters import finalize
from .oracle import collision_rate, error_bands, exact_count
from .pipeline import resolve_grid, resolve_threshold, run_pipeline
from .quantizer import BoundingBox, GridSpec, encode_many, quantize_many, threshold_normalize
from .sketch import CountSketch, SketchConfig
from .streams import zipf_stream
from .summary import expand


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sketchsum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_arg(p):
        p.add_argument("--config", required=True, help="pipeline config JSON")

    p = sub.add_parser("sketch", help="sketch one input (or row range) into SNSK + SNHH files")
    add_config_arg(p)
    p.add_argument("--row-start", type=int, default=0)
    p.add_argument("--row-stop", type=int, default=None)
    p.add_argument("--out-dir", required=True, help="directory for shard output files")
    p.set_defaults(func=_cmd_sketch)

    p = sub.add_parser("merge", help="tree-merge SNSK files into one")
    p.add_argument("--out", required=True)
    p.add_argument("inputs", nargs="+", help="SNSK sketch files")
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("topk", help="rank candidate keys against a sketch")
    p.add_argument("--sketch", required=True, help="SNSK file (usually the merged sketch)")
    p.add_argument("--candidates", nargs="+", required=True, help="SNHH candidate files")
    p.add_argument("-k", "--top-k", type=int, required=True)
    p.add_argument("--out", required=True, help="output heavy-hitter CSV")
    p.set_defaults(func=_cmd_topk)

    p = sub.add_parser("expand", help="expand a heavy-hitter CSV into a summary cloud")
    p.add_argument("--hh", required=True, help="ranked heavy-hitter CSV")
    p.add_argument("--config", required=True, help="resolved config JSON (carries the grid)")
    p.add_argument("--scheme", default=None, choices=("single", "log_rank", "log_freq"))
    p.add_argument("--jitter-seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output summary CSV")
    p.set_defaults(func=_cmd_expand)

    p = sub.add_parser("oracle", help="exact counts and error bands for a sketch")
    add_config_arg(p)
    p.add_argument("--sketch", default=None, help="SNSK file to score against exact counts")
    p.add_argument(
        "--bands",
        default=None,
        help="comma-separated rank bands lo:hi (half-open), e.g. 1:300,300:1000",
    )
    p.add_argument("--out", default=None, help="output CSV (exact counts or band report)")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("collisions", help="expected adjacent heavy-hitter collisions on a grid")
    p.add_argument("-K", "--hh-count", type=int, required=True)
    p.add_argument("-D", "--dims", type=int, required=True)
    p.add_argument("-M", "--bins", type=int, required=True)
    p.set_defaults(func=_cmd_collisions)

    p = sub.add_parser("pipeline", help="end-to-end run")
    add_config_arg(p)
    p.add_argument("--partitions", type=int, default=None, help="override config partitions")
    p.add_argument("--jobs", type=int, default=None, help="override config worker concurrency")
    p.add_argument("--out", default=None, help="override config output_dir")
    p.add_argument("--top-k", type=int, default=None, help="override config top_k")
    p.add_argument("--seed", type=int, default=None, help="override config sketch seed")
    p.add_argument(
        "--print-config",
        action="store_true",
        help="print the fully resolved config (grid included) and exit without running",
    )
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("bench", help="sketch-throughput sweep over synthetic Zipf streams")
    p.add_argument("--sizes", default="1e6,1e7,1e8", help="comma-separated stream sizes")
    p.add_argument("--keys", type=int, default=100_000, help="distinct keys in the stream")
    p.add_argument("--exponent", type=float, default=1.1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--rows", type=int, default=16)
    p.add_argument("--cols", type=int, default=200_000)
    p.add_argument("--out", default=None, help="output timing CSV")
    p.set_defaults(func=_cmd_bench)

    return parser


# -- subcommand bodies ----------------------------------------------------


def _cmd_sketch(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    fmt = detect_format(cfg.input_path, cfg.input_format)
    rows = count_rows(cfg.input_path, fmt)
    threshold = resolve_threshold(cfg, fmt, rows)
    grid = resolve_grid(cfg, fmt, rows, threshold)
    manifest = partition(cfg, grid, threshold)
    stop = rows if args.row_stop is None else min(args.row_stop, rows)
    manifest.shards = [Shard(index=0, row_start=args.row_start, row_stop=stop)]
    result = worker_run(manifest, 0, args.out_dir)
    print(f"sketch: {result.sketch_path}")
    print(f"candidates: {result.candidates_path}")
    print(f"rows={result.rows_read} dropped={result.dropped} clamped={result.clamped}")
    return 0


def _cmd_merge(args) -> int:
    plan = MergePlan.for_leaves(len(args.inputs))
    merged = tree_merge(args.inputs, plan)
    with atomic_output(args.out) as tmp:
        tmp.write_bytes(merged.serialize())
    print(
        f"merged {len(args.inputs)} sketches in {plan.depth} levels "
        f"({plan.merge_count} merges) -> {args.out}"
    )
    return 0


def _cmd_topk(args) -> int:
    sketch = read_sketch(args.sketch)
    candidates: set[int] = set()
    for path in args.candidates:
        candidates.update(hh.key for hh in read_hh_binary(path))
    hh_list = finalize(candidates, sketch, args.top_k)
    write_hh_csv(hh_list, args.out)
    print(f"ranked {len(hh_list)} of {len(candidates)} candidates -> {args.out}")
    return 0


def _grid_from_config_file(path) -> GridSpec:
    raw = json.loads(Path(path).read_text())
    block = raw.get("grid")
    if block is None:
        if raw.get("bounds") == "explicit" and raw.get("lo") and raw.get("hi"):
            block = {"bins": raw["bins"], "lo": raw["lo"], "hi": raw["hi"]}
        else:
            raise ConfigError(
                f"{path}: no grid block; pass a resolved config (pipeline writes one)"
            )
    return GridSpec(BoundingBox(tuple(block["lo"]), tuple(block["hi"])), int(block["bins"]))


def _cmd_expand(args) -> int:
    grid = _grid_from_config_file(args.config)
    raw = json.loads(Path(args.config).read_text())
    scheme = args.scheme or raw.get("scheme", "log_rank")
    jitter_seed = args.jitter_seed if args.jitter_seed is not None else raw.get("jitter_seed", 0)
    hh_list = read_hh_csv(args.hh)
    points = expand(hh_list, grid, scheme, jitter_seed)
    write_summary_csv(points, args.out)
    print(f"expanded {len(hh_list)} heavy hitters into {len(points)} points -> {args.out}")
    return 0


def _parse_bands(spec: str) -> list[tuple[int, int]]:
    bands = []
    for part in spec.split(","):
        lo, _, hi = part.partition(":")
        try:
            bands.append((int(lo), int(hi)))
        except ValueError as exc:
            raise UsageError(f"bad band {part!r}; expected lo:hi") from exc
    return bands


def _cmd_oracle(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    fmt = detect_format(cfg.input_path, cfg.input_format)
    rows = count_rows(cfg.input_path, fmt)
    threshold = resolve_threshold(cfg, fmt, rows)
    grid = resolve_grid(cfg, fmt, rows, threshold)
    pts = read_points(cfg.input_path, fmt, 0, rows, dims=cfg.dims)
    pts, _ = threshold_normalize(pts, threshold, cfg.normalize)
    lo, hi = encode_many(quantize_many(pts, grid), grid)
    if hi is None:
        exact = exact_count(lo)
    else:
        exact = exact_count(int(l) | (int(h) << 64) for l, h in zip(lo, hi))
    print(f"exact: {exact.stream_length} updates over {exact.distinct} distinct cells")
    if args.sketch is None:
        if args.out:
            with atomic_output(args.out) as tmp:
                with open(tmp, "w") as fh:
                    fh.write("rank,key,freq\n")
                    for rank, (key, freq) in enumerate(exact.ranked(), 1):
                        fh.write(f"{rank},{key},{freq}\n")
            print(f"exact counts -> {args.out}")
        return 0
    sketch = read_sketch(args.sketch)
    if args.bands:
        bands = _parse_bands(args.bands)
    else:
        n = exact.distinct
        bands = [(1, n + 1)]
    report = error_bands(exact, sketch, bands)
    print(report)
    if args.out:
        with atomic_output(args.out) as tmp:
            with open(tmp, "w") as fh:
                fh.write("rank_lo,rank_hi,keys,rms_rel_error\n")
                for lo_r, hi_r, rms, count in report.rows():
                    fh.write(f"{lo_r},{hi_r},{count},{rms!r}\n")
        print(f"band report -> {args.out}")
    return 0


def _cmd_collisions(args) -> int:
    est = collision_rate(args.hh_count, args.dims, args.bins)
    print(f"heavy hitters        K = {est.hh_count}")
    print(f"dimensions           D = {est.dims}")
    print(f"bins per axis        M = {est.bins_per_axis}")
    print(f"grid cells           V = {est.cell_count}")
    print(f"neighborhood cells   W = {est.neighborhood_cells}")
    print(f"cell density         {est.cell_density:.6g}")
    print(f"neighborhood density {est.neighborhood_density:.6g}")
    print(f"expected collisions  C = {est.collisions:.6g}")
    return 0


def _cmd_pipeline(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    if args.partitions is not None:
        cfg.partitions = args.partitions
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.out is not None:
        cfg.output_dir = args.out
    if args.top_k is not None:
        cfg.top_k = args.top_k
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    if args.print_config:
        fmt = detect_format(cfg.input_path, cfg.input_format)
        rows = count_rows(cfg.input_path, fmt)
        threshold = resolve_threshold(cfg, fmt, rows)
        grid = resolve_grid(cfg, fmt, rows, threshold)
        print(json.dumps(cfg.resolved_dict(grid, threshold), indent=2))
        return 0
    result = run_pipeline(cfg)
    for name, path in result.outputs.items():
        print(f"{name}: {path}")
    print(json.dumps(result.stats, indent=2))
    return 0


def _parse_sizes(spec: str) -> list[int]:
    sizes = []
    for part in spec.split(","):
        try:
            sizes.append(int(float(part)))
        except ValueError as exc:
            raise UsageError(f"bad size {part!r}") from exc
    if not sizes or any(s < 1 for s in sizes):
        raise UsageError("sizes must be positive")
    return sizes


def run_bench(
    sizes: list[int],
    n_keys: int,
    exponent: float,
    seed: int,
    rows: int,
    cols: int,
) -> list[dict]:
    """Time the sketch-update phase per stream size; generation is excluded."""
    results = []
    for size in sizes:
        sketch = CountSketch(SketchConfig(rows, cols, seed))
        sketch.counters.fill(0)  # fault in the table pages outside the timed region
        elapsed = 0.0
        for batch in zipf_stream(n_keys, size, exponent, seed):
            t0 = time.perf_counter()
            sketch.update_many(batch)
            elapsed += time.perf_counter() - t0
        results.append(
            {
                "size": size,
                "seconds": elapsed,
                "updates_per_sec": size / elapsed if elapsed > 0 else float("inf"),
            }
        )
    return results


def linear_fit_r2(sizes, seconds) -> float:
    x = np.asarray(sizes, dtype=np.float64)
    y = np.asarray(seconds, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = y - y.mean()
    denom = float(total @ total)
    return 1.0 if denom == 0 else 1.0 - float(residual @ residual) / denom


def _cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    results = run_bench(sizes, args.keys, args.exponent, args.seed, args.rows, args.cols)
    print(f"{'size':>12}  {'seconds':>10}  {'updates/s':>12}")
    for r in results:
        print(f"{r['size']:>12}  {r['seconds']:>10.3f}  {r['updates_per_sec']:>12.3e}")
    if len(results) >= 2:
        r2 = linear_fit_r2([r["size"] for r in results], [r["seconds"] for r in results])
        print(f"linear fit R^2 = {r2:.6f}")
    if args.out:
        with atomic_output(args.out) as tmp:
            with open(tmp, "w") as fh:
                fh.write("size,seconds,updates_per_sec\n")
                for r in results:
                    fh.write(f"{r['size']},{r['seconds']!r},{r['updates_per_sec']!r}\n")
        print(f"timings -> {args.out}")
    return 0


# -- entry ----------------------------------------------------------------


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError,) as exc:  # includes IncompatibleSketchError
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except (FormatError, DataQualityError, DomainError, CounterOverflowError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except SketchSumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
