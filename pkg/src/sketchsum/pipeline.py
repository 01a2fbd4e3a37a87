"""End-to-end run: input points -> merged sketch -> top-K -> summary cloud.

The partitioned path is the only path: a single-node run is simply
partitions=1, so both produce identical outputs by construction (the
merged sketch is bit-identical by linearity, and ranking plus expansion
are deterministic functions of it).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import DataQualityError
from .formats import (
    count_rows,
    detect_format,
    read_hh_binary,
    read_points,
    write_hh_csv,
    write_sketch,
    write_summary_csv,
)
from .harness import MergePlan, partition, run_workers, tree_merge
from .heavy_hitters import finalize
from .quantizer import BoundsAccumulator, GridSpec, threshold_normalize
from .summary import expand

_PREPASS_BATCH = 1 << 16


@dataclass
class PipelineResult:
    outputs: dict[str, str]
    stats: dict


def resolve_threshold(cfg: PipelineConfig, fmt: str, rows: int) -> float | None:
    """Absolute threshold, or the configured percentile of the norm sample."""
    if cfg.threshold_percentile is None:
        return cfg.threshold
    norms = []
    for start in range(0, rows, _PREPASS_BATCH):
        pts = read_points(
            cfg.input_path, fmt, start, min(start + _PREPASS_BATCH, rows), dims=cfg.dims
        )
        norms.append(np.linalg.norm(pts, axis=1))
    if not norms:
        raise DataQualityError("cannot take a norm percentile of an empty input")
    return float(np.percentile(np.concatenate(norms), cfg.threshold_percentile))


def resolve_grid(cfg: PipelineConfig, fmt: str, rows: int, threshold: float | None) -> GridSpec:
    """Explicit grid from the config, or a box fitted over the
    preprocessed input (the fit sees the same transform workers apply)."""
    explicit = cfg.explicit_grid()
    if explicit is not None:
        return explicit
    acc = BoundsAccumulator()
    for start in range(0, rows, _PREPASS_BATCH):
        pts = read_points(
            cfg.input_path, fmt, start, min(start + _PREPASS_BATCH, rows), dims=cfg.dims
        )
        pts, _ = threshold_normalize(pts, threshold, cfg.normalize)
        acc.add(pts)
    return GridSpec(acc.result(), cfg.bins)


def run_pipeline(cfg: PipelineConfig, outdir=None) -> PipelineResult:
    cfg.validate()
    outdir = Path(cfg.output_dir if outdir is None else outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fmt = detect_format(cfg.input_path, cfg.input_format)
    rows = count_rows(cfg.input_path, fmt)
    threshold = resolve_threshold(cfg, fmt, rows)
    grid = resolve_grid(cfg, fmt, rows, threshold)

    manifest = partition(cfg, grid, threshold)
    manifest_path = outdir / "manifest.json"
    manifest.save(manifest_path)
    shard_dir = outdir / "shards"
    results = run_workers(manifest, manifest_path, shard_dir, jobs=cfg.jobs)

    plan = MergePlan.for_leaves(manifest.partitions)
    merged = tree_merge([r.sketch_path for r in results], plan)
    merged_path = outdir / "merged.snsk"
    write_sketch(merged, merged_path)

    candidates: set[int] = set()
    for r in results:
        candidates.update(hh.key for hh in read_hh_binary(r.candidates_path))
    hh_list = finalize(candidates, merged, cfg.top_k)
    topk_path = outdir / "topk.csv"
    write_hh_csv(hh_list, topk_path)

    summary = expand(hh_list, grid, cfg.scheme, cfg.jitter_seed)
    summary_path = outdir / "summary.csv"
    write_summary_csv(summary, summary_path)

    resolved = cfg.resolved_dict(grid, threshold)
    resolved["output_dir"] = str(outdir)
    (outdir / "resolved_config.json").write_text(json.dumps(resolved, indent=2) + "\n")

    stats = {
        "rows_total": rows,
        "rows_read": sum(r.rows_read for r in results),
        "dropped_below_threshold": sum(r.dropped for r in results),
        "clamped_points": sum(r.clamped for r in results),
        "total_updates": merged.total_updates,
        "partitions": manifest.partitions,
        "merge_depth": plan.depth,
        "merge_count": plan.merge_count,
        "candidates": len(candidates),
        "top_k": len(hh_list),
        "summary_points": len(summary),
    }
    (outdir / "stats.json").write_text(json.dumps(stats, indent=2) + "\n")

    return PipelineResult(
        outputs={
            "manifest": str(manifest_path),
            "merged_sketch": str(merged_path),
            "topk_csv": str(topk_path),
            "summary_csv": str(summary_path),
            "resolved_config": str(outdir / "resolved_config.json"),
            "stats": str(outdir / "stats.json"),
        },
        stats=stats,
    )
