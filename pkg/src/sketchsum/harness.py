"""Distributed-run simulation: sharding, worker jobs, tree merging.

Workers are ordinary processes (or in-process calls) that exchange files:
each reads its contiguous row range, sketches it under the shared grid
and sketch config from the manifest, and writes an SNSK sketch plus an
SNHH candidate file. The master merges sketches pairwise along a
balanced binary tree; because sketch construction is linear, the merged
result is bit-identical to a single-node pass, regardless of merge order
or scheduling. Communication per worker is one fixed-size sketch file,
independent of how many rows the shard held.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import PipelineConfig
from .errors import ConfigError, IncompatibleSketchError
from .formats import (
    count_rows,
    detect_format,
    read_points,
    read_sketch,
    write_hh_binary,
    write_sketch,
)
from .heavy_hitters import HeavyHitter, TopKTracker, stream_ingest
from .quantizer import (
    BoundingBox,
    ClampStats,
    GridSpec,
    encode_many,
    quantize_many,
    threshold_normalize,
)
from .sketch import CountSketch, SketchConfig, merge

_WORKER_BATCH = 1 << 16


@dataclass(frozen=True)
class Shard:
    """A contiguous, half-open row range of the shared input."""

    index: int
    row_start: int
    row_stop: int

    @property
    def row_count(self) -> int:
        return self.row_stop - self.row_start


def split_rows(row_count: int, partitions: int) -> list[tuple[int, int]]:
    """Contiguous ranges covering [0, row_count) with sizes differing by <= 1."""
    if partitions < 1:
        raise ConfigError(f"partitions must be >= 1, got {partitions}")
    if row_count < 0:
        raise ConfigError(f"row_count must be non-negative, got {row_count}")
    base, extra = divmod(row_count, partitions)
    ranges = []
    start = 0
    for i in range(partitions):
        size = base + (1 if i < extra else 0)
        ranges.append((start, start + size))
        start += size
    return ranges


@dataclass
class ShardManifest:
    """Everything a worker needs; the grid and sketch config are shared.

    Shared hashing (the seed inside sketch) and shared table shape are
    what make the per-shard sketches mergeable.
    """

    input_path: str
    input_format: str
    grid: GridSpec
    sketch: SketchConfig
    shards: list[Shard]
    threshold: float | None
    normalize: bool
    candidate_capacity: int

    @property
    def partitions(self) -> int:
        return len(self.shards)

    def to_dict(self) -> dict:
        return {
            "input_path": self.input_path,
            "input_format": self.input_format,
            "grid": {
                "dims": self.grid.dims,
                "bins": self.grid.bins_per_axis,
                "lo": list(self.grid.box.lo),
                "hi": list(self.grid.box.hi),
            },
            "sketch": {
                "rows": self.sketch.rows,
                "cols": self.sketch.cols,
                "seed": self.sketch.seed,
            },
            "shards": [[s.index, s.row_start, s.row_stop] for s in self.shards],
            "threshold": self.threshold,
            "normalize": self.normalize,
            "candidate_capacity": self.candidate_capacity,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ShardManifest":
        grid = GridSpec(
            BoundingBox(tuple(raw["grid"]["lo"]), tuple(raw["grid"]["hi"])),
            int(raw["grid"]["bins"]),
        )
        sketch = SketchConfig(
            int(raw["sketch"]["rows"]), int(raw["sketch"]["cols"]), int(raw["sketch"]["seed"])
        )
        shards = [Shard(int(i), int(a), int(b)) for i, a, b in raw["shards"]]
        return cls(
            input_path=raw["input_path"],
            input_format=raw["input_format"],
            grid=grid,
            sketch=sketch,
            shards=shards,
            threshold=raw.get("threshold"),
            normalize=bool(raw.get("normalize", False)),
            candidate_capacity=int(raw["candidate_capacity"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ShardManifest":
        return cls.from_dict(json.loads(Path(path).read_text()))


def partition(
    cfg: PipelineConfig, grid: GridSpec, threshold: float | None
) -> ShardManifest:
    """Split the configured input into the manifest's contiguous shards."""
    fmt = detect_format(cfg.input_path, cfg.input_format)
    rows = count_rows(cfg.input_path, fmt)
    shards = [
        Shard(index=i, row_start=a, row_stop=b)
        for i, (a, b) in enumerate(split_rows(rows, cfg.partitions))
    ]
    return ShardManifest(
        input_path=cfg.input_path,
        input_format=fmt,
        grid=grid,
        sketch=cfg.sketch_config,
        shards=shards,
        threshold=threshold,
        normalize=cfg.normalize,
        candidate_capacity=cfg.candidate_budget,
    )


@dataclass
class WorkerResult:
    sketch_path: str
    candidates_path: str
    rows_read: int
    dropped: int
    clamped: int
    total_updates: int


def worker_run(manifest: ShardManifest, shard_index: int, outdir) -> WorkerResult:
    """Sketch one shard and write its SNSK + SNHH files.

    Reads the shard's rows in batches, applies the shared preprocessing,
    quantizes against the shared grid, and streams keys into a fresh
    sketch and tracker. Data errors carry the shard id and input row.
    """
    shard = manifest.shards[shard_index]
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sketch = CountSketch(manifest.sketch)
    tracker = TopKTracker(manifest.candidate_capacity)
    stats = ClampStats()
    dropped = 0
    rows_read = 0
    for start in range(shard.row_start, shard.row_stop, _WORKER_BATCH):
        stop = min(start + _WORKER_BATCH, shard.row_stop)
        pts = read_points(
            manifest.input_path,
            manifest.input_format,
            start,
            stop,
            dims=manifest.grid.dims,
            shard=shard.index,
        )
        rows_read += pts.shape[0]
        pts, batch_dropped = threshold_normalize(pts, manifest.threshold, manifest.normalize)
        dropped += batch_dropped
        if pts.shape[0] == 0:
            continue
        indices = quantize_many(pts, manifest.grid, stats)
        lo, hi = encode_many(indices, manifest.grid)
        stream_ingest(sketch, tracker, (lo, hi) if hi is not None else lo)
    sketch_path = outdir / f"shard_{shard.index:04d}.snsk"
    cand_path = outdir / f"shard_{shard.index:04d}.snhh"
    write_sketch(sketch, sketch_path)
    candidates = sorted(tracker.items(), key=lambda kv: (-kv[1], kv[0]))
    write_hh_binary(
        [HeavyHitter(key=k, freq=e, rank=r) for r, (k, e) in enumerate(candidates, 1)],
        cand_path,
    )
    result = WorkerResult(
        sketch_path=str(sketch_path),
        candidates_path=str(cand_path),
        rows_read=rows_read,
        dropped=dropped,
        clamped=stats.clamped,
        total_updates=sketch.total_updates,
    )
    (outdir / f"shard_{shard.index:04d}.stats.json").write_text(
        json.dumps(result.__dict__, indent=2) + "\n"
    )
    return result


def _worker_entry(manifest_path: str, shard_index: int, outdir: str) -> dict:
    # process-pool entry point: share nothing but the manifest file
    manifest = ShardManifest.load(manifest_path)
    return worker_run(manifest, shard_index, outdir).__dict__


def run_workers(
    manifest: ShardManifest, manifest_path, outdir, jobs: int = 1
) -> list[WorkerResult]:
    """Run every shard's worker, sequentially or in a process pool."""
    if jobs <= 1 or manifest.partitions == 1:
        return [worker_run(manifest, i, outdir) for i in range(manifest.partitions)]
    with ProcessPoolExecutor(max_workers=min(jobs, manifest.partitions)) as pool:
        futures = [
            pool.submit(_worker_entry, str(manifest_path), i, str(outdir))
            for i in range(manifest.partitions)
        ]
        return [WorkerResult(**f.result()) for f in futures]


@dataclass(frozen=True)
class MergePlan:
    """Balanced binary reduction over ``leaves`` inputs.

    Each level pairs adjacent survivors; an odd one carries upward. The
    number of levels is ceil(log2(leaves)) and the total number of
    pairwise merges is leaves - 1.
    """

    leaves: int
    levels: tuple[tuple[tuple[int, int], ...], ...]

    @classmethod
    def for_leaves(cls, leaves: int) -> "MergePlan":
        if leaves < 1:
            raise ConfigError(f"a merge plan needs at least one leaf, got {leaves}")
        levels = []
        width = leaves
        while width > 1:
            pairs = tuple((2 * i, 2 * i + 1) for i in range(width // 2))
            levels.append(pairs)
            width = width // 2 + (width & 1)
        return cls(leaves=leaves, levels=tuple(levels))

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def merge_count(self) -> int:
        return sum(len(level) for level in self.levels)


def tree_merge(paths, plan: MergePlan | None = None) -> CountSketch:
    """Merge sketch files along a balanced tree; exact by linearity.

    All files must share one sketch config; a mismatch names the
    offending file.
    """
    paths = [str(p) for p in paths]
    if not paths:
        raise ConfigError("tree_merge needs at least one sketch file")
    if plan is None:
        plan = MergePlan.for_leaves(len(paths))
    if plan.leaves != len(paths):
        raise ConfigError(f"merge plan is for {plan.leaves} leaves, got {len(paths)} files")
    reference: SketchConfig | None = None

    def load(item):
        nonlocal reference
        if isinstance(item, CountSketch):
            return item
        sketch = read_sketch(item)
        if reference is None:
            reference = sketch.config
        elif sketch.config != reference:
            raise IncompatibleSketchError(
                f"{item}: sketch config {sketch.config} differs from {reference}"
            )
        return sketch

    work: list = list(paths)
    for level in plan.levels:
        nxt = []
        consumed = set()
        for i, j in level:
            nxt.append(merge(load(work[i]), load(work[j])))
            consumed.update((i, j))
        for idx in range(len(work)):
            if idx not in consumed:
                nxt.append(load(work[idx]))
        work = nxt
    return load(work[0])
