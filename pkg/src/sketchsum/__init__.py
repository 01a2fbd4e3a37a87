"""sketchsum: mergeable count-sketch summarization of massive point streams.

Pipeline: quantize points onto a regular grid, stream the cell keys into
a count sketch (optionally one sketch per partition, merged exactly on a
master), rank the heaviest cells, and expand them into a small jittered,
weighted point cloud ready for tSNE/UMAP-style embedding.
"""

from .config import PipelineConfig
from .errors import (
    BadMagicError,
    ConfigError,
    CounterOverflowError,
    DataQualityError,
    DegenerateAxisError,
    DomainError,
    FormatError,
    IncompatibleSketchError,
    SketchSumError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .harness import MergePlan, Shard, ShardManifest, partition, split_rows, tree_merge, worker_run
from .heavy_hitters import HeavyHitter, TopKTracker, finalize, stream_ingest
from .oracle import (
    CollisionEstimate,
    ErrorBandReport,
    ExactCounts,
    collision_rate,
    error_bands,
    exact_count,
    subsample,
)
from .pipeline import PipelineResult, run_pipeline
from .quantizer import (
    BoundingBox,
    ClampStats,
    GridSpec,
    cell_center,
    decode,
    encode,
    encode_many,
    fit_bounds,
    preprocess,
    quantize,
    quantize_many,
)
from .sketch import CountSketch, SketchConfig, merge
from .streams import gaussian_clusters, zipf_sample, zipf_stream
from .summary import SCHEMES, SummaryPoint, expand, expected_expansion_size, replica_count

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "BoundingBox",
    "ClampStats",
    "CollisionEstimate",
    "ConfigError",
    "CountSketch",
    "CounterOverflowError",
    "DataQualityError",
    "DegenerateAxisError",
    "DomainError",
    "ErrorBandReport",
    "ExactCounts",
    "FormatError",
    "GridSpec",
    "HeavyHitter",
    "IncompatibleSketchError",
    "MergePlan",
    "PipelineConfig",
    "PipelineResult",
    "SCHEMES",
    "Shard",
    "ShardManifest",
    "SketchConfig",
    "SketchSumError",
    "SummaryPoint",
    "TopKTracker",
    "TruncatedPayloadError",
    "VersionMismatchError",
    "cell_center",
    "collision_rate",
    "decode",
    "encode",
    "encode_many",
    "error_bands",
    "exact_count",
    "expand",
    "expected_expansion_size",
    "finalize",
    "fit_bounds",
    "gaussian_clusters",
    "merge",
    "partition",
    "preprocess",
    "quantize",
    "quantize_many",
    "replica_count",
    "run_pipeline",
    "split_rows",
    "stream_ingest",
    "subsample",
    "tree_merge",
    "worker_run",
    "zipf_sample",
    "zipf_stream",
]
