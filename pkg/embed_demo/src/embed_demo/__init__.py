"""Embedding demo for sketchsum summary files."""

from .runner import (
    EmbedDemoError,
    EmbeddingRun,
    SummaryFormatError,
    SummaryTable,
    UnknownMethodError,
    embed,
    embed_points,
    read_summary,
)

__version__ = "0.1.0"
