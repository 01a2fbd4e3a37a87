"""Close the loop: summary cloud -> 2-D embedding -> scatter plot.

This package never reimplements an embedding algorithm. It parses the
summary CSV contract (``x0..x{D-1},rank,replica,freq``), hands the
coordinates to scikit-learn's TSNE or to umap-learn verbatim, and writes
``x,y,rank,replica,freq`` plus a static scatter colored by provenance.
Row order, count, and provenance columns pass through untouched.
"""

from __future__ import annotations

import csv
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

METHODS = ("tsne", "umap")


class EmbedDemoError(Exception):
    """Base error for the demo."""


class SummaryFormatError(EmbedDemoError, ValueError):
    """The input file does not follow the summary CSV contract."""


class UnknownMethodError(EmbedDemoError, ValueError):
    pass


@dataclass
class EmbeddingRun:
    """One embedding job; hyperparameters are passed to the method verbatim."""

    summary_path: str
    method: str = "tsne"
    seed: int = 0
    params: dict = field(default_factory=dict)
    coords_out: str = "coords.csv"
    plot_out: str = "embedding.png"
    color_by: str = "rank"  # rank | freq


@dataclass
class SummaryTable:
    coords: np.ndarray  # (n, D)
    ranks: np.ndarray
    replicas: np.ndarray
    freqs: np.ndarray

    @property
    def rows(self) -> int:
        return self.coords.shape[0]


def read_summary(path) -> SummaryTable:
    """Parse a summary CSV written by the sketching pipeline."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-3:] != ["rank", "replica", "freq"]:
            raise SummaryFormatError(
                f"{path}: expected header x0..x{{D-1}},rank,replica,freq, got {header}"
            )
        dims = len(header) - 3
        if dims < 1 or header[:dims] != [f"x{d}" for d in range(dims)]:
            raise SummaryFormatError(f"{path}: malformed coordinate columns in {header}")
        coords, ranks, replicas, freqs = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dims + 3:
                raise SummaryFormatError(f"{path}: wrong column count at line {lineno}")
            try:
                coords.append([float(v) for v in row[:dims]])
                ranks.append(int(row[dims]))
                replicas.append(int(row[dims + 1]))
                freqs.append(int(row[dims + 2]))
            except ValueError as exc:
                raise SummaryFormatError(f"{path}: bad value at line {lineno}") from exc
    if not coords:
        raise SummaryFormatError(f"{path}: no data rows")
    return SummaryTable(
        coords=np.asarray(coords, dtype=np.float64),
        ranks=np.asarray(ranks, dtype=np.int64),
        replicas=np.asarray(replicas, dtype=np.int64),
        freqs=np.asarray(freqs, dtype=np.int64),
    )


def _embed_tsne(coords: np.ndarray, seed: int, params: dict) -> np.ndarray:
    from sklearn.manifold import TSNE

    n = coords.shape[0]
    kwargs = {
        "n_components": 2,
        "random_state": seed,
        "init": "pca",
        # sklearn requires perplexity < n_samples
        "perplexity": min(30.0, max(1.0, (n - 1) / 3.0)),
    }
    kwargs.update(params)
    return np.asarray(TSNE(**kwargs).fit_transform(coords), dtype=np.float64)


def _embed_umap(coords: np.ndarray, seed: int, params: dict) -> np.ndarray:
    try:
        from umap import UMAP
    except ImportError as exc:
        raise UnknownMethodError(
            "method 'umap' requires the optional umap-learn package"
        ) from exc

    n = coords.shape[0]
    kwargs = {
        "n_components": 2,
        "random_state": seed,
        "n_neighbors": min(15, max(2, n - 1)),
    }
    kwargs.update(params)
    return np.asarray(UMAP(**kwargs).fit_transform(coords), dtype=np.float64)


def embed_points(coords: np.ndarray, method: str, seed: int, params: dict) -> np.ndarray:
    """2-D embedding of the summary coordinates; trivial layouts for n <= 2."""
    n = coords.shape[0]
    if n == 1:
        return np.zeros((1, 2))
    if n == 2:
        return np.array([[-1.0, 0.0], [1.0, 0.0]])
    if method == "tsne":
        return _embed_tsne(coords, seed, params)
    if method == "umap":
        return _embed_umap(coords, seed, params)
    raise UnknownMethodError(f"unknown method {method!r}; expected one of {METHODS}")


@contextmanager
def _atomic(path):
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    yield tmp
    os.replace(tmp, path)


def write_coords(table: SummaryTable, xy: np.ndarray, path) -> None:
    with _atomic(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "rank", "replica", "freq"])
            for i in range(table.rows):
                writer.writerow(
                    [
                        repr(float(xy[i, 0])),
                        repr(float(xy[i, 1])),
                        int(table.ranks[i]),
                        int(table.replicas[i]),
                        int(table.freqs[i]),
                    ]
                )


def write_plot(table: SummaryTable, xy: np.ndarray, path, color_by: str = "rank") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    color = table.ranks if color_by == "rank" else np.log10(np.maximum(table.freqs, 1))
    fig, ax = plt.subplots(figsize=(7, 6), dpi=120)
    sc = ax.scatter(xy[:, 0], xy[:, 1], c=color, s=6, cmap="viridis", linewidths=0)
    fig.colorbar(sc, ax=ax, label=color_by)
    ax.set_xlabel("embedding x")
    ax.set_ylabel("embedding y")
    ax.set_title(f"{table.rows} summary points")
    with _atomic(path) as tmp:
        fig.savefig(tmp, format=str(path).rsplit(".", 1)[-1])
    plt.close(fig)


def embed(run: EmbeddingRun) -> SummaryTable:
    """Execute one run: read, embed, write coordinates CSV and plot."""
    if run.method not in METHODS:
        raise UnknownMethodError(f"unknown method {run.method!r}; expected one of {METHODS}")
    table = read_summary(run.summary_path)
    xy = embed_points(table.coords, run.method, run.seed, dict(run.params))
    write_coords(table, xy, run.coords_out)
    write_plot(table, xy, run.plot_out, run.color_by)
    return table
