"""CLI for the embedding demo."""

from __future__ import annotations

import argparse
import json
import sys

from .runner import EmbedDemoError, EmbeddingRun, embed


def _parse_params(pairs: list[str]) -> dict:
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise SystemExit(f"--param expects key=value, got {pair!r}")
        try:
            params[key] = json.loads(value)  # numbers/bools/strings verbatim
        except json.JSONDecodeError:
            params[key] = value
    return params


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="embed-demo",
        description="Embed a sketchsum summary CSV into 2-D and plot it.",
    )
    ap.add_argument("--summary", required=True, help="summary CSV from the sketching pipeline")
    ap.add_argument("--method", default="tsne", choices=("tsne", "umap"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="hyperparameter passed to the embedding method verbatim (repeatable)",
    )
    ap.add_argument("--out-coords", default="coords.csv")
    ap.add_argument("--out-plot", default="embedding.png")
    ap.add_argument("--color-by", default="rank", choices=("rank", "freq"))
    args = ap.parse_args(argv)

    run = EmbeddingRun(
        summary_path=args.summary,
        method=args.method,
        seed=args.seed,
        params=_parse_params(args.param),
        coords_out=args.out_coords,
        plot_out=args.out_plot,
        color_by=args.color_by,
    )
    try:
        table = embed(run)
    except EmbedDemoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"embedded {table.rows} points -> {args.out_coords}, {args.out_plot}")
    return 0


def entry() -> None:
    sys.exit(main())
