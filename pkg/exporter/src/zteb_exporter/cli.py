"""Command-line front end for the exporter."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import DEFAULT_TEMPLATE, TEMPLATE_SET_7, ExportJob, run_export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zteb-export",
        description="Embed an image-folder dataset (one subdirectory per class) "
                    "into ZTEB view/text files plus a manifest.",
    )
    parser.add_argument("dataset", help="dataset root with one subdirectory per class")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--model", default="mock-vlm",
                        help="'mock-vlm[:dim]' or 'hf:<model-or-path>' (default mock-vlm)")
    parser.add_argument("--n-views", type=int, default=64,
                        help="views per image incl. the source (default 64)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--temperature", type=float, default=0.01,
                        help="softmax temperature recorded in the manifest")
    parser.add_argument("--template-set", choices=["single", "seven"], default="single",
                        help="single generic template, or the 7-template ensemble")
    parser.add_argument("--template", action="append", default=None,
                        help="explicit template with a {} placeholder (repeatable; "
                             "overrides --template-set)")
    parser.add_argument("--resolution", type=int, default=None,
                        help="override the encoder's input resolution")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.template:
        templates = tuple(args.template)
    elif args.template_set == "seven":
        templates = TEMPLATE_SET_7
    else:
        templates = (DEFAULT_TEMPLATE,)
    job = ExportJob(
        dataset_dir=Path(args.dataset),
        output_dir=Path(args.out),
        model=args.model,
        templates=templates,
        n_views=args.n_views,
        seed=args.seed,
        temperature=args.temperature,
        batch_size=args.batch_size,
        resolution=args.resolution,
    )
    try:
        manifest = run_export(job)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(manifest)
    return 0


def main() -> None:
    raise SystemExit(cli_main())
