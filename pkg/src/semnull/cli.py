"""Command-line pipeline: build projectors, decouple embeddings, mosaic
images, train heads, and score sets.

Every subcommand writes through a temporary file and renames on success, so
failed runs never leave partial outputs. Exit codes: 0 success, 1 data or
runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError
from .metrics import evaluate, export_features_csv, report_json
from .patches import SelectionConfig, select_and_reassemble, selection_scores
from .projection import (
    DEFAULT_THRESHOLD,
    fit_nullspace,
    project,
    read_projection,
    write_projection,
)
from .records import (
    EmbeddingRecord,
    EmbeddingSet,
    read_embeddings,
    text_matrix,
    visual_matrix,
    write_embeddings,
)
from .training import TrainConfig, read_head, train, write_head

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class CommandOutcome:
    """Result of one CLI invocation; diagnostics go to the error stream."""

    exit_code: int
    diagnostics: str = ""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _atomic_write(path: str, write_fn, binary: bool = True) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        mode = "wb" if binary else "w"
        with os.fdopen(fd, mode) as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_embeddings(path: str) -> EmbeddingSet:
    with open(path, "rb") as fh:
        return read_embeddings(fh)


def _load_projection(path: str):
    with open(path, "rb") as fh:
        return read_projection(fh)


def _load_head(path: str):
    with open(path, "rb") as fh:
        return read_head(fh)


def _cmd_nullspace(args) -> str:
    eset = _load_embeddings(args.embeddings)
    ns = fit_nullspace(text_matrix(eset), args.threshold)
    _atomic_write(args.out, lambda fh: write_projection(ns, fh))
    return (
        f"nullspace: dim={ns.dim} rank_kept={ns.rank_kept} "
        f"from {ns.source_count} text vectors -> {args.out}"
    )


def _cmd_project(args) -> str:
    eset = _load_embeddings(args.embeddings)
    ns = _load_projection(args.proj)
    if eset.dim != ns.dim:
        raise ValueError(
            f"embeddings dimension {eset.dim} != projector dimension {ns.dim}"
        )
    decoupled = project(visual_matrix(eset).astype(np.float64), ns)
    records = tuple(
        EmbeddingRecord(
            id=r.id, label=r.label, source=r.source,
            visual=row.astype(np.float32), text=r.text,
        )
        for r, row in zip(eset.records, decoupled)
    )
    out_set = EmbeddingSet(dim=eset.dim, records=records)
    _atomic_write(args.out, lambda fh: write_embeddings(out_set, fh))
    return f"project: {len(out_set)} records decoupled -> {args.out}"


def _cmd_patchsel(args) -> str:
    if not os.path.isdir(args.input):
        raise ValueError(f"input directory not found: {args.input}")
    names = sorted(
        n for n in os.listdir(args.input)
        if n.lower().endswith(IMAGE_SUFFIXES)
    )
    if not names:
        raise ValueError(f"no PNG or JPEG images in {args.input}")
    cfg = SelectionConfig(
        patch_size=args.patch, target_size=args.target, seed=args.seed
    )
    os.makedirs(args.output, exist_ok=True)
    if args.entropy_csv:
        os.makedirs(args.entropy_csv, exist_ok=True)
    for name in names:
        src = os.path.join(args.input, name)
        try:
            with Image.open(src) as handle:
                img = np.asarray(handle.convert("RGB"))
        except UnidentifiedImageError as e:
            raise ValueError(f"cannot decode image {src}") from e
        mosaic = select_and_reassemble(img, cfg)
        stem = os.path.splitext(name)[0]

        def save_png(fh, mosaic=mosaic):
            Image.fromarray(mosaic).save(fh, format="PNG")

        _atomic_write(os.path.join(args.output, f"{stem}.png"), save_png)
        if args.entropy_csv:
            scores = selection_scores(img, cfg)

            def save_csv(fh, scores=scores):
                fh.write("grid_row,grid_col,entropy\n")
                for s in scores:
                    fh.write(f"{s.grid_row},{s.grid_col},{s.entropy:.9f}\n")

            _atomic_write(
                os.path.join(args.entropy_csv, f"{stem}.csv"),
                save_csv, binary=False,
            )
    return f"patchsel: {len(names)} images -> {args.output}"


def _cmd_train(args) -> str:
    eset = _load_embeddings(args.embeddings)
    ns = _load_projection(args.proj)
    cfg = TrainConfig(
        bce_weight=args.bce_weight,
        temperature=args.tau,
        learning_rate=args.lr,
        batch_size=args.batch,
        epochs=args.epochs,
        seed=args.seed,
        adapter_width=args.width,
    )
    head = train(eset, ns, cfg)
    _atomic_write(args.out, lambda fh: write_head(head, cfg, fh))
    return f"train: head d={head.dim} h={head.width} -> {args.out}"


def _cmd_eval(args) -> str:
    eset = _load_embeddings(args.embeddings)
    ns = _load_projection(args.proj)
    head, _ = _load_head(args.head)
    report = evaluate(head, ns, eset, args.threshold)
    payload = report_json(report)
    _atomic_write(args.report, lambda fh: fh.write(payload + "\n"), binary=False)
    return payload


def _cmd_export_features(args) -> str:
    eset = _load_embeddings(args.embeddings)
    ns = _load_projection(args.proj)
    head, _ = _load_head(args.head)
    _atomic_write(
        args.out, lambda fh: export_features_csv(head, ns, eset, fh),
        binary=False,
    )
    return f"export-features: {len(eset)} rows -> {args.out}"


def build_parser() -> _Parser:
    parser = _Parser(prog="semnull", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("nullspace", help="build a projector from text vectors")
    p.add_argument("--embeddings", required=True, help="NSEB input file")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out", required=True, help="NSPJ output file")
    p.set_defaults(func=_cmd_nullspace)

    p = sub.add_parser("project", help="decouple visual vectors")
    p.add_argument("--embeddings", required=True, help="NSEB input file")
    p.add_argument("--proj", required=True, help="NSPJ projector file")
    p.add_argument("--out", required=True, help="NSEB output file")
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("patchsel", help="entropy-mosaic a directory of images")
    p.add_argument("--input", required=True, help="directory of PNG/JPEG images")
    p.add_argument("--output", required=True, help="directory for PNG mosaics")
    p.add_argument("--patch", type=int, default=32)
    p.add_argument("--target", type=int, default=224)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--entropy-csv", default=None,
                   help="also write per-patch entropy CSVs here")
    p.set_defaults(func=_cmd_patchsel)

    p = sub.add_parser("train", help="train a detection head")
    p.add_argument("--embeddings", required=True, help="NSEB training file")
    p.add_argument("--proj", required=True, help="NSPJ projector file")
    p.add_argument("--lambda", dest="bce_weight", type=float, default=0.2)
    p.add_argument("--tau", type=float, default=0.07)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=256, help="adapter width")
    p.add_argument("--out", required=True, help="NSHD output file")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a set and write the metric report")
    p.add_argument("--embeddings", required=True, help="NSEB input file")
    p.add_argument("--proj", required=True, help="NSPJ projector file")
    p.add_argument("--head", required=True, help="NSHD head file")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--report", required=True, help="JSON report output file")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export-features", help="dump post-adapter features as CSV")
    p.add_argument("--embeddings", required=True, help="NSEB input file")
    p.add_argument("--proj", required=True, help="NSPJ projector file")
    p.add_argument("--head", required=True, help="NSHD head file")
    p.add_argument("--out", required=True, help="CSV output file")
    p.set_defaults(func=_cmd_export_features)
    return parser


def run(argv) -> CommandOutcome:
    """Execute one subcommand; never raises for expected failure modes.

    Progress and report text go to stdout; the returned diagnostics hold
    error text only (empty on success).
    """
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as e:
        return CommandOutcome(exit_code=2, diagnostics=str(e))
    except SystemExit as e:  # argparse --help
        return CommandOutcome(exit_code=int(e.code or 0))
    if getattr(args, "command", None) is None:
        return CommandOutcome(exit_code=2, diagnostics=parser.format_usage())
    try:
        message = args.func(args)
    except OSError as e:
        path = e.filename if e.filename else ""
        detail = e.strerror if e.strerror else str(e)
        return CommandOutcome(
            exit_code=1, diagnostics=f"cannot access {path}: {detail}".strip()
        )
    except (FormatError, ValueError) as e:
        return CommandOutcome(exit_code=1, diagnostics=str(e))
    if message:
        print(message)
    return CommandOutcome(exit_code=0)


def main() -> None:
    outcome = run(sys.argv[1:])
    if outcome.diagnostics:
        print(outcome.diagnostics, file=sys.stderr)
    sys.exit(outcome.exit_code)
