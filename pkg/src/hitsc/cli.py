"""Command-line workbench: ``hitsc validate|dissim|hierarchy|bench|stats|synth``.

Exit codes: 0 success, 1 usage, 2 data or format error, 3 internal error.
Diagnostics go to standard error; artifacts go to files.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bench import (
    RunConfig,
    load_dataset,
    parse_config,
    read_results_csv,
    run_benchmark,
    write_results_csv,
)
from .data import DataFormatError, DomainError, save_ucr_tsv
from .dissim import DissimilarityMatrix, Measure, dissimilarity
from .hierarchy import build_hierarchy, to_newick, tree_to_json
from .stats import average_ranks, cd_diagram_svg, compare_methods
from .synth import PRESETS, generate_planted

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("hitsc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def cmd_validate(args) -> int:
    data = load_dataset(args.path)
    counts = ", ".join(f"{n}:{k}" for n, k in zip(data.class_names, data.class_counts()))
    print(f"c={data.num_classes} N={data.n_samples} L={data.length}")
    print(f"class counts: {counts}")
    return EXIT_OK


def cmd_dissim(args) -> int:
    if not args.dataset:
        raise UsageError("dissim needs --dataset")
    data = load_dataset(args.dataset, args.seed)
    matrix = dissimilarity(data, Measure(args.measure.upper()), seed=args.seed)
    matrix.validate()
    out = Path(args.out) if args.out else Path(f"{args.measure.lower()}.json")
    _write(out, matrix.to_json() + "\n")
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def cmd_hierarchy(args) -> int:
    try:
        matrix = DissimilarityMatrix.from_json(Path(args.matrix).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise DataFormatError(f"{args.matrix}: {exc}") from None
    tree = build_hierarchy(matrix, seed=args.seed)
    out = Path(args.out) if args.out else Path("tree.json")
    _write(out, tree_to_json(tree) + "\n")
    if args.newick:
        names = list(matrix.class_names)
        _write(Path(args.newick), to_newick(tree, names) + "\n")
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def _bench_config(args) -> RunConfig:
    if args.config:
        config = parse_config(Path(args.config).read_text(encoding="utf-8"))
    elif args.dataset:
        config = RunConfig(datasets=_csv_list(args.dataset))
    else:
        raise UsageError("bench needs --config or --dataset")
    overrides = {}
    if args.config and args.dataset:
        overrides["datasets"] = _csv_list(args.dataset)
    for key in ("measure", "classifier", "mode"):
        value = getattr(args, key)
        if value:
            overrides[key + "s"] = _csv_list(value)
    for key in ("folds", "seed", "alpha", "out", "jobs"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return replace(config, **overrides) if overrides else config


def cmd_bench(args) -> int:
    config = _bench_config(args)
    results = run_benchmark(config)
    out = Path(config.out) / "results.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_results_csv(results, out)
    failed = sum(math.isnan(r.f1_macro) for r in results)
    print(f"wrote {out}: {len(results)} rows, {failed} failed", file=sys.stderr)
    if results and failed == len(results):
        return EXIT_DATA
    return EXIT_OK


def cmd_stats(args) -> int:
    results = read_results_csv(args.results)
    table = average_ranks(results)
    alpha = args.alpha if args.alpha is not None else 0.05
    report = compare_methods(table, alpha=alpha)
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ranks.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", *table.methods])
        for name, row in zip(table.datasets, table.ranks):
            writer.writerow([name, *(f"{r:g}" for r in row)])
    _write(out / "report.json", report.to_json() + "\n")
    _write(out / "cd_diagram.svg", cd_diagram_svg(report))
    print(f"Friedman chi2={report.friedman_stat:.4f} p={report.friedman_p:.4g} "
          f"(k={len(table.methods)}, N={len(table.datasets)})", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    preset_name = args.dataset or "separable"
    if preset_name not in PRESETS:
        raise UsageError(f"unknown preset {preset_name!r} (choose from {', '.join(PRESETS)})")
    spec = replace(PRESETS[preset_name], seed=args.seed)
    dataset, tree = generate_planted(spec)
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    save_ucr_tsv(dataset, out / f"{dataset.name}_TRAIN.tsv")
    _write(out / f"{dataset.name}_tree.json", tree_to_json(tree) + "\n")
    print(f"wrote {out / (dataset.name + '_TRAIN.tsv')}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hitsc", description="Hierarchical time series classification workbench.")
    parser.add_argument("--version", action="version", version=f"hitsc {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("validate", help="load a dataset and report its shape")
    p.add_argument("path", help="UCR file, dataset directory or synth:<preset>[:<seed>]")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dissim", help="compute a class dissimilarity matrix")
    p.add_argument("--dataset", required=True)
    p.add_argument("--measure", choices=["jsd", "tsd", "cbd"], type=str.lower, default="jsd")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output JSON file (default <measure>.json)")
    p.set_defaults(func=cmd_dissim)

    p = sub.add_parser("hierarchy", help="build a class hierarchy from a matrix file")
    p.add_argument("matrix")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output tree JSON (default tree.json)")
    p.add_argument("--newick", help="also write a Newick file")
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("bench", help="run the HC vs FC cross-validation grid")
    p.add_argument("--config")
    p.add_argument("--dataset", help="comma-separated dataset references")
    p.add_argument("--measure", help="comma-separated subset of jsd,tsd,cbd")
    p.add_argument("--classifier", help="comma-separated subset of minirocket,stsf,svm")
    p.add_argument("--mode", help="comma-separated subset of hc,fc")
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", help="output directory for results.csv")
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="ranks, Friedman and Wilcoxon-Holm tests, CD diagram")
    p.add_argument("results", help="results CSV written by bench")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="write a planted-hierarchy dataset and its tree")
    p.add_argument("--dataset", help="preset name (default separable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hitsc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, DomainError, FileNotFoundError, ValueError) as exc:
        print(f"hitsc {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
