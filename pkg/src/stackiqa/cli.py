"""Command-line interface: score, ingest, train, predict, evaluate, search,
supporters.

All randomness flows from the single --seed flag, so identical invocations on
identical inputs produce byte-identical outputs. Exit codes: 0 success,
2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from . import stacker
from .errors import DataError, NumericError, StackIqaError
from .evalkit import (
    CvConfig,
    SplitUnit,
    baseline_rows,
    cross_validate,
    per_size_best,
    subset_search,
    supporter_matrix,
)
from .metrics import (
    NiqePristineModel,
    Provenance,
    builtin_registry,
    niqe,
    psnr,
    ssim,
)
from .pairset import ScoreCache, load_manifest, load_pair_images
from .report import (
    write_baselines_csv,
    write_cv_report_csv,
    write_subset_csv,
    write_subset_scatter_svg,
    write_supporters_csv,
    write_supporter_heatmap_svg,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

DEFAULT_TRAIN_METRICS = "pieapp,niqe,topiq,hyperiqa"
DEFAULT_SCORE_METRICS = "psnr,ssim,niqe"


def default_niqe_model_path() -> Path:
    return Path(
        str(resources.files("stackiqa").joinpath("data/niqe_model_default.txt"))
    )


def _metric_list(raw: str) -> list[str]:
    ids = [tok.strip() for tok in raw.split(",") if tok.strip()]
    if not ids:
        raise DataError(f"empty metric list: {raw!r}")
    return ids


def _parse_sizes(raw: str) -> list[int]:
    """Accepts '4', '1-15', '1,2,4' and mixes like '1-3,5'."""
    sizes: list[int] = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "-" in tok:
            lo_s, hi_s = tok.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise DataError(f"bad size range {tok!r}")
            sizes.extend(range(lo, hi + 1))
        else:
            sizes.append(int(tok))
    if not sizes:
        raise DataError(f"empty size list: {raw!r}")
    return sorted(set(sizes))


# scoring worker state (one NIQE model load per worker process)
_SCORE_CTX: dict = {}


def _score_worker_init(metric_ids: list[str], niqe_model_path: str) -> None:
    _SCORE_CTX["metric_ids"] = metric_ids
    if "niqe" in metric_ids:
        _SCORE_CTX["niqe_model"] = NiqePristineModel.load(niqe_model_path)


def _score_worker_run(task) -> list[tuple[str, str, str, float]]:
    pair, wanted = task
    ref, img_a, img_b = load_pair_images(pair)
    rows = []
    for side, img in (("A", img_a), ("B", img_b)):
        for mid in _SCORE_CTX["metric_ids"]:
            if (mid, side) not in wanted:
                continue
            if mid == "psnr":
                value = psnr(ref, img)
            elif mid == "ssim":
                value = ssim(ref, img)
            else:
                value = niqe(img, _SCORE_CTX["niqe_model"])
            rows.append((pair.pair_id, side, mid, value))
    return rows


def cmd_score(args) -> int:
    registry = builtin_registry()
    metric_ids = _metric_list(args.metrics)
    for mid in metric_ids:
        desc = registry.get(mid)
        if desc.provenance is not Provenance.NATIVE:
            raise DataError(
                f"metric {mid!r} is external: compute its scores with an "
                "outside scorer and load them with the 'ingest' command"
            )
    records = load_manifest(args.manifest)
    cache = ScoreCache.load_or_empty(args.cache)

    tasks = []
    for pair in records:
        wanted = {
            (mid, side)
            for mid in metric_ids
            for side in ("A", "B")
            if (pair.pair_id, side, mid) not in cache
        }
        if wanted:
            tasks.append((pair, wanted))

    model_path = str(args.niqe_model or default_niqe_model_path())
    added = 0
    if tasks:
        if args.jobs > 1:
            with ProcessPoolExecutor(
                max_workers=args.jobs,
                initializer=_score_worker_init,
                initargs=(metric_ids, model_path),
            ) as pool:
                all_rows = list(pool.map(_score_worker_run, tasks))
        else:
            _score_worker_init(metric_ids, model_path)
            all_rows = [_score_worker_run(t) for t in tasks]
        for rows in all_rows:
            for pair_id, side, mid, value in rows:
                cache.put(pair_id, side, mid, value)
                added += 1
    cache.save(args.cache)
    print(f"score: {added} new cache rows ({len(records)} pairs, {len(cache)} total)")
    return EXIT_OK


def cmd_ingest(args) -> int:
    cache = ScoreCache.load_or_empty(args.cache)
    total_new = 0
    for scores_path in args.scores:
        total_new += cache.ingest_file(scores_path)
    cache.save(args.cache)
    print(f"ingest: {total_new} new cache rows ({len(cache)} total)")
    return EXIT_OK


def _cv_config(args) -> CvConfig:
    return CvConfig(
        cycles=args.cycles,
        train_fraction=args.train_fraction,
        seed=args.seed,
        split_unit=SplitUnit(args.split_unit),
    )


def _svm_params(args) -> stacker.SvmParams:
    return stacker.SvmParams(
        c=args.svm_c,
        gamma=args.svm_gamma,
        tol=args.svm_tol,
        max_passes=args.max_passes,
    )


def cmd_train(args) -> int:
    records = load_manifest(args.manifest)
    cache = ScoreCache.load(args.cache)
    spec = stacker.FeatureSpec(metric_ids=tuple(_metric_list(args.metrics)))
    model = stacker.train_stack(
        records,
        spec,
        cache,
        params=_svm_params(args),
        seed=args.seed,
        swap_augment=not args.no_swap_augment,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "stack_model.txt"
    stacker.save_stack_model(model, model_path)
    n_sv = model.svm_model.support_xs.shape[0]
    print(f"train: wrote {model_path} ({n_sv} support vectors)")
    return EXIT_OK


def cmd_predict(args) -> int:
    records = load_manifest(args.manifest)
    cache = ScoreCache.load(args.cache)
    model = stacker.load_stack_model(args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pred_path = out / "predictions.csv"
    lines = ["pair_id,decision_value,prediction"]
    for pair in records:
        value = stacker.decision_value(model, pair, cache)
        lines.append(f"{pair.pair_id},{repr(value)},{'A' if value >= 0.0 else 'B'}")
    pred_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"predict: wrote {pred_path} ({len(records)} pairs)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    records = load_manifest(args.manifest)
    cache = ScoreCache.load(args.cache)
    registry = builtin_registry()
    wrote = []
    if args.metrics:
        rows = baseline_rows(
            _metric_list(args.metrics),
            records,
            cache,
            registry,
            include_ties=args.include_ties,
        )
        wrote.append(write_baselines_csv(rows, args.out))
    if args.stack:
        spec = stacker.FeatureSpec(metric_ids=tuple(_metric_list(args.stack)))
        report = cross_validate(
            records,
            spec,
            cache,
            cv=_cv_config(args),
            params=_svm_params(args),
            registry=registry,
            swap_augment=not args.no_swap_augment,
        )
        wrote.append(write_cv_report_csv(report, args.out))
        print(
            f"evaluate: stack {','.join(spec.metric_ids)} median accuracy "
            f"{report.median_accuracy:.4f}"
        )
    if not wrote:
        raise DataError("evaluate: nothing to do (pass --metrics and/or --stack)")
    for path in wrote:
        print(f"evaluate: wrote {path}")
    return EXIT_OK


def cmd_search(args) -> int:
    records = load_manifest(args.manifest)
    cache = ScoreCache.load(args.cache)
    results = subset_search(
        _metric_list(args.pool),
        _parse_sizes(args.sizes),
        records,
        cache,
        cv=_cv_config(args),
        params=_svm_params(args),
        swap_augment=not args.no_swap_augment,
        jobs=args.jobs,
    )
    csv_path = write_subset_csv(results, args.out)
    svg_path = write_subset_scatter_svg(results, args.out)
    print(f"search: evaluated {len(results)} subsets")
    for size, best in per_size_best(results).items():
        print(
            f"search: best size {size}: {','.join(best.metric_ids)} "
            f"median {best.median_accuracy:.4f}"
        )
    print(f"search: wrote {csv_path} and {svg_path}")
    return EXIT_OK


def cmd_supporters(args) -> int:
    records = load_manifest(args.manifest)
    cache = ScoreCache.load(args.cache)
    matrix = supporter_matrix(_metric_list(args.metrics), records, cache)
    csv_path = write_supporters_csv(matrix, args.out)
    svg_path = write_supporter_heatmap_svg(matrix, args.out)
    print(f"supporters: wrote {csv_path} and {svg_path}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, out: bool = False) -> None:
    p.add_argument("--manifest", required=True, help="pair manifest CSV")
    p.add_argument("--cache", required=True, help="score cache CSV")
    p.add_argument("--seed", type=int, default=42, help="global random seed")
    p.add_argument(
        "--jobs",
        type=int,
        default=max(1, os.cpu_count() or 1),
        help="worker parallelism for scoring and subset search",
    )
    p.add_argument(
        "--niqe-model",
        default=None,
        help="pristine NIQE model file (default: shipped model)",
    )
    if out:
        p.add_argument("--out", required=True, help="output directory")


def _add_svm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--svm-c", type=float, default=1.0, help="SVM box constraint")
    p.add_argument(
        "--svm-gamma",
        type=float,
        default=None,
        help="RBF gamma (default: 1/(d*var) heuristic)",
    )
    p.add_argument("--svm-tol", type=float, default=1e-3, help="KKT tolerance")
    p.add_argument(
        "--max-passes",
        type=int,
        default=200,
        help="SMO sweeps without progress before stopping",
    )
    p.add_argument(
        "--no-swap-augment",
        action="store_true",
        help="disable A/B swap augmentation (strict replication mode)",
    )


def _add_cv_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cycles", type=int, default=5, help="train/test cycles")
    p.add_argument(
        "--train-fraction", type=float, default=0.8, help="training split fraction"
    )
    p.add_argument(
        "--split-unit",
        choices=[u.value for u in SplitUnit],
        default=SplitUnit.BY_PAIR.value,
        help="split by pairs or by reference image",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stackiqa",
        description="Pairwise compressed-image quality assessment by stacking "
        "base metrics into an RBF-SVM preference predictor.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="compute native metric scores into the cache")
    _add_common(p)
    p.add_argument(
        "--metrics",
        default=DEFAULT_SCORE_METRICS,
        help="comma-separated native metric ids",
    )
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("ingest", help="merge external score CSVs into the cache")
    p.add_argument("--cache", required=True, help="score cache CSV")
    p.add_argument("scores", nargs="+", help="score CSV files to merge")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the stacked preference model")
    _add_common(p, out=True)
    p.add_argument(
        "--metrics",
        default=DEFAULT_TRAIN_METRICS,
        help="comma-separated metric ids for the feature vector",
    )
    _add_svm_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict preferences with a trained model")
    _add_common(p, out=True)
    p.add_argument("--model", required=True, help="stack model file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser(
        "evaluate", help="single-metric baselines and/or stacked cross-validation"
    )
    _add_common(p, out=True)
    p.add_argument("--metrics", default=None, help="metric ids for baselines.csv")
    p.add_argument("--stack", default=None, help="metric ids for cv_report.csv")
    p.add_argument(
        "--include-ties",
        action="store_true",
        help="keep Tie pairs in baseline denominators (counted wrong)",
    )
    _add_cv_flags(p)
    _add_svm_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("search", help="exhaustive metric-subset search")
    _add_common(p, out=True)
    p.add_argument("--pool", required=True, help="comma-separated metric pool")
    p.add_argument(
        "--sizes", required=True, help="subset sizes, e.g. '4' or '1-15' or '1,2,4'"
    )
    _add_cv_flags(p)
    _add_svm_flags(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("supporters", help="supporter accuracy matrix")
    _add_common(p, out=True)
    p.add_argument(
        "--metrics", required=True, help="comma-separated metric ids to cross"
    )
    p.set_defaults(func=cmd_supporters)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"stackiqa: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except StackIqaError as exc:
        print(f"stackiqa: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
